#include "ctts/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace ctts {

namespace {

std::vector<double> difference(const std::vector<double>& x) {
    std::vector<double> out;
    out.reserve(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) out.push_back(x[i] - x[i - 1]);
    return out;
}

double sample_std(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Least squares via normal equations with partial pivoting; nullopt when
// the system is numerically singular.
std::optional<std::vector<double>> solve_least_squares(const std::vector<std::vector<double>>& a,
                                                       const std::vector<double>& b) {
    const std::size_t rows = a.size();
    const std::size_t cols = a.empty() ? 0 : a[0].size();
    if (cols == 0 || rows < cols) return std::nullopt;
    std::vector<std::vector<double>> ata(cols, std::vector<double>(cols, 0.0));
    std::vector<double> atb(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < cols; ++i) {
            atb[i] += a[r][i] * b[r];
            for (std::size_t j = i; j < cols; ++j) ata[i][j] += a[r][i] * a[r][j];
        }
    }
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < i; ++j) ata[i][j] = ata[j][i];

    double scale = 0.0;
    for (std::size_t i = 0; i < cols; ++i) scale = std::max(scale, std::abs(ata[i][i]));
    const double tol = 1e-12 * std::max(1.0, scale);

    for (std::size_t col = 0; col < cols; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < cols; ++r)
            if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
        if (std::abs(ata[pivot][col]) < tol) return std::nullopt;
        std::swap(ata[pivot], ata[col]);
        std::swap(atb[pivot], atb[col]);
        for (std::size_t r = col + 1; r < cols; ++r) {
            const double f = ata[r][col] / ata[col][col];
            for (std::size_t c = col; c < cols; ++c) ata[r][c] -= f * ata[col][c];
            atb[r] -= f * atb[col];
        }
    }
    std::vector<double> x(cols, 0.0);
    for (std::size_t i = cols; i-- > 0;) {
        double v = atb[i];
        for (std::size_t j = i + 1; j < cols; ++j) v -= ata[i][j] * x[j];
        x[i] = v / ata[i][i];
    }
    for (double v : x)
        if (!std::isfinite(v)) return std::nullopt;
    return x;
}

void recompute_residuals(const std::vector<double>& y, const ArimaModel& m,
                         std::vector<double>& eps) {
    const int start = std::max(m.p, m.q);
    for (int t = 0; t < static_cast<int>(y.size()); ++t) {
        if (t < start) {
            eps[t] = 0.0;
            continue;
        }
        double pred = m.intercept;
        for (int i = 0; i < m.p; ++i) pred += m.phi[i] * y[t - 1 - i];
        for (int j = 0; j < m.q; ++j) pred += m.theta[j] * eps[t - 1 - j];
        eps[t] = y[t] - pred;
    }
}

ClassProbPrediction prediction_from_point(int point_class, double normalized_error) {
    ClassProbPrediction out;
    const double c = std::exp(-normalized_error);
    const double rest = (1.0 - c) / 2.0;
    for (int cls = -1; cls <= 1; ++cls) out.probs[cls + 1] = cls == point_class ? c : rest;
    out.predicted_class = -1;
    for (int idx = 1; idx < 3; ++idx)
        if (out.probs[idx] > out.probs[out.predicted_class + 1]) out.predicted_class = idx - 1;
    out.confidence = out.probs[out.predicted_class + 1];
    return out;
}

// Mean absolute one-step error over the window, divided by the sample
// standard deviation of the window prices.
double normalized_error(const std::vector<double>& abs_errors, const std::vector<double>& window) {
    const double sd = sample_std(window);
    if (!(sd > 0.0)) throw DegenerateWindowError("window standard deviation is zero");
    if (abs_errors.empty()) return 0.0;
    double sum = 0.0;
    for (double e : abs_errors) sum += std::abs(e);
    return sum / static_cast<double>(abs_errors.size()) / sd;
}

}  // namespace

ArimaFitResult arima_fit(const std::vector<double>& window, const ArimaOrders& orders) {
    if (orders.p < 0 || orders.d < 0 || orders.q < 0)
        throw std::invalid_argument("ARIMA orders must be non-negative");
    const int n = static_cast<int>(window.size());
    if (n - orders.d <= orders.p + orders.q + 5)
        throw std::invalid_argument("window too short for the requested ARIMA orders");

    std::vector<double> y = window;
    for (int i = 0; i < orders.d; ++i) y = difference(y);

    ArimaFitResult result;
    ArimaModel& m = result.model;
    m.p = orders.p;
    m.d = orders.d;
    m.q = orders.q;
    m.phi.assign(orders.p, 0.0);
    m.theta.assign(orders.q, 0.0);

    if (orders.p + orders.q == 0) {
        m.intercept = 0.0;
        m.residual_history = y;
        result.converged = true;
        return result;
    }

    const int start = std::max(orders.p, orders.q);
    const int rows = static_cast<int>(y.size()) - start;
    std::vector<double> eps(y.size(), 0.0);
    std::vector<double> prev(1 + orders.p + orders.q, 0.0);
    bool ar_only = false;

    if (orders.q > 0) {
        // Bootstrap the residuals with an AR-only pass; otherwise the MA
        // columns are identically zero and the first regression is singular.
        std::vector<std::vector<double>> a(rows);
        std::vector<double> b(rows);
        for (int r = 0; r < rows; ++r) {
            const int t = start + r;
            a[r].push_back(1.0);
            for (int i = 0; i < orders.p; ++i) a[r].push_back(y[t - 1 - i]);
            b[r] = y[t];
        }
        if (auto solved = solve_least_squares(a, b)) {
            m.intercept = (*solved)[0];
            for (int i = 0; i < orders.p; ++i) m.phi[i] = (*solved)[1 + i];
            recompute_residuals(y, m, eps);
        }
    }

    for (int iter = 1; iter <= 50; ++iter) {
        result.iterations = iter;
        const int q_cols = ar_only ? 0 : orders.q;
        std::vector<std::vector<double>> a(rows);
        std::vector<double> b(rows);
        for (int r = 0; r < rows; ++r) {
            const int t = start + r;
            auto& row = a[r];
            row.reserve(1 + orders.p + q_cols);
            row.push_back(1.0);
            for (int i = 0; i < orders.p; ++i) row.push_back(y[t - 1 - i]);
            for (int j = 0; j < q_cols; ++j) row.push_back(eps[t - 1 - j]);
            b[r] = y[t];
        }
        auto solved = solve_least_squares(a, b);
        if (!solved && !ar_only && orders.q > 0) {
            ar_only = true;
            result.ar_only_fallback = true;
            std::fill(m.theta.begin(), m.theta.end(), 0.0);
            for (auto& row : a) row.resize(1 + orders.p);
            solved = solve_least_squares(a, b);
        }
        if (!solved) {
            // Nothing identifiable beyond a constant level.
            ar_only = true;
            result.ar_only_fallback = true;
            double mean = 0.0;
            for (double v : b) mean += v;
            m.intercept = rows > 0 ? mean / rows : 0.0;
            std::fill(m.phi.begin(), m.phi.end(), 0.0);
            std::fill(m.theta.begin(), m.theta.end(), 0.0);
            recompute_residuals(y, m, eps);
            result.converged = true;
            break;
        }
        m.intercept = (*solved)[0];
        for (int i = 0; i < orders.p; ++i) m.phi[i] = (*solved)[1 + i];
        for (int j = 0; j < orders.q; ++j) m.theta[j] = ar_only ? 0.0 : (*solved)[1 + orders.p + j];

        std::vector<double> current(prev.size(), 0.0);
        current[0] = m.intercept;
        for (int i = 0; i < orders.p; ++i) current[1 + i] = m.phi[i];
        for (int j = 0; j < orders.q; ++j) current[1 + orders.p + j] = m.theta[j];
        double change = 0.0;
        for (std::size_t i = 0; i < prev.size(); ++i)
            change = std::max(change, std::abs(current[i] - prev[i]));
        prev = current;

        recompute_residuals(y, m, eps);
        if (change < 1e-8) {
            result.converged = true;
            break;
        }
    }

    m.residual_history = eps;
    return result;
}

ClassProbPrediction arima_predict(const ArimaModel& model, const std::vector<double>& window,
                                  double neutral_band) {
    const int n = static_cast<int>(window.size());
    if (n <= model.d + std::max(model.p, model.q))
        throw std::invalid_argument("window too short for this ARIMA model");

    // Stack of series at each differencing level; level 0 is the prices.
    std::vector<std::vector<double>> levels = {window};
    for (int i = 0; i < model.d; ++i) levels.push_back(difference(levels.back()));
    const std::vector<double>& y = levels.back();

    double y_hat = model.intercept;
    for (int i = 0; i < model.p; ++i) y_hat += model.phi[i] * y[y.size() - 1 - i];
    for (int j = 0; j < model.q; ++j) {
        if (static_cast<int>(model.residual_history.size()) < model.q)
            throw std::invalid_argument("residual history shorter than q");
        y_hat += model.theta[j] * model.residual_history[model.residual_history.size() - 1 - j];
    }
    double forecast = y_hat;
    for (int level = model.d - 1; level >= 0; --level) forecast += levels[level].back();

    // In-sample one-step absolute errors on the differenced series equal
    // the price-level errors: undifferencing adds only observed values,
    // which cancel.
    std::vector<double> residuals(model.residual_history);
    const int start = std::max(model.p, model.q);
    std::vector<double> abs_errors;
    for (int t = start; t < static_cast<int>(residuals.size()); ++t)
        abs_errors.push_back(std::abs(residuals[t]));

    const int point_class = label_sign(forecast, window.back(), neutral_band);
    return prediction_from_point(point_class, normalized_error(abs_errors, window));
}

double ema_objective(const std::vector<double>& window, double alpha, double init) {
    double forecast = init;
    double sse = 0.0;
    for (double p : window) {
        const double err = forecast - p;
        sse += err * err;
        forecast = alpha * p + (1.0 - alpha) * forecast;
    }
    return sse;
}

double ema_optimal_init(const std::vector<double>& window, double alpha) {
    // Unrolled: forecast_t = a_t * init + c_t with a_t = (1-alpha)^(t-1).
    double a = 1.0;
    double c = 0.0;
    double num = 0.0;
    double den = 0.0;
    for (double p : window) {
        num += a * (p - c);
        den += a * a;
        c = alpha * p + (1.0 - alpha) * c;
        a *= 1.0 - alpha;
    }
    return num / den;  // den >= 1 since a_1 = 1
}

EmaModel ema_fit(const std::vector<double>& window) {
    if (window.size() < 3) throw std::invalid_argument("EMA fit needs at least 3 prices");

    double best_alpha = 0.01;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= 100; ++i) {
        const double alpha = i / 100.0;
        const double obj = ema_objective(window, alpha, ema_optimal_init(window, alpha));
        if (obj <= best_obj) {
            best_obj = obj;
            best_alpha = alpha;
        }
    }

    double lo = std::max(1e-6, best_alpha - 0.01);
    double hi = std::min(1.0, best_alpha + 0.01);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = ema_objective(window, x1, ema_optimal_init(window, x1));
    double f2 = ema_objective(window, x2, ema_optimal_init(window, x2));
    for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = ema_objective(window, x1, ema_optimal_init(window, x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = ema_objective(window, x2, ema_optimal_init(window, x2));
        }
    }
    const double golden_alpha = (lo + hi) / 2.0;
    const double golden_obj = ema_objective(window, golden_alpha, ema_optimal_init(window, golden_alpha));

    const double alpha = golden_obj < best_obj ? golden_alpha : best_alpha;
    return {alpha, ema_optimal_init(window, alpha)};
}

ClassProbPrediction ema_predict(const EmaModel& model, const std::vector<double>& window,
                                double neutral_band) {
    if (window.empty()) throw std::invalid_argument("window is empty");
    if (!(model.alpha > 0.0 && model.alpha <= 1.0))
        throw std::invalid_argument("alpha must be in (0,1]");
    double forecast = model.initial_forecast;
    std::vector<double> abs_errors;
    abs_errors.reserve(window.size());
    for (double p : window) {
        abs_errors.push_back(std::abs(forecast - p));
        forecast = model.alpha * p + (1.0 - model.alpha) * forecast;
    }
    const int point_class = label_sign(forecast, window.back(), neutral_band);
    return prediction_from_point(point_class, normalized_error(abs_errors, window));
}

ClassProbPrediction naive_constant_predict(int fixed_class) {
    if (fixed_class < -1 || fixed_class > 1)
        throw std::invalid_argument("class must be -1, 0 or +1");
    ClassProbPrediction out;
    out.probs[fixed_class + 1] = 1.0;
    out.predicted_class = fixed_class;
    out.confidence = 1.0;
    return out;
}

}  // namespace ctts
