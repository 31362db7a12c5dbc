#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctts/baselines.hpp"
#include "ctts/data.hpp"
#include "ctts/rng.hpp"
#include "oracles.hpp"

using namespace ctts;

namespace {

std::vector<double> white_noise_window(std::uint64_t seed, int n = 80) {
    Rng rng(seed);
    std::vector<double> w;
    for (int i = 0; i < n; ++i) w.push_back(100.0 + 0.5 * rng.gaussian());
    return w;
}

std::vector<double> random_walk_window(std::uint64_t seed, int n = 80) {
    Rng rng(seed);
    std::vector<double> w;
    double p = 100.0;
    for (int i = 0; i < n; ++i) {
        p *= std::exp(0.002 * rng.gaussian());
        w.push_back(p);
    }
    return w;
}

void check_prob_invariants(const ClassProbPrediction& pred) {
    double sum = 0.0;
    for (double p : pred.probs) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    int argmax = -1;
    for (int idx = 1; idx < 3; ++idx)
        if (pred.probs[idx] > pred.probs[argmax + 1]) argmax = idx - 1;
    CHECK(pred.predicted_class == argmax);
    CHECK(pred.confidence == pred.probs[pred.predicted_class + 1]);
}

}  // namespace

TEST_CASE("arima on white noise finds no structure") {
    int within = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ArimaFitResult r = arima_fit(white_noise_window(seed), {1, 0, 0});
        CHECK(r.converged);
        if (std::abs(r.model.phi[0]) < 0.2) ++within;
    }
    CHECK(within >= 45);
}

TEST_CASE("arima recovers a known AR(1) coefficient") {
    Rng rng(7);
    std::vector<double> y;
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
        prev = 0.8 * prev + rng.gaussian();
        y.push_back(prev);
    }
    ArimaFitResult r = arima_fit(y, {1, 0, 0});
    CHECK(r.converged);
    CHECK(r.model.phi[0] == doctest::Approx(0.8).epsilon(0.125));
    CHECK(std::abs(r.model.phi[0] - 0.8) < 0.1);
}

TEST_CASE("arima recovers a known MA(1) coefficient") {
    Rng rng(11);
    std::vector<double> y;
    double prev_eps = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double eps = rng.gaussian();
        y.push_back(eps + 0.5 * prev_eps);
        prev_eps = eps;
    }
    ArimaFitResult r = arima_fit(y, {0, 0, 1});
    CHECK_FALSE(r.ar_only_fallback);
    CHECK(r.model.theta[0] == doctest::Approx(0.5).epsilon(0.3));
}

TEST_CASE("pure differencing kills a constant") {
    std::vector<double> flat(80, 42.0);
    ArimaFitResult r = arima_fit(flat, {0, 1, 0});
    CHECK(r.converged);
    CHECK(r.model.intercept == 0.0);
    for (double e : r.model.residual_history) CHECK(e == 0.0);
    // the prediction recipe cannot normalize over a zero-variance window
    CHECK_THROWS_AS(arima_predict(r.model, flat, 1e-4), DegenerateWindowError);
}

TEST_CASE("random-walk and unit-AR models forecast exact persistence") {
    std::vector<double> window = random_walk_window(3);

    ArimaFitResult rw = arima_fit(window, {0, 1, 0});
    ClassProbPrediction pred = arima_predict(rw.model, window, 0.0);
    CHECK(pred.predicted_class == 0);  // band 0 admits only an exact zero return
    check_prob_invariants(pred);

    ArimaModel unit;
    unit.p = 1;
    unit.phi = {1.0};
    ClassProbPrediction unit_pred = arima_predict(unit, window, 0.0);
    CHECK(unit_pred.predicted_class == 0);
    // empty residual history means zero in-sample error, full confidence
    CHECK(unit_pred.probs[1] == 1.0);
    CHECK(unit_pred.confidence == 1.0);
}

TEST_CASE("an upward drift fixture is classed +1") {
    std::vector<double> window;
    Rng rng(19);
    double p = 100.0;
    for (int i = 0; i < 80; ++i) {
        p *= std::exp(0.005 + 0.0005 * rng.gaussian());
        window.push_back(p);
    }
    for (ArimaOrders orders : {ArimaOrders{1, 1, 0}, ArimaOrders{2, 1, 1}}) {
        ArimaFitResult r = arima_fit(window, orders);
        ClassProbPrediction pred = arima_predict(r.model, window, 1e-4);
        CHECK(pred.predicted_class == 1);
        check_prob_invariants(pred);
    }
}

TEST_CASE("probability recipe invariants hold across random windows") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        std::vector<double> window = random_walk_window(seed);
        ArimaFitResult ar = arima_fit(window, {2, 1, 1});
        check_prob_invariants(arima_predict(ar.model, window, 1e-4));
        EmaModel ema = ema_fit(window);
        check_prob_invariants(ema_predict(ema, window, 1e-4));
    }
}

TEST_CASE("a poor fit can outweigh the point class") {
    // in-sample errors huge relative to the window spread -> c near zero ->
    // the two off-point classes tie and the argmax falls to the lower one
    std::vector<double> window = random_walk_window(5);
    ArimaModel bad;
    bad.p = 1;
    bad.phi = {1.0};
    bad.intercept = window.back() * 0.01;  // forces point class +1
    bad.residual_history.assign(80, 1e6);
    ClassProbPrediction pred = arima_predict(bad, window, 1e-4);
    CHECK(pred.probs[2] < 1e-6);
    CHECK(pred.predicted_class == -1);
    CHECK(pred.confidence == doctest::Approx(0.5).epsilon(1e-6));
    check_prob_invariants(pred);
}

TEST_CASE("arima input validation") {
    std::vector<double> window = random_walk_window(1);
    CHECK_THROWS_AS(arima_fit(window, {-1, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(arima_fit(window, {0, -1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(arima_fit(window, {0, 0, -1}), std::invalid_argument);
    std::vector<double> seven(window.begin(), window.begin() + 7);
    CHECK_NOTHROW(arima_fit(seven, {1, 0, 0}));  // 7 - 0 > 1 + 0 + 5
    std::vector<double> six(window.begin(), window.begin() + 6);
    CHECK_THROWS_AS(arima_fit(six, {1, 0, 0}), std::invalid_argument);

    ArimaModel model = arima_fit(window, {2, 1, 1}).model;
    std::vector<double> tiny(window.begin(), window.begin() + 3);
    CHECK_THROWS_AS(arima_predict(model, tiny, 1e-4), std::invalid_argument);
}

TEST_CASE("ema objective matches the unrolled closed form") {
    Rng rng(23);
    for (int it = 0; it < 30; ++it) {
        std::vector<double> window = random_walk_window(200 + it, 40);
        const double alpha = rng.uniform(0.05, 1.0);
        const double init = rng.uniform(90.0, 110.0);
        double sse = 0.0;
        for (std::size_t t = 0; t < window.size(); ++t) {
            const double f = oracles::ema_forecast_unrolled(window, alpha, init, t);
            sse += (f - window[t]) * (f - window[t]);
        }
        const double got = ema_objective(window, alpha, init);
        CHECK(std::abs(got - sse) < 1e-9 * std::max(1.0, std::abs(sse)));
    }
}

TEST_CASE("ema_optimal_init solves the per-alpha least squares problem") {
    Rng rng(29);
    for (int it = 0; it < 20; ++it) {
        std::vector<double> window = random_walk_window(300 + it, 30);
        const double alpha = rng.uniform(0.05, 0.95);

        // forecast_t = a_t*init + c_t; minimize sum (a_t*init + c_t - p_t)^2
        double a = 1.0, c = 0.0, num = 0.0, den = 0.0;
        for (double p : window) {
            num += a * (p - c);
            den += a * a;
            c = alpha * p + (1.0 - alpha) * c;
            a *= 1.0 - alpha;
        }
        const double oracle = num / den;
        const double got = ema_optimal_init(window, alpha);
        CHECK(got == doctest::Approx(oracle).epsilon(1e-12));

        const double at_opt = ema_objective(window, alpha, got);
        for (double delta : {1e-3, 0.1, 10.0}) {
            CHECK(at_opt <= ema_objective(window, alpha, got + delta));
            CHECK(at_opt <= ema_objective(window, alpha, got - delta));
        }
    }
}

TEST_CASE("ema_fit on a constant window prefers the largest alpha") {
    std::vector<double> flat(80, 7.25);
    EmaModel m = ema_fit(flat);
    CHECK(m.alpha == 1.0);
    CHECK(m.initial_forecast == 7.25);
    CHECK(ema_objective(flat, m.alpha, m.initial_forecast) == 0.0);
}

TEST_CASE("ema_fit on a strong trend pushes alpha toward 1") {
    std::vector<double> window;
    double p = 100.0;
    for (int i = 0; i < 80; ++i) {
        p *= 1.01;
        window.push_back(p);
    }
    EmaModel m = ema_fit(window);
    CHECK(m.alpha > 0.9);
}

TEST_CASE("ema_fit beats every point of the verification grids") {
    for (std::uint64_t seed = 400; seed < 405; ++seed) {
        std::vector<double> window = random_walk_window(seed);
        EmaModel m = ema_fit(window);
        CHECK(m.alpha > 0.0);
        CHECK(m.alpha <= 1.0);
        const double fit_obj = ema_objective(window, m.alpha, m.initial_forecast);

        // fine alpha grid with the closed-form init
        double grid_best = std::numeric_limits<double>::infinity();
        for (int i = 1; i <= 1000; ++i) {
            const double alpha = i / 1000.0;
            grid_best = std::min(grid_best,
                                 ema_objective(window, alpha, ema_optimal_init(window, alpha)));
        }
        CHECK(fit_obj <= grid_best + 1e-9 * std::max(1.0, grid_best));

        // coarse 100x100 joint grid over alpha and init
        const auto [lo_it, hi_it] = std::minmax_element(window.begin(), window.end());
        for (int i = 1; i <= 100; i += 9) {
            const double alpha = i / 100.0;
            for (int j = 0; j < 100; j += 9) {
                const double init = *lo_it + (*hi_it - *lo_it) * j / 99.0;
                CHECK(fit_obj <= ema_objective(window, alpha, init) + 1e-9);
            }
        }
    }
}

TEST_CASE("ema alpha=1 is exact persistence") {
    std::vector<double> window = random_walk_window(8);
    EmaModel persist{1.0, window.front()};
    ClassProbPrediction pred = ema_predict(persist, window, 0.0);
    CHECK(pred.predicted_class == 0);  // forecast equals the last price exactly
    CHECK(pred.probs[1] == pred.confidence);
    check_prob_invariants(pred);

    std::vector<double> flat(80, 3.0);
    CHECK_THROWS_AS(ema_predict(persist, flat, 1e-4), DegenerateWindowError);
}

TEST_CASE("ema input validation") {
    CHECK_THROWS_AS(ema_fit({1.0, 2.0}), std::invalid_argument);
    std::vector<double> window = random_walk_window(9);
    CHECK_THROWS_AS(ema_predict({0.0, 100.0}, window, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(ema_predict({1.5, 100.0}, window, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(ema_predict({0.5, 100.0}, {}, 1e-4), std::invalid_argument);
}

TEST_CASE("naive constant prediction is a one-hot distribution") {
    for (int cls = -1; cls <= 1; ++cls) {
        ClassProbPrediction pred = naive_constant_predict(cls);
        CHECK(pred.predicted_class == cls);
        CHECK(pred.confidence == 1.0);
        for (int other = -1; other <= 1; ++other)
            CHECK(pred.probs[other + 1] == (other == cls ? 1.0 : 0.0));
        check_prob_invariants(pred);
    }
    CHECK_THROWS_AS(naive_constant_predict(2), std::invalid_argument);

    // accuracy of a fixed class equals its empirical frequency
    std::vector<int> labels = {1, 1, -1, 0, 1, 0, 1, -1};
    int hits = 0;
    for (int l : labels)
        if (naive_constant_predict(1).predicted_class == l) ++hits;
    CHECK(hits == 4);
}
