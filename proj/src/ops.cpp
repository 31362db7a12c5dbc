#include "ctts/ops.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ctts {

namespace {

std::atomic<std::int64_t> g_ce_clamp_count{0};

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    std::ostringstream os;
    os << op << ": incompatible shapes " << a.shape_str() << " and " << b.shape_str();
    throw std::invalid_argument(os.str());
}

void require_2d(const char* op, const Tensor& t) {
    if (t.ndim() != 2) {
        std::ostringstream os;
        os << op << ": expected a 2-D tensor, got " << t.shape_str();
        throw std::invalid_argument(os.str());
    }
}

bool track(Tape* tape, const Tensor& t) { return tape != nullptr && t.requires_grad(); }

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    require_2d("matmul", a);
    require_2d("matmul", b);
    if (a.dim(1) != b.dim(0)) shape_error("matmul", a, b);
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);

    const bool tracked = track(tape, a) || track(tape, b);
    Tensor out({m, n}, tracked);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double aip = av[static_cast<std::size_t>(i) * k + p];
            if (aip == 0.0) continue;
            const std::size_t brow = static_cast<std::size_t>(p) * n;
            const std::size_t orow = static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ov[orow + j] += aip * bv[brow + j];
        }

    if (tracked) {
        tape->record([a, b, out, m, k, n]() {
            const auto& og = out.grad();
            if (a.requires_grad()) {
                auto& ag = const_cast<Tensor&>(a).grad();
                const auto& bv2 = b.values();
                // dA = dC * B^T
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        double s = 0.0;
                        const std::size_t orow = static_cast<std::size_t>(i) * n;
                        const std::size_t brow = static_cast<std::size_t>(p) * n;
                        for (int j = 0; j < n; ++j) s += og[orow + j] * bv2[brow + j];
                        ag[static_cast<std::size_t>(i) * k + p] += s;
                    }
            }
            if (b.requires_grad()) {
                auto& bg = const_cast<Tensor&>(b).grad();
                const auto& av2 = a.values();
                // dB = A^T * dC
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double aip = av2[static_cast<std::size_t>(i) * k + p];
                        if (aip == 0.0) continue;
                        const std::size_t orow = static_cast<std::size_t>(i) * n;
                        const std::size_t brow = static_cast<std::size_t>(p) * n;
                        for (int j = 0; j < n; ++j) bg[brow + j] += aip * og[orow + j];
                    }
            }
        });
    }
    return out;
}

Tensor matmul_bt(Tape* tape, const Tensor& a, const Tensor& b) {
    require_2d("matmul_bt", a);
    require_2d("matmul_bt", b);
    if (a.dim(1) != b.dim(1)) shape_error("matmul_bt", a, b);
    const int m = a.dim(0), k = a.dim(1), n = b.dim(0);

    const bool tracked = track(tape, a) || track(tape, b);
    Tensor out({m, n}, tracked);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            const std::size_t arow = static_cast<std::size_t>(i) * k;
            const std::size_t brow = static_cast<std::size_t>(j) * k;
            for (int p = 0; p < k; ++p) s += av[arow + p] * bv[brow + p];
            ov[static_cast<std::size_t>(i) * n + j] = s;
        }

    if (tracked) {
        tape->record([a, b, out, m, k, n]() {
            const auto& og = out.grad();
            if (a.requires_grad()) {
                auto& ag = const_cast<Tensor&>(a).grad();
                const auto& bv2 = b.values();
                // dA = dC * B
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double g = og[static_cast<std::size_t>(i) * n + j];
                        if (g == 0.0) continue;
                        const std::size_t arow = static_cast<std::size_t>(i) * k;
                        const std::size_t brow = static_cast<std::size_t>(j) * k;
                        for (int p = 0; p < k; ++p) ag[arow + p] += g * bv2[brow + p];
                    }
            }
            if (b.requires_grad()) {
                auto& bg = const_cast<Tensor&>(b).grad();
                const auto& av2 = a.values();
                // dB = dC^T * A
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double g = og[static_cast<std::size_t>(i) * n + j];
                        if (g == 0.0) continue;
                        const std::size_t arow = static_cast<std::size_t>(i) * k;
                        const std::size_t brow = static_cast<std::size_t>(j) * k;
                        for (int p = 0; p < k; ++p) bg[brow + p] += g * av2[arow + p];
                    }
            }
        });
    }
    return out;
}

Tensor conv1d_same(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d("conv1d_same", x);
    if (w.ndim() != 3)
        throw std::invalid_argument("conv1d_same: kernel must be (k, c_in, c_out), got " + w.shape_str());
    if (b.ndim() != 1)
        throw std::invalid_argument("conv1d_same: bias must be 1-D, got " + b.shape_str());
    const int T = x.dim(0), cin = x.dim(1);
    const int k = w.dim(0), cout = w.dim(2);
    if (k < 1) throw std::invalid_argument("conv1d_same: kernel size must be >= 1");
    if (k > T) {
        std::ostringstream os;
        os << "conv1d_same: kernel size " << k << " exceeds input length " << T;
        throw std::invalid_argument(os.str());
    }
    if (w.dim(1) != cin) shape_error("conv1d_same", x, w);
    if (b.dim(0) != cout) shape_error("conv1d_same", w, b);

    const int pad_left = (k - 1) / 2;
    const bool tracked = track(tape, x) || track(tape, w) || track(tape, b);
    Tensor out({T, cout}, tracked);
    const auto& xv = x.values();
    const auto& wv = w.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (int t = 0; t < T; ++t) {
        const std::size_t orow = static_cast<std::size_t>(t) * cout;
        for (int co = 0; co < cout; ++co) ov[orow + co] = bv[co];
        for (int j = 0; j < k; ++j) {
            const int s = t + j - pad_left;
            if (s < 0 || s >= T) continue;
            for (int ci = 0; ci < cin; ++ci) {
                const double xs = xv[static_cast<std::size_t>(s) * cin + ci];
                if (xs == 0.0) continue;
                const std::size_t wrow = (static_cast<std::size_t>(j) * cin + ci) * cout;
                for (int co = 0; co < cout; ++co) ov[orow + co] += xs * wv[wrow + co];
            }
        }
    }

    if (tracked) {
        tape->record([x, w, b, out, T, cin, k, cout, pad_left]() {
            const auto& og = out.grad();
            if (b.requires_grad()) {
                auto& bg = const_cast<Tensor&>(b).grad();
                for (int t = 0; t < T; ++t)
                    for (int co = 0; co < cout; ++co)
                        bg[co] += og[static_cast<std::size_t>(t) * cout + co];
            }
            if (w.requires_grad()) {
                auto& wg = const_cast<Tensor&>(w).grad();
                const auto& xv2 = x.values();
                for (int t = 0; t < T; ++t) {
                    const std::size_t orow = static_cast<std::size_t>(t) * cout;
                    for (int j = 0; j < k; ++j) {
                        const int s = t + j - pad_left;
                        if (s < 0 || s >= T) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            const double xs = xv2[static_cast<std::size_t>(s) * cin + ci];
                            if (xs == 0.0) continue;
                            const std::size_t wrow = (static_cast<std::size_t>(j) * cin + ci) * cout;
                            for (int co = 0; co < cout; ++co) wg[wrow + co] += xs * og[orow + co];
                        }
                    }
                }
            }
            if (x.requires_grad()) {
                auto& xg = const_cast<Tensor&>(x).grad();
                const auto& wv2 = w.values();
                for (int t = 0; t < T; ++t) {
                    const std::size_t orow = static_cast<std::size_t>(t) * cout;
                    for (int j = 0; j < k; ++j) {
                        const int s = t + j - pad_left;
                        if (s < 0 || s >= T) continue;
                        for (int ci = 0; ci < cin; ++ci) {
                            const std::size_t wrow = (static_cast<std::size_t>(j) * cin + ci) * cout;
                            double g = 0.0;
                            for (int co = 0; co < cout; ++co) g += wv2[wrow + co] * og[orow + co];
                            xg[static_cast<std::size_t>(s) * cin + ci] += g;
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor relu(Tape* tape, const Tensor& x) {
    const bool tracked = track(tape, x);
    Tensor out(x.shape(), tracked);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;

    if (tracked) {
        tape->record([x, out]() {
            auto& xg = const_cast<Tensor&>(x).grad();
            const auto& xv2 = x.values();
            const auto& og = out.grad();
            for (std::size_t i = 0; i < xv2.size(); ++i)
                if (xv2[i] > 0.0) xg[i] += og[i];
        });
    }
    return out;
}

Tensor softmax_rows(Tape* tape, const Tensor& x) {
    require_2d("softmax_rows", x);
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(tape, x);
    Tensor out({m, n}, tracked);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (int i = 0; i < m; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * n;
        double mx = xv[row];
        for (int j = 1; j < n; ++j) mx = std::max(mx, xv[row + j]);
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(xv[row + j] - mx);
            ov[row + j] = e;
            sum += e;
        }
        for (int j = 0; j < n; ++j) ov[row + j] /= sum;
    }

    if (tracked) {
        tape->record([x, out, m, n]() {
            auto& xg = const_cast<Tensor&>(x).grad();
            const auto& sv = out.values();
            const auto& og = out.grad();
            // dx_j = s_j * (g_j - sum_i g_i s_i), per row
            for (int i = 0; i < m; ++i) {
                const std::size_t row = static_cast<std::size_t>(i) * n;
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += og[row + j] * sv[row + j];
                for (int j = 0; j < n; ++j) xg[row + j] += sv[row + j] * (og[row + j] - dot);
            }
        });
    }
    return out;
}

Tensor cross_entropy(Tape* tape, const Tensor& probs, int label_index) {
    const std::size_t c = probs.size();
    if (probs.ndim() == 2 && probs.dim(0) != 1)
        throw std::invalid_argument("cross_entropy: expected a single probability row, got " +
                                    probs.shape_str());
    if (label_index < 0 || static_cast<std::size_t>(label_index) >= c)
        throw std::invalid_argument("cross_entropy: label index out of range");
    double sum = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
        if (probs.at(i) < 0.0)
            throw std::invalid_argument("cross_entropy: negative probability entry");
        sum += probs.at(i);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("cross_entropy: probabilities do not sum to 1");

    double p = probs.at(static_cast<std::size_t>(label_index));
    if (p < 1e-12) {
        p = 1e-12;
        g_ce_clamp_count.fetch_add(1, std::memory_order_relaxed);
    }
    const bool tracked = track(tape, probs);
    Tensor out = Tensor::scalar(-std::log(p), tracked);

    if (tracked) {
        tape->record([probs, out, label_index, p]() {
            auto& pg = const_cast<Tensor&>(probs).grad();
            pg[static_cast<std::size_t>(label_index)] += out.grad()[0] * (-1.0 / p);
        });
    }
    return out;
}

std::int64_t cross_entropy_clamp_count() { return g_ce_clamp_count.load(); }
void reset_cross_entropy_clamp_count() { g_ce_clamp_count.store(0); }

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error("add", a, b);
    const bool tracked = track(tape, a) || track(tape, b);
    Tensor out(a.shape(), tracked);
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + bv[i];

    if (tracked) {
        tape->record([a, b, out]() {
            const auto& og = out.grad();
            if (a.requires_grad()) {
                auto& ag = const_cast<Tensor&>(a).grad();
                for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
            }
            if (b.requires_grad()) {
                auto& bg = const_cast<Tensor&>(b).grad();
                for (std::size_t i = 0; i < og.size(); ++i) bg[i] += og[i];
            }
        });
    }
    return out;
}

Tensor add_row_broadcast(Tape* tape, const Tensor& x, const Tensor& bias) {
    require_2d("add_row_broadcast", x);
    if (bias.ndim() != 1 || bias.dim(0) != x.dim(1)) shape_error("add_row_broadcast", x, bias);
    const int m = x.dim(0), n = x.dim(1);
    const bool tracked = track(tape, x) || track(tape, bias);
    Tensor out({m, n}, tracked);
    const auto& xv = x.values();
    const auto& bv = bias.values();
    auto& ov = out.values();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            ov[static_cast<std::size_t>(i) * n + j] = xv[static_cast<std::size_t>(i) * n + j] + bv[j];

    if (tracked) {
        tape->record([x, bias, out, m, n]() {
            const auto& og = out.grad();
            if (x.requires_grad()) {
                auto& xg = const_cast<Tensor&>(x).grad();
                for (std::size_t i = 0; i < og.size(); ++i) xg[i] += og[i];
            }
            if (bias.requires_grad()) {
                auto& bg = const_cast<Tensor&>(bias).grad();
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) bg[j] += og[static_cast<std::size_t>(i) * n + j];
            }
        });
    }
    return out;
}

Tensor scale(Tape* tape, const Tensor& x, double c) {
    const bool tracked = track(tape, x);
    Tensor out(x.shape(), tracked);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] * c;

    if (tracked) {
        tape->record([x, out, c]() {
            auto& xg = const_cast<Tensor&>(x).grad();
            const auto& og = out.grad();
            for (std::size_t i = 0; i < og.size(); ++i) xg[i] += c * og[i];
        });
    }
    return out;
}

Tensor mean_rows_slice(Tape* tape, const Tensor& x, int row_begin, int row_end) {
    require_2d("mean_rows_slice", x);
    if (row_begin < 0 || row_end > x.dim(0) || row_begin >= row_end)
        throw std::invalid_argument("mean_rows_slice: invalid row range");
    const int n = x.dim(1);
    const int len = row_end - row_begin;
    const bool tracked = track(tape, x);
    Tensor out({1, n}, tracked);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (int i = row_begin; i < row_end; ++i)
        for (int j = 0; j < n; ++j) ov[j] += xv[static_cast<std::size_t>(i) * n + j];
    for (int j = 0; j < n; ++j) ov[j] /= len;

    if (tracked) {
        tape->record([x, out, row_begin, row_end, n, len]() {
            auto& xg = const_cast<Tensor&>(x).grad();
            const auto& og = out.grad();
            for (int i = row_begin; i < row_end; ++i)
                for (int j = 0; j < n; ++j) xg[static_cast<std::size_t>(i) * n + j] += og[j] / len;
        });
    }
    return out;
}

Tensor avgpool_rows(Tape* tape, const Tensor& x, int stride) {
    require_2d("avgpool_rows", x);
    if (stride < 1) throw std::invalid_argument("avgpool_rows: stride must be >= 1");
    const int T = x.dim(0), n = x.dim(1);
    if (stride > T) throw std::invalid_argument("avgpool_rows: stride exceeds row count");
    const int L = (T + stride - 1) / stride;
    const bool tracked = track(tape, x);
    Tensor out({L, n}, tracked);
    const auto& xv = x.values();
    auto& ov = out.values();
    for (int p = 0; p < L; ++p) {
        const int lo = p * stride;
        const int hi = std::min(T, lo + stride);
        const std::size_t orow = static_cast<std::size_t>(p) * n;
        for (int i = lo; i < hi; ++i)
            for (int j = 0; j < n; ++j) ov[orow + j] += xv[static_cast<std::size_t>(i) * n + j];
        for (int j = 0; j < n; ++j) ov[orow + j] /= (hi - lo);
    }

    if (tracked) {
        tape->record([x, out, stride, T, n, L]() {
            auto& xg = const_cast<Tensor&>(x).grad();
            const auto& og = out.grad();
            for (int p = 0; p < L; ++p) {
                const int lo = p * stride;
                const int hi = std::min(T, lo + stride);
                const std::size_t orow = static_cast<std::size_t>(p) * n;
                for (int i = lo; i < hi; ++i)
                    for (int j = 0; j < n; ++j)
                        xg[static_cast<std::size_t>(i) * n + j] += og[orow + j] / (hi - lo);
            }
        });
    }
    return out;
}

Tensor concat_rows(Tape* tape, const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("concat_rows: no rows given");
    const int n = rows[0].dim(rows[0].ndim() - 1);
    bool tracked = false;
    for (const auto& r : rows) {
        if (r.ndim() != 2 || r.dim(0) != 1 || r.dim(1) != n)
            throw std::invalid_argument("concat_rows: every row must be (1," + std::to_string(n) + ")");
        tracked = tracked || track(tape, r);
    }
    const int K = static_cast<int>(rows.size());
    Tensor out({K, n}, tracked);
    auto& ov = out.values();
    for (int r = 0; r < K; ++r)
        for (int j = 0; j < n; ++j) ov[static_cast<std::size_t>(r) * n + j] = rows[r].at(j);

    if (tracked) {
        tape->record([rows, out, K, n]() {
            const auto& og = out.grad();
            for (int r = 0; r < K; ++r) {
                if (!rows[r].requires_grad()) continue;
                auto& rg = const_cast<Tensor&>(rows[r]).grad();
                for (int j = 0; j < n; ++j) rg[j] += og[static_cast<std::size_t>(r) * n + j];
            }
        });
    }
    return out;
}

double grad_check(const LossFn& f, const std::vector<Tensor>& params, double step) {
    if (step <= 0.0) throw std::invalid_argument("grad_check: step must be positive");

    for (const auto& p : params)
        if (!p.requires_grad())
            throw std::invalid_argument("grad_check: every parameter must track gradients");
    for (const auto& p : params) const_cast<Tensor&>(p).zero_grad();

    Tape tape;
    Tensor loss = f(&tape);
    if (loss.size() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
    if (!std::isfinite(loss.at(0)))
        throw std::runtime_error("grad_check: f evaluated to a non-finite value");
    if (loss.requires_grad()) {
        loss.grad()[0] = 1.0;
        tape.backward();
    }

    std::vector<std::vector<double>> tape_grads;
    tape_grads.reserve(params.size());
    for (const auto& p : params) tape_grads.push_back(p.grad());

    auto eval = [&f]() {
        Tensor l = f(nullptr);
        if (!std::isfinite(l.at(0)))
            throw std::runtime_error("grad_check: f evaluated to a non-finite value");
        return l.at(0);
    };

    double max_rel = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = const_cast<Tensor&>(params[pi]).values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double lp = eval();
            vals[i] = saved - step;
            const double lm = eval();
            vals[i] = saved;
            const double fd = (lp - lm) / (2.0 * step);
            const double gt = tape_grads[pi][i];
            const double rel = std::abs(gt - fd) / std::max(1e-8, std::abs(gt) + std::abs(fd));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace ctts
