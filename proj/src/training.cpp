#include "ctts/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "ctts/ops.hpp"
#include "ctts/rng.hpp"

namespace ctts {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;

int argmax_row(const Tensor& probs) {
    int best = 0;
    for (int c = 1; c < probs.dim(1); ++c)
        if (probs.at2(0, c) > probs.at2(0, best)) best = c;
    return best;
}

void check_train_config(const TrainConfig& tc) {
    if (tc.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (tc.max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
    if (tc.patience < 1) throw std::invalid_argument("patience must be positive");
    if (tc.patience >= tc.max_epochs)
        throw std::invalid_argument("patience must be smaller than max_epochs");
    if (!(tc.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(tc.lr_decay_factor > 0.0 && tc.lr_decay_factor < 1.0))
        throw std::invalid_argument("lr_decay_factor must be in (0,1)");
    if (tc.threads < 1) throw std::invalid_argument("threads must be positive");
    for (double w : tc.class_weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("class_weights must be positive and finite");
}

}  // namespace

AdamState AdamState::for_params(const CttsParams& params) {
    AdamState state;
    for (const auto& [name, t] : params.named()) {
        state.m.emplace_back(t->size(), 0.0);
        state.v.emplace_back(t->size(), 0.0);
    }
    return state;
}

void adam_step(CttsParams& params, const std::vector<std::vector<double>>& grads, AdamState& state,
               double lr, int epoch, int batch) {
    auto named = params.named();
    if (grads.size() != named.size() || state.m.size() != named.size())
        throw std::invalid_argument("gradient/state layout does not match parameters");
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < named.size(); ++i) {
        Tensor& t = *named[i].second;
        if (grads[i].size() != t.size())
            throw std::invalid_argument("gradient size mismatch for " + named[i].first);
        for (std::size_t e = 0; e < t.size(); ++e) {
            const double g = grads[i][e];
            if (!std::isfinite(g))
                throw TrainingError("non-finite gradient in " + named[i].first, epoch, batch);
            state.m[i][e] = kBeta1 * state.m[i][e] + (1.0 - kBeta1) * g;
            state.v[i][e] = kBeta2 * state.v[i][e] + (1.0 - kBeta2) * g * g;
            const double m_hat = state.m[i][e] / bc1;
            const double v_hat = state.v[i][e] / bc2;
            t.at(e) -= lr * m_hat / (std::sqrt(v_hat) + kEpsilon);
        }
    }
}

LossAccuracy evaluate_loss(const CttsParams& params, const std::vector<LabeledWindow>& windows,
                           const CttsConfig& config) {
    if (windows.empty()) throw std::invalid_argument("evaluate_loss needs at least one window");
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& w : windows) {
        ForwardTrace trace = forward(nullptr, w, params, config);
        loss_sum += cross_entropy(nullptr, trace.probs, label_to_index(w.label)).at(0);
        if (index_to_label(argmax_row(trace.probs)) == w.label) ++correct;
    }
    const double n = static_cast<double>(windows.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

FitResult fit(const DatasetSplit& split, const CttsConfig& model_config,
              const TrainConfig& train_config, const BestEpochHook& on_best) {
    validate(model_config);
    check_train_config(train_config);
    if (split.train.empty()) throw std::invalid_argument("train split is empty");
    if (split.validation.empty()) throw std::invalid_argument("validation split is empty");

    double sigma_max = 0.0;
    for (const auto& w : split.train) sigma_max = std::max(sigma_max, w.volatility);
    if (!(sigma_max > 0.0))
        throw std::invalid_argument("train split has zero volatility; cannot freeze sigma_max");

    CttsParams params = init_params(model_config, static_cast<std::uint64_t>(train_config.seed));
    params.sigma_max = sigma_max;
    AdamState adam = AdamState::for_params(params);
    Rng shuffle_rng(static_cast<std::uint64_t>(train_config.seed) + 0x5851f42d4c957f2dULL);

    const int n_train = static_cast<int>(split.train.size());
    std::vector<int> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    TrainLog log;
    double best_val_loss = std::numeric_limits<double>::infinity();
    CttsParams best_params = params.clone();
    double lr = train_config.learning_rate;
    int stagnant = 0;
    const int decay_every = std::max(1, train_config.patience / 3);
    const std::size_t n_params = params.named().size();

    for (int epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss_sum = 0.0;
        const int n_batches = (n_train + train_config.batch_size - 1) / train_config.batch_size;
        for (int batch = 0; batch < n_batches; ++batch) {
            const int begin = batch * train_config.batch_size;
            const int end = std::min(n_train, begin + train_config.batch_size);
            const int batch_n = end - begin;

            std::vector<CttsParams> forks;
            forks.reserve(batch_n);
            for (int i = 0; i < batch_n; ++i) forks.push_back(params.fork_grad());
            std::vector<double> losses(batch_n, 0.0);
            std::vector<std::string> failures(batch_n);

            auto run_window = [&](int i) {
                const LabeledWindow& w = split.train[order[begin + i]];
                try {
                    Tape tape;
                    ForwardTrace trace = forward(&tape, w, forks[i], model_config);
                    const int label_idx = label_to_index(w.label);
                    Tensor loss = cross_entropy(&tape, trace.probs, label_idx);
                    const double weight = train_config.class_weights[label_idx];
                    losses[i] = weight * loss.at(0);
                    if (!std::isfinite(losses[i])) {
                        failures[i] = "non-finite loss";
                        return;
                    }
                    loss.grad()[0] = weight;
                    tape.backward();
                } catch (const std::exception& e) {
                    failures[i] = e.what();
                }
            };

            const int threads = std::min(train_config.threads, batch_n);
            if (threads <= 1) {
                for (int i = 0; i < batch_n; ++i) run_window(i);
            } else {
                const int chunk = (batch_n + threads - 1) / threads;
                std::vector<std::thread> pool;
                for (int t = 0; t < threads; ++t) {
                    const int lo = t * chunk;
                    const int hi = std::min(batch_n, lo + chunk);
                    if (lo >= hi) break;
                    pool.emplace_back([&, lo, hi] {
                        for (int i = lo; i < hi; ++i) run_window(i);
                    });
                }
                for (auto& th : pool) th.join();
            }

            for (int i = 0; i < batch_n; ++i)
                if (!failures[i].empty()) throw TrainingError(failures[i], epoch, batch);

            // Sum per-window gradients in window order, so the reduction is
            // identical at every thread count, then take the batch mean.
            std::vector<std::vector<double>> grads(n_params);
            auto first_named = forks[0].named();
            for (std::size_t p = 0; p < n_params; ++p)
                grads[p].assign(first_named[p].second->size(), 0.0);
            for (int i = 0; i < batch_n; ++i) {
                auto named = forks[i].named();
                for (std::size_t p = 0; p < n_params; ++p) {
                    const auto& g = named[p].second->grad();
                    for (std::size_t e = 0; e < g.size(); ++e) grads[p][e] += g[e];
                }
            }
            const double inv_n = 1.0 / static_cast<double>(batch_n);
            for (auto& g : grads)
                for (double& v : g) v *= inv_n;

            adam_step(params, grads, adam, lr, epoch, batch);
            for (int i = 0; i < batch_n; ++i) epoch_loss_sum += losses[i];
        }

        const double train_loss = epoch_loss_sum / static_cast<double>(n_train);
        LossAccuracy val = evaluate_loss(params, split.validation, model_config);
        log.entries.push_back({epoch, train_loss, val.loss, val.accuracy, lr});

        if (val.loss < best_val_loss) {
            best_val_loss = val.loss;
            best_params = params.clone();
            log.best_epoch = epoch;
            stagnant = 0;
            if (on_best) on_best(best_params, log);
        } else {
            ++stagnant;
            if (stagnant >= train_config.patience) break;
            if (stagnant % decay_every == 0) lr *= train_config.lr_decay_factor;
        }
    }

    return {best_params, log};
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "epoch,train_loss,val_loss,val_acc,lr\n";
    char buf[128];
    for (const auto& e : log.entries) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss,
                      e.val_loss, e.val_acc, e.lr);
        out << buf;
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace ctts
