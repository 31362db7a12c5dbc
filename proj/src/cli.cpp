#include "ctts/cli.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "ctts/baselines.hpp"
#include "ctts/checkpoint.hpp"
#include "ctts/data.hpp"
#include "ctts/evaluation.hpp"
#include "ctts/model.hpp"
#include "ctts/training.hpp"

namespace ctts {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(field, &used);
            if (used != field.size()) throw std::invalid_argument(field);
            out.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected a comma-separated integer list, got '" +
                                                 text + "'");
        }
    }
    if (out.empty())
        throw CLI::ValidationError(flag, "expected a comma-separated integer list, got '" + text +
                                             "'");
    return out;
}

std::string make_symbol(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "SYN%03d", index);
    return buf;
}

struct GenerateArgs {
    std::string out;
    std::int64_t seed = 0;
    int length = 2000;
    int series = 1;
    GeneratorConfig gen;
};

int cmd_generate(const GenerateArgs& a) {
    if (a.length < kWindowLen + 1) {
        std::cerr << "error: --length must be at least " << (kWindowLen + 1)
                  << " (an input window plus its label step)\n";
        return kExitUsage;
    }
    if (a.series < 1) {
        std::cerr << "error: --series must be positive\n";
        return kExitUsage;
    }
    GeneratorConfig config = a.gen;
    config.length = a.length;
    std::vector<PriceSeries> all;
    for (int i = 0; i < a.series; ++i)
        all.push_back(generate_synthetic(config, static_cast<std::uint64_t>(a.seed) + i,
                                         make_symbol(i)));
    try {
        write_csv(a.out, all);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::cout << "wrote " << all.size() << " series of length " << a.length << " to " << a.out
              << "\n";
    return kExitOk;
}

struct TrainArgs {
    std::string data;
    std::string out = "train_log.csv";
    std::string checkpoint = "checkpoint.json";
    std::int64_t seed = 0;
    int stride = 1;
    double neutral_band = 1e-4;
    std::string scales = "1,2,4";
    int segments = 4;
    int kmax = 7;
    int dmodel = 16;
    int epochs = 300;
    int batch = 128;
    double lr = 1e-3;
    int patience = 15;
    int threads = 1;
};

DatasetSplit windows_and_split(const std::string& data_path, int stride, double neutral_band,
                               std::int64_t seed) {
    const std::vector<PriceSeries> series = load_csv(data_path);
    std::vector<std::vector<LabeledWindow>> per_series;
    for (const auto& s : series) {
        WindowingResult w = make_windows(s, stride, neutral_band);
        if (w.series_too_short)
            throw std::runtime_error("series " + s.symbol + " is too short to window");
        per_series.push_back(std::move(w.windows));
    }
    return chronological_split(per_series, SplitRatios{}, seed);
}

int cmd_train(const TrainArgs& a) {
    CttsConfig config;
    config.d_model = a.dmodel;
    config.k_max = a.kmax;
    config.num_segments = a.segments;
    config.neutral_band = a.neutral_band;
    config.seed = a.seed;
    TrainConfig train_config;
    train_config.batch_size = a.batch;
    train_config.max_epochs = a.epochs;
    train_config.patience = a.patience;
    train_config.learning_rate = a.lr;
    train_config.seed = a.seed;
    train_config.threads = a.threads;

    DatasetSplit split;
    try {
        config.scales = parse_int_list(a.scales, "--scales");
        validate(config);
        split = windows_and_split(a.data, a.stride, a.neutral_band, a.seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        FitResult result = fit(split, config, train_config,
                               [&](const CttsParams& best, const TrainLog&) {
                                   save_checkpoint(a.checkpoint, config, best, a.seed);
                               });
        write_train_log_csv(a.out, result.log);
        const TrainLogEntry& best = result.log.entries.at(result.log.best_epoch - 1);
        std::cout << "trained " << result.log.entries.size() << " epochs; best epoch "
                  << result.log.best_epoch << " val_loss " << best.val_loss << " val_acc "
                  << best.val_acc << "\n";
        std::cout << "checkpoint: " << a.checkpoint << "\n";
        std::cout << "train log: " << a.out << "\n";
        return kExitOk;
    } catch (const TrainingError& e) {
        std::cerr << "training failed: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const CheckpointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

struct EvaluateArgs {
    std::string data;
    std::string checkpoint;
    std::string out = "report.csv";
    std::int64_t seed = 0;
    int stride = 1;
    double neutral_band = 1e-4;
    bool neutral_band_set = false;
    std::string baselines = "arima,ema,naive";
    ArimaOrders arima_orders;
};

int best_naive_class(const std::vector<LabeledWindow>& validation) {
    std::array<std::int64_t, 3> counts = {0, 0, 0};
    for (const auto& w : validation) ++counts[w.label + 1];
    int best = -1;
    for (int cls = 0; cls <= 1; ++cls)
        if (counts[cls + 1] > counts[best + 1]) best = cls;
    return best;
}

int cmd_evaluate(const EvaluateArgs& a) {
    Checkpoint ckpt;
    DatasetSplit split;
    std::set<std::string> requested;
    try {
        ckpt = load_checkpoint(a.checkpoint);
        if (ckpt.config.T != kWindowLen)
            throw std::runtime_error("checkpoint window length " + std::to_string(ckpt.config.T) +
                                     " does not match the " + std::to_string(kWindowLen) +
                                     "-step pipeline");
        const double band = a.neutral_band_set ? a.neutral_band : ckpt.config.neutral_band;
        split = windows_and_split(a.data, a.stride, band, a.seed);
        if (split.test.empty()) throw std::runtime_error("test split is empty");

        std::istringstream in(a.baselines);
        std::string name;
        while (std::getline(in, name, ',')) {
            if (name.empty()) continue;
            if (name != "arima" && name != "ema" && name != "naive")
                throw std::runtime_error("unknown baseline '" + name +
                                         "' (expected arima, ema or naive)");
            requested.insert(name);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const double band = a.neutral_band_set ? a.neutral_band : ckpt.config.neutral_band;
    try {
        std::vector<EvalReport> reports;

        std::vector<PredictionRecord> ctts_records;
        for (const auto& w : split.test) {
            ForwardTrace trace = forward(nullptr, w, ckpt.params, ckpt.config);
            ctts_records.push_back(make_record(
                w.label, {trace.probs.at2(0, 0), trace.probs.at2(0, 1), trace.probs.at2(0, 2)}));
        }
        reports.push_back(build_report("ctts", ctts_records));

        if (requested.count("arima")) {
            std::vector<PredictionRecord> records;
            for (const auto& w : split.test) {
                ArimaFitResult fit_result = arima_fit(w.raw_inputs, a.arima_orders);
                ClassProbPrediction pred = arima_predict(fit_result.model, w.raw_inputs, band);
                records.push_back(make_record(w.label, pred.probs));
            }
            reports.push_back(build_report("arima", records));
        }
        if (requested.count("ema")) {
            std::vector<PredictionRecord> records;
            for (const auto& w : split.test) {
                EmaModel model = ema_fit(w.raw_inputs);
                ClassProbPrediction pred = ema_predict(model, w.raw_inputs, band);
                records.push_back(make_record(w.label, pred.probs));
            }
            reports.push_back(build_report("ema", records));
        }
        if (requested.count("naive")) {
            const std::vector<LabeledWindow>& reference =
                split.validation.empty() ? split.train : split.validation;
            const int fixed = best_naive_class(reference);
            std::vector<PredictionRecord> records;
            for (const auto& w : split.test) {
                ClassProbPrediction pred = naive_constant_predict(fixed);
                records.push_back(make_record(w.label, pred.probs));
            }
            reports.push_back(build_report("naive", records));
        }

        write_report_csv(a.out, reports);
        std::cout << format_report_table(reports);
        std::cout << "report: " << a.out << "\n";
        return kExitOk;
    } catch (const DegenerateWindowError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"CNN-Transformer sign-of-movement forecaster"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "write a synthetic price CSV");
    generate->add_option("--out", gen.out, "output CSV path")->required();
    generate->add_option("--seed", gen.seed, "generator seed (series i uses seed + i)");
    generate->add_option("--length", gen.length, "steps per series")->capture_default_str();
    generate->add_option("--series", gen.series, "number of series")->capture_default_str();
    generate->add_option("--rho", gen.gen.rho, "AR(1) momentum of log returns")
        ->capture_default_str();
    generate->add_option("--drift", gen.gen.drift_per_step, "regime drift per step")
        ->capture_default_str();
    generate->add_option("--eta", gen.gen.noise_scale, "Gaussian noise scale")
        ->capture_default_str();
    generate->add_option("--regime-length", gen.gen.mean_regime_length,
                         "mean steps between drift flips (0 disables)")
        ->capture_default_str();
    generate->add_option("--start-price", gen.gen.initial_price, "initial price")
        ->capture_default_str();

    TrainArgs tr;
    CLI::App* train = app.add_subcommand("train", "fit the model on a price CSV");
    train->add_option("--data", tr.data, "input CSV path")->required();
    train->add_option("--out", tr.out, "training log CSV path")->capture_default_str();
    train->add_option("--checkpoint", tr.checkpoint, "checkpoint output path")
        ->capture_default_str();
    train->add_option("--seed", tr.seed, "training seed");
    train->add_option("--stride", tr.stride, "window stride")->capture_default_str();
    train->add_option("--neutral-band", tr.neutral_band, "no-change labeling band")
        ->capture_default_str();
    train->add_option("--scales", tr.scales, "attention pooling scales")->capture_default_str();
    train->add_option("--segments", tr.segments, "segment count")->capture_default_str();
    train->add_option("--kmax", tr.kmax, "largest convolution kernel")->capture_default_str();
    train->add_option("--dmodel", tr.dmodel, "embedding width")->capture_default_str();
    train->add_option("--epochs", tr.epochs, "maximum epochs")->capture_default_str();
    train->add_option("--batch", tr.batch, "batch size")->capture_default_str();
    train->add_option("--lr", tr.lr, "learning rate")->capture_default_str();
    train->add_option("--patience", tr.patience, "early-stopping patience")
        ->capture_default_str();
    train->add_option("--threads", tr.threads, "worker threads")->capture_default_str();

    EvaluateArgs ev;
    std::string orders_text = "2,1,1";
    int ev_threads = 1;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint against baselines");
    evaluate->add_option("--data", ev.data, "input CSV path")->required();
    evaluate->add_option("--checkpoint", ev.checkpoint, "checkpoint to score")->required();
    evaluate->add_option("--out", ev.out, "report CSV path")->capture_default_str();
    evaluate->add_option("--seed", ev.seed, "split seed");
    evaluate->add_option("--stride", ev.stride, "window stride")->capture_default_str();
    CLI::Option* band_opt = evaluate->add_option("--neutral-band", ev.neutral_band,
                                                 "override the checkpoint's labeling band");
    evaluate->add_option("--baselines", ev.baselines, "comma list of arima,ema,naive")
        ->capture_default_str();
    evaluate->add_option("--arima-orders", orders_text, "ARIMA orders p,d,q")
        ->capture_default_str();
    evaluate->add_option("--threads", ev_threads,
                         "accepted for symmetry; evaluation is single-threaded");

    std::vector<const char*> argv;
    argv.push_back("ctts");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen);
        if (train->parsed()) return cmd_train(tr);
        if (evaluate->parsed()) {
            ev.neutral_band_set = band_opt->count() > 0;
            const std::vector<int> pdq = parse_int_list(orders_text, "--arima-orders");
            if (pdq.size() != 3 || pdq[0] < 0 || pdq[1] < 0 || pdq[2] < 0) {
                std::cerr << "error: --arima-orders expects p,d,q as non-negative integers\n";
                return kExitUsage;
            }
            ev.arima_orders = {pdq[0], pdq[1], pdq[2]};
            if (kWindowLen - ev.arima_orders.d <=
                ev.arima_orders.p + ev.arima_orders.q + 5) {
                std::cerr << "error: ARIMA orders too large for 80-step windows\n";
                return kExitUsage;
            }
            return cmd_evaluate(ev);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace ctts
