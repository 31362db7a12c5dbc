#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctts {

constexpr int kWindowLen = 80;  // model input length; the label comes from step 81

// Raised when a window cannot be min-max scaled because every price is equal.
struct DegenerateWindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvParseError : std::runtime_error {
    CsvParseError(const std::string& msg, std::size_t line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

struct PriceSeries {
    std::string symbol;
    std::vector<std::int64_t> timestamps;  // strictly increasing, minutes
    std::vector<double> prices;            // > 0, same length as timestamps
};

struct LabeledWindow {
    std::vector<double> inputs;      // length 80, min-max scaled to [0,1]
    std::vector<double> raw_inputs;  // same prices before scaling (baselines fit on these)
    double raw_last_price = 0.0;     // price at step 80
    int label = 0;                   // -1, 0, +1
    double scale_min = 0.0;
    double scale_max = 0.0;
    double volatility = 0.0;  // sigma of the window's log returns
    std::size_t end_index = 0;  // source index of the label step, for split bookkeeping
};

struct DatasetSplit {
    std::vector<LabeledWindow> train;
    std::vector<LabeledWindow> validation;
    std::vector<LabeledWindow> test;
    std::int64_t seed = 0;
};

struct SplitRatios {
    double train = 0.60;
    double validation = 0.15;
    double test = 0.25;
};

struct MinMaxResult {
    std::vector<double> scaled;
    double min = 0.0;
    double max = 0.0;
};

struct WindowingResult {
    std::vector<LabeledWindow> windows;
    std::size_t skipped_degenerate = 0;
    bool series_too_short = false;
};

// Regime-switching AR(1)-with-drift generator settings. The log return
// follows r_t = rho * r_{t-1} + drift * s_t + noise * eps_t where s_t is a
// +-1 regime sign flipping with probability 1/mean_regime_length per step
// (0 disables switching).
struct GeneratorConfig {
    int length = 2000;
    double initial_price = 100.0;
    double rho = 0.2;                  // AR(1) momentum on log returns, |rho| < 1
    double drift_per_step = 4e-4;      // magnitude of the regime drift
    double noise_scale = 4e-4;         // Gaussian innovation scale
    double mean_regime_length = 60.0;  // expected steps between drift flips; 0 = never
};

// (x - min) / (max - min). Throws DegenerateWindowError when max == min.
MinMaxResult minmax_scale(const std::vector<double>& x);

// Sign of the relative change (p_next - p_last) / p_last with a dead zone:
// 0 when |r| <= neutral_band, otherwise +-1.
int label_sign(double p_next, double p_last, double neutral_band);

// Sample standard deviation of one-step log returns over the window.
double rolling_volatility(const std::vector<double>& window);

// Slides an 80-step window at the given stride; the label compares step 81
// against step 80. Constant windows are skipped and counted.
WindowingResult make_windows(const PriceSeries& series, int stride, double neutral_band);

PriceSeries generate_synthetic(const GeneratorConfig& config, std::uint64_t seed,
                               const std::string& symbol = "SYN000");

// CSV with header `symbol,timestamp,price`; rows may interleave symbols but
// each symbol's timestamps must be strictly increasing.
std::vector<PriceSeries> load_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<PriceSeries>& series);

// Per series: earliest windows become train, then validation, and the
// newest `test` fraction becomes test. Validation/test counts are floored,
// train takes the remainder.
DatasetSplit chronological_split(const std::vector<std::vector<LabeledWindow>>& per_series,
                                 const SplitRatios& ratios, std::int64_t seed = 0);

}  // namespace ctts
