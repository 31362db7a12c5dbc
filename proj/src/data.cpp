#include "ctts/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "ctts/rng.hpp"

namespace ctts {

MinMaxResult minmax_scale(const std::vector<double>& x) {
    if (x.size() < 2) throw std::invalid_argument("minmax_scale: need at least 2 values");
    const auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
    const double mn = *mn_it, mx = *mx_it;
    if (!(mx > mn)) throw DegenerateWindowError("minmax_scale: constant window (max == min)");
    MinMaxResult r;
    r.min = mn;
    r.max = mx;
    r.scaled.resize(x.size());
    const double range = mx - mn;
    for (std::size_t i = 0; i < x.size(); ++i) r.scaled[i] = (x[i] - mn) / range;
    return r;
}

int label_sign(double p_next, double p_last, double neutral_band) {
    if (!(p_last > 0.0)) throw std::invalid_argument("label_sign: p_last must be positive");
    const double r = (p_next - p_last) / p_last;
    if (std::abs(r) <= neutral_band) return 0;
    return r > 0.0 ? 1 : -1;
}

double rolling_volatility(const std::vector<double>& window) {
    if (window.size() < 2) throw std::invalid_argument("rolling_volatility: need at least 2 prices");
    for (double p : window)
        if (!(p > 0.0)) throw std::invalid_argument("rolling_volatility: prices must be positive");
    const std::size_t n = window.size() - 1;
    std::vector<double> rets(n);
    for (std::size_t i = 0; i < n; ++i) rets[i] = std::log(window[i + 1] / window[i]);
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double r : rets) mean += r;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double r : rets) ss += (r - mean) * (r - mean);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

WindowingResult make_windows(const PriceSeries& series, int stride, double neutral_band) {
    if (stride < 1) throw std::invalid_argument("make_windows: stride must be >= 1");
    WindowingResult res;
    const std::size_t len = series.prices.size();
    if (len < static_cast<std::size_t>(kWindowLen) + 1) {
        res.series_too_short = true;
        return res;
    }
    for (std::size_t i = 0; i + kWindowLen < len; i += static_cast<std::size_t>(stride)) {
        std::vector<double> raw(series.prices.begin() + i, series.prices.begin() + i + kWindowLen);
        const double mn = *std::min_element(raw.begin(), raw.end());
        const double mx = *std::max_element(raw.begin(), raw.end());
        if (!(mx > mn)) {
            ++res.skipped_degenerate;
            continue;
        }
        LabeledWindow w;
        w.volatility = rolling_volatility(raw);
        MinMaxResult sc = minmax_scale(raw);
        w.inputs = std::move(sc.scaled);
        w.raw_inputs = std::move(raw);
        w.scale_min = sc.min;
        w.scale_max = sc.max;
        w.raw_last_price = series.prices[i + kWindowLen - 1];
        w.label = label_sign(series.prices[i + kWindowLen], w.raw_last_price, neutral_band);
        w.end_index = i + kWindowLen;
        res.windows.push_back(std::move(w));
    }
    return res;
}

PriceSeries generate_synthetic(const GeneratorConfig& config, std::uint64_t seed,
                               const std::string& symbol) {
    if (config.length < kWindowLen + 1)
        throw std::invalid_argument("generate_synthetic: length must be >= 81");
    if (!(config.initial_price > 0.0))
        throw std::invalid_argument("generate_synthetic: initial_price must be positive");
    if (!(std::abs(config.rho) < 1.0))
        throw std::invalid_argument("generate_synthetic: rho must satisfy |rho| < 1");
    if (config.noise_scale < 0.0)
        throw std::invalid_argument("generate_synthetic: noise_scale must be non-negative");
    if (config.drift_per_step < 0.0)
        throw std::invalid_argument("generate_synthetic: drift_per_step must be non-negative");
    if (config.mean_regime_length < 0.0)
        throw std::invalid_argument("generate_synthetic: mean_regime_length must be non-negative");

    Rng rng(seed);
    PriceSeries s;
    s.symbol = symbol;
    s.timestamps.resize(config.length);
    s.prices.resize(config.length);
    double log_price = std::log(config.initial_price);
    double ret = 0.0;
    double regime = 1.0;
    s.timestamps[0] = 0;
    s.prices[0] = config.initial_price;
    const double flip_prob = config.mean_regime_length > 0.0 ? 1.0 / config.mean_regime_length : 0.0;
    for (int t = 1; t < config.length; ++t) {
        if (flip_prob > 0.0 && rng.uniform01() < flip_prob) regime = -regime;
        const double eps = config.noise_scale > 0.0 ? rng.gaussian() : 0.0;
        ret = config.rho * ret + config.drift_per_step * regime + config.noise_scale * eps;
        log_price += ret;
        s.timestamps[t] = t;
        s.prices[t] = std::exp(log_price);
    }
    return s;
}

namespace {

bool parse_int64(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stoll(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

bool parse_price(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size() && std::isfinite(out);
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

std::vector<PriceSeries> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw CsvParseError("load_csv: empty file", 1);
    ++lineno;
    if (strip_cr(line) != "symbol,timestamp,price")
        throw CsvParseError("load_csv: expected header 'symbol,timestamp,price'", lineno);

    std::vector<PriceSeries> series;
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw CsvParseError("load_csv: expected 3 comma-separated fields", lineno);
        const std::string symbol = line.substr(0, c1);
        const std::string ts_str = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string price_str = line.substr(c2 + 1);
        if (symbol.empty()) throw CsvParseError("load_csv: empty symbol", lineno);
        std::int64_t ts = 0;
        if (!parse_int64(ts_str, ts))
            throw CsvParseError("load_csv: bad timestamp '" + ts_str + "'", lineno);
        double price = 0.0;
        if (!parse_price(price_str, price))
            throw CsvParseError("load_csv: bad price '" + price_str + "'", lineno);
        if (!(price > 0.0))
            throw CsvParseError("load_csv: price must be positive, got '" + price_str + "'", lineno);

        auto it = index.find(symbol);
        if (it == index.end()) {
            index.emplace(symbol, series.size());
            series.push_back(PriceSeries{symbol, {ts}, {price}});
        } else {
            PriceSeries& s = series[it->second];
            if (ts <= s.timestamps.back())
                throw std::runtime_error("load_csv: non-monotone timestamps for symbol " + symbol);
            s.timestamps.push_back(ts);
            s.prices.push_back(price);
        }
    }
    return series;
}

void write_csv(const std::string& path, const std::vector<PriceSeries>& series) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path + " for writing");
    out << "symbol,timestamp,price\n";
    char buf[64];
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.prices.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", s.prices[i]);
            out << s.symbol << ',' << s.timestamps[i] << ',' << buf << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

DatasetSplit chronological_split(const std::vector<std::vector<LabeledWindow>>& per_series,
                                 const SplitRatios& ratios, std::int64_t seed) {
    if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0))
        throw std::invalid_argument("chronological_split: ratios must be positive");
    if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9)
        throw std::invalid_argument("chronological_split: ratios must sum to 1");

    DatasetSplit split;
    split.seed = seed;
    for (const auto& series_windows : per_series) {
        const std::size_t n = series_windows.size();
        if (n < 3)
            throw std::runtime_error("chronological_split: a series has fewer than 3 windows");
        std::vector<LabeledWindow> ordered = series_windows;
        std::sort(ordered.begin(), ordered.end(),
                  [](const LabeledWindow& a, const LabeledWindow& b) { return a.end_index < b.end_index; });
        const std::size_t n_test = static_cast<std::size_t>(std::floor(ratios.test * static_cast<double>(n)));
        const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios.validation * static_cast<double>(n)));
        const std::size_t n_train = n - n_test - n_val;
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                split.train.push_back(ordered[i]);
            else if (i < n_train + n_val)
                split.validation.push_back(ordered[i]);
            else
                split.test.push_back(ordered[i]);
        }
    }
    return split;
}

}  // namespace ctts
