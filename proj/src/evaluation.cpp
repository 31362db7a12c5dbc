#include "ctts/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ctts {

namespace {

void check_nonempty(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no prediction records");
}

int argmax_lower_tie(const std::array<double, 3>& probs) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (probs[i] > probs[best]) best = i;
    return best;
}

}  // namespace

PredictionRecord make_record(int true_label, const std::array<double, 3>& probs) {
    if (true_label < -1 || true_label > 1)
        throw std::invalid_argument("true_label must be -1, 0 or +1");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("probabilities must be finite and non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("probabilities must sum to 1");
    PredictionRecord r;
    r.true_label = true_label;
    r.probs = probs;
    const int best = argmax_lower_tie(probs);
    r.predicted_class = best - 1;
    r.confidence = probs[best];
    return r;
}

double accuracy(const std::vector<PredictionRecord>& records) {
    check_nonempty(records);
    std::size_t correct = 0;
    for (const auto& r : records)
        if (r.predicted_class == r.true_label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

ThresholdedAccuracy thresholded_accuracy(const std::vector<PredictionRecord>& records) {
    check_nonempty(records);
    const std::size_t n = records.size();
    std::vector<double> confidences;
    confidences.reserve(n);
    for (const auto& r : records) confidences.push_back(r.confidence);
    std::sort(confidences.begin(), confidences.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(n)));
    const double q = confidences[std::max<std::size_t>(rank, 1) - 1];

    std::size_t kept = 0;
    std::size_t correct = 0;
    for (const auto& r : records) {
        if (r.confidence < q) continue;
        ++kept;
        if (r.predicted_class == r.true_label) ++correct;
    }
    ThresholdedAccuracy out;
    out.threshold = q;
    out.kept_fraction = static_cast<double>(kept) / static_cast<double>(n);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(kept);
    return out;
}

PredictionRecord to_two_class(const PredictionRecord& record) {
    PredictionRecord out;
    const double p_negative = record.probs[0];
    const double p_nonnegative = record.probs[1] + record.probs[2];
    out.true_label = record.true_label == -1 ? -1 : 1;
    out.probs = {p_negative, 0.0, p_nonnegative};
    out.predicted_class = p_nonnegative > p_negative ? 1 : -1;
    out.confidence = std::max(p_negative, p_nonnegative);
    return out;
}

EvalReport build_report(const std::string& model_name,
                        const std::vector<PredictionRecord>& records) {
    check_nonempty(records);
    EvalReport report;
    report.model_name = model_name;
    report.n = static_cast<std::int64_t>(records.size());
    report.acc_3class = accuracy(records);
    const ThresholdedAccuracy thr3 = thresholded_accuracy(records);
    report.acc_3class_thresholded = thr3.accuracy;
    report.kept_fraction = thr3.kept_fraction;

    std::vector<PredictionRecord> two;
    two.reserve(records.size());
    for (const auto& r : records) two.push_back(to_two_class(r));
    report.acc_2class = accuracy(two);
    report.acc_2class_thresholded = thresholded_accuracy(two).accuracy;

    for (const auto& r : records) ++report.confusion[r.true_label + 1][r.predicted_class + 1];
    return report;
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
    std::string out = "model,n,acc3,acc3_thr,acc2,acc2_thr,kept_frac\n";
    char buf[256];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "%s,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.model_name.c_str(), static_cast<long long>(r.n), r.acc_3class,
                      r.acc_3class_thresholded, r.acc_2class, r.acc_2class_thresholded,
                      r.kept_fraction);
        out += buf;
    }
    return out;
}

void write_report_csv(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << reports_to_csv(reports);
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::vector<EvalReport> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty report CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "model,n,acc3,acc3_thr,acc2,acc2_thr,kept_frac")
        throw std::runtime_error("unexpected report CSV header: " + line);
    std::vector<EvalReport> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw std::runtime_error("bad report CSV row: " + line);
        EvalReport r;
        r.model_name = fields[0];
        r.n = std::stoll(fields[1]);
        r.acc_3class = std::stod(fields[2]);
        r.acc_3class_thresholded = std::stod(fields[3]);
        r.acc_2class = std::stod(fields[4]);
        r.acc_2class_thresholded = std::stod(fields[5]);
        r.kept_fraction = std::stod(fields[6]);
        out.push_back(r);
    }
    return out;
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
    const std::vector<std::string> headers = {"model",    "n",        "acc3",     "acc3_thr",
                                              "acc2",     "acc2_thr", "kept_frac"};
    std::vector<std::vector<std::string>> rows;
    char buf[64];
    for (const auto& r : reports) {
        std::vector<std::string> row;
        row.push_back(r.model_name);
        row.push_back(std::to_string(r.n));
        for (double v : {r.acc_3class, r.acc_3class_thresholded, r.acc_2class,
                         r.acc_2class_thresholded, r.kept_fraction}) {
            std::snprintf(buf, sizeof buf, "%.4f", v);
            row.push_back(buf);
        }
        rows.push_back(row);
    }
    std::vector<std::size_t> widths(headers.size());
    for (std::size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << "  ";
            if (c == 0)
                out << row[c] << std::string(widths[c] - row[c].size(), ' ');
            else
                out << std::string(widths[c] - row[c].size(), ' ') << row[c];
        }
        out << "\n";
    };
    emit(headers);
    for (const auto& row : rows) emit(row);
    return out.str();
}

}  // namespace ctts
