#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ctts {

struct PredictionRecord {
    int true_label = 0;                             // -1, 0, +1
    std::array<double, 3> probs = {0.0, 0.0, 0.0};  // ordered (-1, 0, +1)
    int predicted_class = 0;                        // argmax; tie -> lower class
    double confidence = 0.0;                        // max(probs)
};

// Fills predicted_class and confidence from the probabilities; validates
// that probs sum to 1 within 1e-9.
PredictionRecord make_record(int true_label, const std::array<double, 3>& probs);

struct EvalReport {
    std::string model_name;
    std::int64_t n = 0;
    double acc_3class = 0.0;
    double acc_3class_thresholded = 0.0;
    double acc_2class = 0.0;
    double acc_2class_thresholded = 0.0;
    double kept_fraction = 0.0;  // of the 3-class thresholding
    std::array<std::array<std::int64_t, 3>, 3> confusion = {};  // [true+1][pred+1]
};

// Proportion of records whose predicted_class equals true_label.
double accuracy(const std::vector<PredictionRecord>& records);

struct ThresholdedAccuracy {
    double accuracy = 0.0;
    double kept_fraction = 0.0;
    double threshold = 0.0;
};

// Keeps records whose confidence is at or above the 75th percentile of all
// confidences (nearest-rank: the value at rank ceil(0.75 N) of the
// ascending sort), then scores the kept set.
ThresholdedAccuracy thresholded_accuracy(const std::vector<PredictionRecord>& records);

// Collapse to NonNegative {+1, 0} vs Negative {-1}. The merged record keeps
// the 3-slot layout: probs = (p_negative, 0, p_nonnegative), classes -1 and
// +1. A probability tie predicts Negative (lower class index).
PredictionRecord to_two_class(const PredictionRecord& record);

EvalReport build_report(const std::string& model_name,
                        const std::vector<PredictionRecord>& records);

// CSV: model,n,acc3,acc3_thr,acc2,acc2_thr,kept_frac
std::string reports_to_csv(const std::vector<EvalReport>& reports);
void write_report_csv(const std::string& path, const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_report_csv(const std::string& text);

// Aligned plain-text table of the same columns.
std::string format_report_table(const std::vector<EvalReport>& reports);

}  // namespace ctts
