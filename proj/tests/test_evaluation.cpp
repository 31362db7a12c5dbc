#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "ctts/evaluation.hpp"
#include "ctts/rng.hpp"
#include "oracles.hpp"

using namespace ctts;

namespace {

PredictionRecord random_record(Rng& rng) {
    std::array<double, 3> probs;
    double sum = 0.0;
    for (double& p : probs) {
        p = rng.uniform(0.01, 1.0);
        sum += p;
    }
    for (double& p : probs) p /= sum;
    const int label = static_cast<int>(rng.bounded(3)) - 1;
    return make_record(label, probs);
}

}  // namespace

TEST_CASE("make_record derives the argmax and validates the distribution") {
    PredictionRecord r = make_record(1, {0.2, 0.3, 0.5});
    CHECK(r.true_label == 1);
    CHECK(r.predicted_class == 1);
    CHECK(r.confidence == 0.5);

    // exact tie resolves to the lower class
    PredictionRecord tie = make_record(0, {0.4, 0.4, 0.2});
    CHECK(tie.predicted_class == -1);
    CHECK(tie.confidence == 0.4);

    CHECK_THROWS_AS(make_record(0, {0.5, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(make_record(0, {1.2, -0.1, -0.1}), std::invalid_argument);
    CHECK_THROWS_AS(make_record(2, {0.2, 0.3, 0.5}), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_record(0, {nan, 0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("accuracy is the proportion of correct predictions") {
    std::vector<PredictionRecord> two = {make_record(1, {0.1, 0.2, 0.7}),
                                         make_record(-1, {0.1, 0.2, 0.7})};
    CHECK(accuracy(two) == 0.5);

    std::vector<PredictionRecord> all_right = {make_record(1, {0.1, 0.2, 0.7}),
                                               make_record(-1, {0.8, 0.1, 0.1})};
    CHECK(accuracy(all_right) == 1.0);

    Rng rng(41);
    std::vector<PredictionRecord> records;
    std::vector<int> truth, predicted;
    for (int i = 0; i < 1000; ++i) {
        records.push_back(random_record(rng));
        truth.push_back(records.back().true_label);
        predicted.push_back(records.back().predicted_class);
    }
    CHECK(accuracy(records) == oracles::accuracy(truth, predicted));

    CHECK_THROWS_AS(accuracy({}), std::invalid_argument);
}

TEST_CASE("thresholded accuracy keeps the top quarter by nearest rank") {
    auto with_confidence = [](double target, bool correct) {
        // place the target mass on class +1, remainder on the others
        std::array<double, 3> probs = {(1.0 - target) * 0.9, (1.0 - target) * 0.1, target};
        return make_record(correct ? 1 : -1, probs);
    };

    SUBCASE("hand-computed rank on four records") {
        std::vector<PredictionRecord> records = {
            with_confidence(0.4, true),
            with_confidence(0.5, false),
            with_confidence(0.6, true),
            with_confidence(0.9, true),
        };
        ThresholdedAccuracy t = thresholded_accuracy(records);
        CHECK(t.threshold == doctest::Approx(0.6));
        CHECK(t.kept_fraction == 0.5);  // confidences 0.6 and 0.9 survive
        CHECK(t.accuracy == 1.0);
    }

    SUBCASE("identical confidences keep everything") {
        std::vector<PredictionRecord> records = {
            make_record(1, {0.25, 0.25, 0.5}), make_record(0, {0.25, 0.25, 0.5}),
            make_record(-1, {0.25, 0.25, 0.5}), make_record(1, {0.25, 0.25, 0.5})};
        ThresholdedAccuracy t = thresholded_accuracy(records);
        CHECK(t.kept_fraction == 1.0);
        CHECK(t.accuracy == accuracy(records));
    }

    SUBCASE("matches the brute-force oracle on random records") {
        Rng rng(43);
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 1 + static_cast<int>(rng.bounded(500));
            std::vector<PredictionRecord> records;
            std::vector<double> confidence;
            std::vector<bool> correct;
            for (int i = 0; i < n; ++i) {
                records.push_back(random_record(rng));
                confidence.push_back(records.back().confidence);
                correct.push_back(records.back().predicted_class == records.back().true_label);
            }
            ThresholdedAccuracy got = thresholded_accuracy(records);
            oracles::ThresholdResult want = oracles::thresholded(confidence, correct);
            CHECK(got.accuracy == want.accuracy);
            CHECK(got.kept_fraction == want.kept_fraction);
            CHECK(got.kept_fraction > 0.0);
            CHECK(got.kept_fraction <= 1.0);
            CHECK(got.kept_fraction >= 0.25 - 1.0 / n);
        }
    }

    SUBCASE("single record keeps itself") {
        std::vector<PredictionRecord> one = {with_confidence(0.8, true)};
        ThresholdedAccuracy t = thresholded_accuracy(one);
        CHECK(t.kept_fraction == 1.0);
        CHECK(t.accuracy == 1.0);
    }
}

TEST_CASE("two-class collapse merges NonNegative against Negative") {
    // exact tie at 0.5 falls to Negative
    PredictionRecord tie = to_two_class(make_record(1, {0.5, 0.3, 0.2}));
    CHECK(tie.predicted_class == -1);
    CHECK(tie.probs[0] == 0.5);
    CHECK(tie.probs[1] == 0.0);
    CHECK(tie.probs[2] == doctest::Approx(0.5).epsilon(1e-12));

    // a neutral true label lands in NonNegative
    PredictionRecord neutral = to_two_class(make_record(0, {0.6, 0.3, 0.1}));
    CHECK(neutral.true_label == 1);
    CHECK(neutral.predicted_class == -1);

    // merged mass can flip the winner relative to the 3-class argmax
    PredictionRecord merged = to_two_class(make_record(1, {0.4, 0.1, 0.5}));
    CHECK(merged.predicted_class == 1);
    CHECK(merged.probs[2] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(merged.confidence == doctest::Approx(0.6).epsilon(1e-12));

    // a correct NonNegative prediction stays correct after merging; a correct
    // Negative one need not: the split NonNegative mass can rejoin and win
    Rng rng(47);
    for (int i = 0; i < 300; ++i) {
        PredictionRecord r = random_record(rng);
        PredictionRecord two = to_two_class(r);
        double sum = 0.0;
        for (double p : two.probs) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);
        if (r.predicted_class == r.true_label && r.true_label >= 0)
            CHECK(two.predicted_class == two.true_label);
    }
    PredictionRecord rejoined = to_two_class(make_record(-1, {0.4, 0.3, 0.3}));
    CHECK(rejoined.true_label == -1);
    CHECK(rejoined.predicted_class == 1);
}

TEST_CASE("build_report fills every field consistently") {
    SUBCASE("single correct record") {
        EvalReport r = build_report("solo", {make_record(1, {0.1, 0.2, 0.7})});
        CHECK(r.model_name == "solo");
        CHECK(r.n == 1);
        CHECK(r.acc_3class == 1.0);
        CHECK(r.acc_3class_thresholded == 1.0);
        CHECK(r.acc_2class == 1.0);
        CHECK(r.acc_2class_thresholded == 1.0);
        CHECK(r.kept_fraction == 1.0);
        CHECK(r.confusion[2][2] == 1);
        std::int64_t total = 0;
        for (const auto& row : r.confusion)
            for (std::int64_t v : row) total += v;
        CHECK(total == 1);
    }

    SUBCASE("fields match independent recomputation") {
        Rng rng(53);
        std::vector<PredictionRecord> records;
        for (int i = 0; i < 400; ++i) records.push_back(random_record(rng));
        EvalReport r = build_report("mix", records);

        CHECK(r.n == 400);
        CHECK(r.acc_3class == accuracy(records));
        ThresholdedAccuracy t3 = thresholded_accuracy(records);
        CHECK(r.acc_3class_thresholded == t3.accuracy);
        CHECK(r.kept_fraction == t3.kept_fraction);

        std::vector<PredictionRecord> twos;
        for (const auto& rec : records) twos.push_back(to_two_class(rec));
        CHECK(r.acc_2class == accuracy(twos));
        CHECK(r.acc_2class_thresholded == thresholded_accuracy(twos).accuracy);

        // confusion row sums equal the per-class true counts
        for (int cls = -1; cls <= 1; ++cls) {
            std::int64_t want = 0;
            for (const auto& rec : records)
                if (rec.true_label == cls) ++want;
            std::int64_t got = 0;
            for (std::int64_t v : r.confusion[cls + 1]) got += v;
            CHECK(got == want);
        }

        // purity: same inputs, same report
        EvalReport again = build_report("mix", records);
        CHECK(again.acc_3class == r.acc_3class);
        CHECK(again.acc_2class_thresholded == r.acc_2class_thresholded);
        CHECK(again.confusion == r.confusion);
    }

    CHECK_THROWS_AS(build_report("empty", {}), std::invalid_argument);
}

TEST_CASE("report CSV round trips through the parser") {
    Rng rng(59);
    std::vector<EvalReport> reports;
    for (const char* name : {"ctts", "arima", "ema", "naive"}) {
        std::vector<PredictionRecord> records;
        for (int i = 0; i < 50; ++i) records.push_back(random_record(rng));
        reports.push_back(build_report(name, records));
    }

    const std::string csv = reports_to_csv(reports);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "model,n,acc3,acc3_thr,acc2,acc2_thr,kept_frac");

    std::vector<EvalReport> parsed = parse_report_csv(csv);
    REQUIRE(parsed.size() == reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CHECK(parsed[i].model_name == reports[i].model_name);
        CHECK(parsed[i].n == reports[i].n);
        CHECK(parsed[i].acc_3class == reports[i].acc_3class);
        CHECK(parsed[i].acc_3class_thresholded == reports[i].acc_3class_thresholded);
        CHECK(parsed[i].acc_2class == reports[i].acc_2class);
        CHECK(parsed[i].acc_2class_thresholded == reports[i].acc_2class_thresholded);
        CHECK(parsed[i].kept_fraction == reports[i].kept_fraction);
    }

    const std::string path = "tmp_report.csv";
    write_report_csv(path, reports);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == csv);
    std::remove(path.c_str());

    CHECK_THROWS_AS(parse_report_csv("wrong,header\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_report_csv("model,n,acc3,acc3_thr,acc2,acc2_thr,kept_frac\nx,1,0.5\n"),
                    std::runtime_error);
}

TEST_CASE("the plain-text table lines up its columns") {
    std::vector<EvalReport> reports;
    reports.push_back(build_report("ctts", {make_record(1, {0.1, 0.2, 0.7})}));
    reports.push_back(build_report("naive-longname", {make_record(0, {0.6, 0.3, 0.1})}));
    const std::string table = format_report_table(reports);

    std::istringstream lines(table);
    std::string header, row1, row2;
    REQUIRE(std::getline(lines, header));
    REQUIRE(std::getline(lines, row1));
    REQUIRE(std::getline(lines, row2));
    CHECK(header.size() == row1.size());
    CHECK(header.size() == row2.size());
    CHECK(header.find("model") != std::string::npos);
    CHECK(header.find("acc3") != std::string::npos);
    CHECK(row1.find("ctts") != std::string::npos);
    CHECK(row1.find("1.0000") != std::string::npos);
    CHECK(row2.find("naive-longname") != std::string::npos);
    CHECK(row2.find("0.0000") != std::string::npos);
}
