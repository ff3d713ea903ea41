#pragma once

#include "xssguard/dataset.hpp"
#include "xssguard/learners.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xssguard {

/// Yes is the positive class.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    void add(Label predicted, Label actual);
    ConfusionCounts& operator+=(const ConfusionCounts& o);
    bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
};

/// accuracy = (TP+TN)/total, precision = TP/(TP+FP), recall = TP/(TP+FN),
/// F = 2PR/(P+R), evaluated as 2TP/(2TP+FP+FN) so every value is a single
/// correctly rounded division. Precision, recall and F are 0 when their
/// denominator is 0. Throws DomainError when total is 0.
Metrics metrics(const ConfusionCounts& counts);

struct Fold {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending
};

/// Per class, rows are shuffled under `seed` and dealt round-robin into k
/// folds, so each fold's class counts are within one of the exact share.
/// Throws DomainError if k < 2 or some present class has fewer than k rows.
std::vector<Fold> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed);
std::vector<Fold> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed);

struct ScoredLabel {
    double score = 0.0;
    Label actual = Label::No;
};

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    std::size_t fp = 0;
    std::size_t tp = 0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Thresholds sweep the distinct scores from high to low; tied scores enter
/// together. Throws DomainError unless both classes are present.
RocCurve roc_curve(std::span<const ScoredLabel> scored);

/// Trapezoid area as an exact fraction: numerator / (2 * P * N).
struct AucFraction {
    std::uint64_t numerator = 0;
    std::uint64_t denominator = 0;
};
AucFraction auc_fraction(const RocCurve& curve);
double auc(const RocCurve& curve);

struct FoldRecord {
    std::size_t fold = 0;
    ConfusionCounts counts;
    double train_ms = 0.0;
    double test_ms = 0.0;
};

struct ClassifierReport {
    ClassifierSpec spec;
    std::optional<std::string> error;  // set when this classifier failed
    ConfusionCounts pooled;
    Metrics metrics;
    RocCurve roc;
    double auc = 0.0;
    double train_ms = 0.0;
    double test_ms = 0.0;
    std::vector<FoldRecord> folds;
};

struct EvaluationReport {
    std::size_t n = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<ClassifierReport> classifiers;

    const ClassifierReport* find(ClassifierKind kind) const;
};

/// Runs every spec over one shared fold partition. Confusion counts and
/// scores are pooled across folds; wall-clock time is summed per phase. A
/// spec that throws gets its `error` set and does not stop the others.
EvaluationReport evaluate_all(const Dataset& ds, std::span<const ClassifierSpec> specs, std::size_t k,
                              std::uint64_t seed);

/// Wall-clock fields are written only when `include_timings` is set, so the
/// default document is reproducible byte for byte.
Json report_to_json(const EvaluationReport& report, bool include_timings = false);

/// classifier,accuracy,precision,recall,f_measure,auc
std::string metrics_table_csv(const EvaluationReport& report);
/// classifier,train_ms,test_ms,total_ms
std::string timing_table_csv(const EvaluationReport& report);
/// classifier,fpr,tpr
std::string roc_csv(const EvaluationReport& report);

std::vector<ClassifierSpec> default_specs(std::uint64_t seed);

} // namespace xssguard
