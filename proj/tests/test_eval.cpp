#include "xssguard/error.hpp"
#include "xssguard/eval.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace xssguard;
using testing_support::row;

namespace {

const Dataset& default_data() {
    static const Dataset ds = generate(GeneratorParams{});
    return ds;
}

std::vector<ScoredLabel> scored(std::initializer_list<std::pair<double, Label>> items) {
    std::vector<ScoredLabel> out;
    for (const auto& [s, l] : items) {
        out.push_back({s, l});
    }
    return out;
}

std::vector<ClassifierSpec> quick_specs() {
    return {
        ClassifierSpec(ClassifierKind::NaiveBayes),
        ClassifierSpec(ClassifierKind::J48),
        ClassifierSpec(ClassifierKind::Bagging, {{"trees", 3}}),
        ClassifierSpec(ClassifierKind::RandomForest, {{"trees", 5}}),
        ClassifierSpec(ClassifierKind::SVM, {{"epochs", 5}}),
        ClassifierSpec(ClassifierKind::ESVM, {{"population", 2}, {"generations", 2}, {"inner_folds", 2}}),
        ClassifierSpec(ClassifierKind::NeuralNet, {{"epochs", 5}, {"hidden", 4}}),
    };
}

} // namespace

TEST(Folds, BalancedDefaultDataGivesTwentyThreeEachWay) {
    const Dataset& ds = default_data();
    const auto folds = stratified_folds(ds, 10, 42);
    ASSERT_EQ(folds.size(), 10u);
    for (const auto& f : folds) {
        std::size_t yes = 0;
        for (auto i : f.test) {
            yes += ds.samples[i].label == Label::Yes;
        }
        EXPECT_EQ(yes, 23u);
        EXPECT_EQ(f.test.size() - yes, 23u);
        EXPECT_EQ(f.train.size(), 414u);
    }
}

TEST(Folds, TwoFoldsOnFourRows) {
    const std::vector<Label> labels = {Label::Yes, Label::Yes, Label::No, Label::No};
    for (const auto& f : stratified_folds(labels, 2, 1)) {
        ASSERT_EQ(f.test.size(), 2u);
        EXPECT_NE(labels[f.test[0]], labels[f.test[1]]);
    }
}

TEST(Folds, TestFoldsPartitionTheIndices) {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Label> labels;
        const std::size_t n = 10 + rng.index(40);
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(i < 5 || rng.bernoulli(0.5) ? Label::Yes : Label::No);
        }
        for (std::size_t i = 0; i < 5; ++i) {
            labels.push_back(Label::No);
        }
        const auto folds = stratified_folds(labels, 5, rng.next());
        std::multiset<std::size_t> seen;
        for (const auto& f : folds) {
            EXPECT_TRUE(std::is_sorted(f.test.begin(), f.test.end()));
            EXPECT_EQ(f.train.size() + f.test.size(), labels.size());
            std::set<std::size_t> train(f.train.begin(), f.train.end());
            for (auto i : f.test) {
                EXPECT_FALSE(train.contains(i));
            }
            seen.insert(f.test.begin(), f.test.end());
        }
        EXPECT_EQ(seen.size(), labels.size());
        EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), labels.size());
    }
}

TEST(Folds, RejectsTooFewRowsOrFolds) {
    const std::vector<Label> labels = {Label::Yes, Label::No, Label::No, Label::No};
    EXPECT_THROW(stratified_folds(labels, 2, 1), DomainError);
    EXPECT_THROW(stratified_folds(labels, 1, 1), DomainError);
}

TEST(Folds, SeedDeterminesPartition) {
    const Dataset& ds = default_data();
    const auto a = stratified_folds(ds, 10, 42);
    const auto b = stratified_folds(ds, 10, 42);
    const auto c = stratified_folds(ds, 10, 43);
    EXPECT_EQ(a[0].test, b[0].test);
    EXPECT_NE(a[0].test, c[0].test);
}

TEST(Metrics, PerfectClassifier) {
    const auto m = metrics({5, 5, 0, 0});
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.f_measure, 1.0);
}

TEST(Metrics, WorkedExample) {
    const auto m = metrics({50, 40, 5, 5});
    EXPECT_EQ(m.accuracy, 0.9);
    EXPECT_EQ(m.precision, 50.0 / 55.0);
    EXPECT_EQ(m.recall, 50.0 / 55.0);
    EXPECT_NEAR(m.f_measure, 0.9091, 5e-5);
}

TEST(Metrics, DegenerateDenominatorsGiveZero) {
    const auto m = metrics({0, 90, 0, 10});
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.f_measure, 0.0);
    EXPECT_EQ(m.accuracy, 0.9);
    const auto all_negative = metrics({0, 7, 0, 0});
    EXPECT_EQ(all_negative.recall, 0.0);
    EXPECT_EQ(all_negative.accuracy, 1.0);
    EXPECT_THROW(metrics({0, 0, 0, 0}), DomainError);
}

TEST(Metrics, MatchesRationalOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const ConfusionCounts c{rng.index(30), rng.index(30), rng.index(30), rng.index(30) + (trial == 0 ? 0 : 1)};
        const auto m = metrics(c);
        const auto o = testing_support::oracle_metrics(c.tp, c.tn, c.fp, c.fn);
        EXPECT_EQ(m.accuracy, o.accuracy.value());
        EXPECT_EQ(m.precision, o.precision.value());
        EXPECT_EQ(m.recall, o.recall.value());
        EXPECT_EQ(m.f_measure, o.f_measure.value());
    }
}

TEST(Confusion, AddAndAccumulate) {
    ConfusionCounts c;
    c.add(Label::Yes, Label::Yes);
    c.add(Label::Yes, Label::No);
    c.add(Label::No, Label::Yes);
    c.add(Label::No, Label::No);
    c.add(Label::No, Label::No);
    EXPECT_EQ(c, (ConfusionCounts{1, 2, 1, 1}));
    c += c;
    EXPECT_EQ(c.total(), 10u);
}

TEST(Roc, WorkedExampleMatchesPairwiseOracle) {
    const auto s = scored({{0.9, Label::Yes}, {0.8, Label::No}, {0.7, Label::Yes}, {0.1, Label::No}});
    const auto curve = roc_curve(s);
    EXPECT_EQ(auc(curve), 0.75);
    EXPECT_EQ(auc(curve), testing_support::pairwise_auc(s));
    const auto frac = auc_fraction(curve);
    EXPECT_EQ(frac.numerator, 6u);
    EXPECT_EQ(frac.denominator, 8u);
}

TEST(Roc, PerfectScorerHasAreaOne) {
    const auto s = scored({{0.9, Label::Yes}, {0.6, Label::Yes}, {0.4, Label::No}, {0.0, Label::No}});
    EXPECT_EQ(auc(roc_curve(s)), 1.0);
}

TEST(Roc, EqualScoresGiveDiagonal) {
    const auto s = scored({{0.5, Label::Yes}, {0.5, Label::No}, {0.5, Label::No}});
    const auto curve = roc_curve(s);
    ASSERT_EQ(curve.points.size(), 2u);
    EXPECT_EQ(curve.points[0].fpr, 0.0);
    EXPECT_EQ(curve.points[1].tpr, 1.0);
    EXPECT_EQ(auc(curve), 0.5);
}

TEST(Roc, RandomScoresAreMonotoneAndMatchOracle) {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ScoredLabel> s = {{rng.uniform(), Label::Yes}, {rng.uniform(), Label::No}};
        const std::size_t n = rng.index(30);
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse scores force ties.
            s.push_back({static_cast<double>(rng.index(6)) / 5.0, rng.bernoulli(0.5) ? Label::Yes : Label::No});
        }
        const auto curve = roc_curve(s);
        EXPECT_EQ(curve.points.front().fpr, 0.0);
        EXPECT_EQ(curve.points.front().tpr, 0.0);
        EXPECT_EQ(curve.points.back().fpr, 1.0);
        EXPECT_EQ(curve.points.back().tpr, 1.0);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            EXPECT_GE(curve.points[i].fpr, curve.points[i - 1].fpr);
            EXPECT_GE(curve.points[i].tpr, curve.points[i - 1].tpr);
        }
        EXPECT_NEAR(auc(curve), testing_support::pairwise_auc(s), 1e-12);

        auto flipped = s;
        for (auto& x : flipped) {
            x.score = 1.0 - x.score;
        }
        EXPECT_NEAR(auc(roc_curve(flipped)), 1.0 - auc(curve), 1e-12);
    }
}

TEST(Roc, NeedsBothClasses) {
    EXPECT_THROW(roc_curve(scored({{0.3, Label::Yes}})), DomainError);
}

TEST(Evaluate, ReportHasOneEntryPerSpecWithFoldRecords) {
    const auto specs = quick_specs();
    const auto report = evaluate_all(default_data(), specs, 10, 42);
    ASSERT_EQ(report.classifiers.size(), 7u);
    EXPECT_EQ(report.n, 460u);
    for (const auto& c : report.classifiers) {
        EXPECT_FALSE(c.error.has_value());
        EXPECT_EQ(c.folds.size(), 10u);
        EXPECT_EQ(c.pooled.total(), 460u);
        EXPECT_EQ(c.metrics.accuracy, metrics(c.pooled).accuracy);
        EXPECT_EQ(c.metrics.f_measure, metrics(c.pooled).f_measure);
        ConfusionCounts sum;
        for (const auto& f : c.folds) {
            sum += f.counts;
        }
        EXPECT_EQ(sum, c.pooled);
    }
    EXPECT_NE(report.find(ClassifierKind::ESVM), nullptr);
}

TEST(Evaluate, SameSeedSameNumbers) {
    const auto specs = quick_specs();
    const auto a = evaluate_all(default_data(), specs, 5, 42);
    const auto b = evaluate_all(default_data(), specs, 5, 42);
    EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
    EXPECT_EQ(metrics_table_csv(a), metrics_table_csv(b));
    EXPECT_EQ(roc_csv(a), roc_csv(b));
}

TEST(Evaluate, FailingSpecIsIsolated) {
    Dataset ds = testing_support::dataset({
        row("a", "INTERNET", "x", "s1", "1.1.1.1", "US", Label::Yes),
        row("a", "INTERNET", "x", "s1", "1.1.1.1", "US", Label::Yes),
        row("b", "INTERNET", "y", "s2", "1.1.1.2", "DE", Label::No),
        row("b", "INTERNET", "y", "s2", "1.1.1.2", "DE", Label::No),
    });
    // ESVM's inner CV needs three rows per class in each training split.
    const std::vector<ClassifierSpec> specs = {ClassifierSpec(ClassifierKind::NaiveBayes),
                                               ClassifierSpec(ClassifierKind::ESVM, {{"inner_folds", 3}})};
    const auto report = evaluate_all(ds, specs, 2, 42);
    ASSERT_EQ(report.classifiers.size(), 2u);
    EXPECT_FALSE(report.classifiers[0].error.has_value());
    EXPECT_EQ(report.classifiers[0].metrics.accuracy, 1.0);
    EXPECT_TRUE(report.classifiers[1].error.has_value());
    const Json doc = report_to_json(report);
    EXPECT_TRUE(doc["classifiers"][1].contains("error"));
}

TEST(Evaluate, JsonOmitsTimingsUnlessAsked) {
    const std::vector<ClassifierSpec> specs = {ClassifierSpec(ClassifierKind::NaiveBayes)};
    const auto report = evaluate_all(default_data(), specs, 10, 42);
    const std::string plain = report_to_json(report).dump();
    EXPECT_EQ(plain.find("_ms"), std::string::npos);
    EXPECT_NE(report_to_json(report, true).dump().find("train_ms"), std::string::npos);
    const Json doc = report_to_json(report);
    EXPECT_EQ(doc["n"], 460);
    EXPECT_EQ(doc["k"], 10);
    EXPECT_EQ(doc["classifiers"].size(), 1u);
    EXPECT_EQ(metrics_table_csv(report).substr(0, 49), "classifier,accuracy,precision,recall,f_measure,au");
    EXPECT_EQ(timing_table_csv(report).substr(0, 41), "classifier,train_ms,test_ms,total_ms\nNaiv");
}

TEST(Evaluate, DefaultSpecsCoverAllKinds) {
    const auto specs = default_specs(42);
    ASSERT_EQ(specs.size(), 7u);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        EXPECT_EQ(specs[i].kind(), kAllKinds[i]);
    }
}
