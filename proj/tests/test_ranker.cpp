#include "xssguard/error.hpp"
#include "xssguard/ranker.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace xssguard;
using testing_support::row;

namespace {

// Only the feature under test varies; the others are constant.
Dataset one_feature(Feature f, const std::vector<std::pair<std::string, Label>>& cells) {
    Dataset ds;
    for (const auto& [value, label] : cells) {
        Sample s = row("app", "INTERNET", "api", "site", "1.1.1.1", "US", label);
        s.value(f) = value;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

const std::vector<std::pair<std::string, Label>> kHandExample = {
    {"a", Label::Yes}, {"a", Label::Yes}, {"a", Label::No}, {"b", Label::No}};

} // namespace

TEST(Entropy, BinaryCases) {
    EXPECT_DOUBLE_EQ(binary_entropy({2, 2}), 1.0);
    EXPECT_DOUBLE_EQ(binary_entropy({4, 0}), 0.0);
    EXPECT_DOUBLE_EQ(binary_entropy({0, 0}), 0.0);
    EXPECT_NEAR(binary_entropy({1, 3}), 0.8112781244591328, 1e-15);
}

TEST(InfoGain, LabelCopyOnBalancedDataIsOne) {
    const Dataset ds = one_feature(Feature::ApiName, {{"y", Label::Yes}, {"y", Label::Yes}, {"n", Label::No}, {"n", Label::No}});
    EXPECT_DOUBLE_EQ(information_gain(ds, Feature::ApiName), 1.0);
    EXPECT_DOUBLE_EQ(gain_ratio(ds, Feature::ApiName), 1.0);
}

TEST(InfoGain, ConstantFeatureIsZero) {
    const Dataset ds = one_feature(Feature::ApiName, kHandExample);
    EXPECT_DOUBLE_EQ(information_gain(ds, Feature::Location), 0.0);
    EXPECT_DOUBLE_EQ(gain_ratio(ds, Feature::Location), 0.0);
}

TEST(InfoGain, HandComputedExample) {
    const Dataset ds = one_feature(Feature::WebsiteName, kHandExample);
    // 1 - 3/4 H(2/3, 1/3)
    const double h23 = -(2.0 / 3.0) * std::log2(2.0 / 3.0) - (1.0 / 3.0) * std::log2(1.0 / 3.0);
    const double ig = 1.0 - 0.75 * h23;
    EXPECT_NEAR(information_gain(ds, Feature::WebsiteName), ig, 1e-12);
    EXPECT_NEAR(information_gain(ds, Feature::WebsiteName), 0.3113, 5e-5);
    // split info H(3/4, 1/4)
    const double split = -0.75 * std::log2(0.75) - 0.25 * std::log2(0.25);
    EXPECT_NEAR(gain_ratio(ds, Feature::WebsiteName), ig / split, 1e-12);
    EXPECT_NEAR(gain_ratio(ds, Feature::WebsiteName), 0.3837, 5e-5);
}

TEST(InfoGain, EmptyDatasetRejected) { EXPECT_THROW(information_gain(Dataset{}, Feature::Ip), DomainError); }

TEST(InfoGain, MatchesOracleOnRandomData) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Dataset ds = testing_support::random_dataset(rng, 2 + rng.index(11));
        for (auto f : kFeatures) {
            const auto o = testing_support::oracle_split(ds, f);
            EXPECT_NEAR(information_gain(ds, f), static_cast<double>(o.gain), 1e-12);
            EXPECT_NEAR(gain_ratio(ds, f), static_cast<double>(o.ratio), 1e-12);
        }
    }
}

TEST(InfoGain, Bounds) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Dataset ds = testing_support::random_dataset(rng, 2 + rng.index(20), 4);
        const double h = binary_entropy({ds.count(Label::Yes), ds.count(Label::No)});
        for (auto f : kFeatures) {
            const double ig = information_gain(ds, f);
            EXPECT_GE(ig, 0.0);
            EXPECT_LE(ig, h);
            const double gr = gain_ratio(ds, f);
            EXPECT_GE(gr, 0.0);
            EXPECT_LE(gr, 1.0 + 1e-12);
        }
    }
}

TEST(InfoGain, RowOrderDoesNotMatter) {
    Rng rng(99);
    Dataset ds = testing_support::random_dataset(rng, 40, 4);
    const auto ig = rank_all(ds, RankMethod::InfoGain);
    const auto gr = rank_all(ds, RankMethod::GainRatio);
    const auto rf = rank_all(ds, RankMethod::ReliefF);
    rng.shuffle(std::span(ds.samples));
    EXPECT_EQ(rank_all(ds, RankMethod::InfoGain).scores, ig.scores);
    EXPECT_EQ(rank_all(ds, RankMethod::GainRatio).scores, gr.scores);
    EXPECT_EQ(rank_all(ds, RankMethod::ReliefF).scores, rf.scores);
}

TEST(ReliefF, ConstantFeatureIsZero) {
    const Dataset ds = one_feature(Feature::ApiName, kHandExample);
    EXPECT_DOUBLE_EQ(relief_f(ds, Feature::Location), 0.0);
}

TEST(ReliefF, LabelCopyIsPositiveAndMaximal) {
    Rng rng(3);
    Dataset ds = testing_support::random_dataset(rng, 8, 3);
    for (auto& s : ds.samples) {
        s.value(Feature::ApiName) = s.label == Label::Yes ? "yes" : "no";
    }
    const auto w = relief_f_weights(ds, {1, std::nullopt, 42});
    const double copy = w[static_cast<std::size_t>(Feature::ApiName)];
    EXPECT_GT(copy, 0.0);
    for (double x : w) {
        EXPECT_LE(x, copy);
    }
}

TEST(ReliefF, AntiCorrelatedFeatureIsNegative) {
    const Dataset ds = one_feature(Feature::Ip, {{"a", Label::Yes}, {"b", Label::Yes}, {"a", Label::No}, {"b", Label::No}});
    EXPECT_LT(relief_f(ds, Feature::Ip, {1, std::nullopt, 42}), 0.0);
}

TEST(ReliefF, MatchesOracleOnRandomData) {
    Rng rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const Dataset ds = testing_support::random_dataset(rng, 3 + rng.index(10));
        for (std::size_t k : {1u, 2u, 10u}) {
            const auto w = relief_f_weights(ds, {k, std::nullopt, 42});
            const auto o = testing_support::oracle_relief(ds, k);
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                EXPECT_NEAR(w[f], static_cast<double>(o[f]), 1e-9) << "trial " << trial << " k " << k;
            }
        }
    }
}

TEST(ReliefF, SampledRunIsSeedDeterministic) {
    const Dataset ds = generate(GeneratorParams{});
    const ReliefParams p{10, 100, 7};
    EXPECT_EQ(relief_f_weights(ds, p), relief_f_weights(ds, p));
}

TEST(ReliefF, NeedsBothClassesAndPositiveK) {
    const Dataset one = one_feature(Feature::Ip, {{"a", Label::Yes}, {"b", Label::Yes}});
    EXPECT_THROW(relief_f_weights(one), DomainError);
    const Dataset ds = one_feature(Feature::Ip, kHandExample);
    EXPECT_THROW(relief_f_weights(ds, {0, std::nullopt, 42}), DomainError);
}

TEST(Ranking, DefaultDatasetPutsApiNameFirst) {
    const Dataset ds = generate(GeneratorParams{});
    for (auto m : {RankMethod::InfoGain, RankMethod::GainRatio, RankMethod::ReliefF}) {
        EXPECT_EQ(rank_all(ds, m).order.front(), Feature::ApiName) << method_name(m);
    }
}

TEST(Ranking, RepeatedRowScoresZeroAndSortsByName) {
    const Dataset ds = testing_support::dataset(
        std::vector<Sample>(5, row("a", "INTERNET", "x", "s", "1.1.1.1", "US", Label::Yes)));
    for (auto m : {RankMethod::InfoGain, RankMethod::GainRatio}) {
        const auto r = rank_all(ds, m);
        for (double s : r.scores) {
            EXPECT_EQ(s, 0.0);
        }
        EXPECT_EQ(r.order, (std::vector<Feature>{Feature::ApiName, Feature::AppName, Feature::Ip, Feature::Location,
                                                 Feature::Permissions, Feature::WebsiteName}));
    }
}

TEST(Ranking, DuplicatedColumnsScoreEqually) {
    Rng rng(8);
    Dataset ds = testing_support::random_dataset(rng, 30, 4);
    for (auto& s : ds.samples) {
        s.value(Feature::Location) = s.value(Feature::Ip);
    }
    for (auto m : {RankMethod::InfoGain, RankMethod::GainRatio, RankMethod::ReliefF}) {
        const auto r = rank_all(ds, m);
        EXPECT_EQ(r.score(Feature::Location), r.score(Feature::Ip)) << method_name(m);
    }
}

TEST(Ranking, MethodNamesRoundTrip) {
    for (auto m : {RankMethod::InfoGain, RankMethod::GainRatio, RankMethod::ReliefF}) {
        EXPECT_EQ(parse_method(method_name(m)), m);
    }
    EXPECT_EQ(parse_method("chi2"), std::nullopt);
}
