#pragma once

#include "xssguard/dataset.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace xssguard {

enum class RankMethod { InfoGain, GainRatio, ReliefF };

std::string_view method_name(RankMethod m);  // "ig", "gr", "relieff"
std::optional<RankMethod> parse_method(std::string_view name);

struct ClassCounts {
    std::size_t yes = 0;
    std::size_t no = 0;

    std::size_t total() const noexcept { return yes + no; }
    void add(Label l) { (l == Label::Yes ? yes : no) += 1; }
};

/// Shannon entropy of a binary class distribution, base 2, 0*log0 = 0.
double binary_entropy(ClassCounts counts);

struct SplitScore {
    double gain = 0.0;
    double split_info = 0.0;
    double ratio = 0.0;  // 0 when split_info == 0
};

/// Information gain, split information and gain ratio of partitioning
/// `parent` into `branches` (which must sum to parent).
SplitScore score_partition(ClassCounts parent, std::span<const ClassCounts> branches);

/// Throws DomainError on an empty dataset.
double information_gain(const Dataset& ds, Feature f);
double gain_ratio(const Dataset& ds, Feature f);

struct ReliefParams {
    std::size_t k = 10;
    /// Sampled instances; all of them when unset or >= n.
    std::optional<std::size_t> m;
    std::uint64_t seed = 42;
};

/// Relief-F weights for all six features in one neighbor pass.
///
/// diff(f, a, b) is 0 for equal categories and 1 otherwise; distance is the
/// sum over features. Neighbor ties are broken by the rows' field values, and
/// sampled instances are chosen from rows sorted by those values, so the
/// result does not depend on row order. Throws DomainError unless both
/// classes are present, or when k == 0.
std::array<double, kFeatureCount> relief_f_weights(const Dataset& ds, const ReliefParams& params = {});
double relief_f(const Dataset& ds, Feature f, const ReliefParams& params = {});

struct FeatureRanking {
    RankMethod method = RankMethod::InfoGain;
    std::array<double, kFeatureCount> scores{};  // indexed by Feature
    std::vector<Feature> order;                  // descending score, ties by name

    double score(Feature f) const { return scores[static_cast<std::size_t>(f)]; }
};

FeatureRanking rank_all(const Dataset& ds, RankMethod method, const ReliefParams& params = {});

} // namespace xssguard
