#include "xssguard/ranker.hpp"

#include "xssguard/error.hpp"
#include "xssguard/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace xssguard {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

std::map<std::string_view, ClassCounts> tally(const Dataset& ds, Feature f) {
    std::map<std::string_view, ClassCounts> by_value;
    for (const auto& s : ds.samples) {
        by_value[s.value(f)].add(s.label);
    }
    return by_value;
}

SplitScore score_feature(const Dataset& ds, Feature f) {
    if (ds.empty()) {
        throw DomainError("feature scoring needs a non-empty dataset");
    }
    ClassCounts parent;
    for (const auto& s : ds.samples) {
        parent.add(s.label);
    }
    std::vector<ClassCounts> branches;
    for (const auto& [value, counts] : tally(ds, f)) {
        branches.push_back(counts);
    }
    return score_partition(parent, branches);
}

// Integer codes per feature so the neighbor search compares ints.
struct CodedRows {
    std::vector<std::array<std::uint32_t, kFeatureCount>> codes;
    std::vector<std::size_t> rank;  // position of each row in field-value order
};

CodedRows code_rows(const Dataset& ds) {
    CodedRows out;
    out.codes.resize(ds.size());
    for (auto f : kFeatures) {
        std::unordered_map<std::string_view, std::uint32_t> ids;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            auto [it, inserted] = ids.try_emplace(ds.samples[i].value(f), static_cast<std::uint32_t>(ids.size()));
            out.codes[i][static_cast<std::size_t>(f)] = it->second;
        }
    }
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& sa = ds.samples[a];
        const auto& sb = ds.samples[b];
        if (sa.values != sb.values) {
            return sa.values < sb.values;
        }
        return sa.label < sb.label;
    });
    out.rank.resize(ds.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        out.rank[order[pos]] = pos;
    }
    return out;
}

} // namespace

std::string_view method_name(RankMethod m) {
    switch (m) {
    case RankMethod::InfoGain: return "ig";
    case RankMethod::GainRatio: return "gr";
    case RankMethod::ReliefF: return "relieff";
    }
    return "?";
}

std::optional<RankMethod> parse_method(std::string_view name) {
    for (auto m : {RankMethod::InfoGain, RankMethod::GainRatio, RankMethod::ReliefF}) {
        if (method_name(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

double binary_entropy(ClassCounts counts) {
    const auto n = static_cast<double>(counts.total());
    if (n == 0.0) {
        return 0.0;
    }
    return -(plogp(static_cast<double>(counts.yes) / n) + plogp(static_cast<double>(counts.no) / n));
}

SplitScore score_partition(ClassCounts parent, std::span<const ClassCounts> branches) {
    const auto n = static_cast<double>(parent.total());
    if (n == 0.0) {
        return {};
    }
    const double h = binary_entropy(parent);
    double conditional = 0.0;
    double split_info = 0.0;
    for (const auto& b : branches) {
        const double share = static_cast<double>(b.total()) / n;
        conditional += share * binary_entropy(b);
        split_info -= plogp(share);
    }
    SplitScore score;
    score.gain = std::clamp(h - conditional, 0.0, h);
    score.split_info = split_info;
    score.ratio = split_info > 0.0 ? score.gain / split_info : 0.0;
    return score;
}

double information_gain(const Dataset& ds, Feature f) { return score_feature(ds, f).gain; }

double gain_ratio(const Dataset& ds, Feature f) { return score_feature(ds, f).ratio; }

std::array<double, kFeatureCount> relief_f_weights(const Dataset& ds, const ReliefParams& params) {
    if (params.k == 0) {
        throw DomainError("Relief-F needs k >= 1");
    }
    const std::size_t n = ds.size();
    const std::size_t yes = ds.count(Label::Yes);
    if (yes == 0 || yes == n) {
        throw DomainError("Relief-F needs both classes present");
    }

    const CodedRows rows = code_rows(ds);
    std::vector<std::size_t> by_rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        by_rank[rows.rank[i]] = i;
    }

    // Sampled instances: all rows, or the first m of a seeded shuffle of the
    // value-sorted rows. Either way they are visited in value order.
    std::vector<std::size_t> sampled = by_rank;
    if (params.m && *params.m < n) {
        Rng rng(params.seed);
        rng.shuffle(std::span(sampled));
        sampled.resize(*params.m);
        std::sort(sampled.begin(), sampled.end(),
                  [&](std::size_t a, std::size_t b) { return rows.rank[a] < rows.rank[b]; });
    }
    const auto m = static_cast<double>(sampled.size());

    auto distance = [&](std::size_t a, std::size_t b) {
        int d = 0;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            d += rows.codes[a][f] != rows.codes[b][f];
        }
        return d;
    };

    std::array<double, kFeatureCount> weights{};
    std::vector<std::pair<int, std::size_t>> hits, misses;  // (distance, rank)
    hits.reserve(n);
    misses.reserve(n);
    for (const std::size_t r : sampled) {
        hits.clear();
        misses.clear();
        const Label own = ds.samples[r].label;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == r) {
                continue;
            }
            auto& bucket = ds.samples[j].label == own ? hits : misses;
            bucket.emplace_back(distance(r, j), rows.rank[j]);
        }
        const std::size_t kh = std::min(params.k, hits.size());
        const std::size_t km = std::min(params.k, misses.size());
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(kh), hits.end());
        std::partial_sort(misses.begin(), misses.begin() + static_cast<std::ptrdiff_t>(km), misses.end());

        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            double near_hit = 0.0;
            for (std::size_t t = 0; t < kh; ++t) {
                near_hit += rows.codes[r][f] != rows.codes[by_rank[hits[t].second]][f];
            }
            double near_miss = 0.0;
            for (std::size_t t = 0; t < km; ++t) {
                near_miss += rows.codes[r][f] != rows.codes[by_rank[misses[t].second]][f];
            }
            // Binary classes: the prior weight P(C)/(1-P(class(R))) is 1.
            if (kh > 0) {
                weights[f] -= near_hit / (m * static_cast<double>(kh));
            }
            weights[f] += near_miss / (m * static_cast<double>(km));
        }
    }
    return weights;
}

double relief_f(const Dataset& ds, Feature f, const ReliefParams& params) {
    return relief_f_weights(ds, params)[static_cast<std::size_t>(f)];
}

FeatureRanking rank_all(const Dataset& ds, RankMethod method, const ReliefParams& params) {
    FeatureRanking ranking;
    ranking.method = method;
    if (method == RankMethod::ReliefF) {
        ranking.scores = relief_f_weights(ds, params);
    } else {
        for (auto f : kFeatures) {
            const auto s = score_feature(ds, f);
            ranking.scores[static_cast<std::size_t>(f)] = method == RankMethod::InfoGain ? s.gain : s.ratio;
        }
    }
    ranking.order.assign(kFeatures.begin(), kFeatures.end());
    std::sort(ranking.order.begin(), ranking.order.end(), [&](Feature a, Feature b) {
        if (ranking.score(a) != ranking.score(b)) {
            return ranking.score(a) > ranking.score(b);
        }
        return feature_name(a) < feature_name(b);
    });
    return ranking;
}

} // namespace xssguard
