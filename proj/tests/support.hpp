#pragma once

// Shared fixtures and independent reference computations for the tests.

#include "xssguard/catalog.hpp"
#include "xssguard/dataset.hpp"
#include "xssguard/eval.hpp"
#include "xssguard/learners.hpp"
#include "xssguard/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

namespace testing_support {

using namespace xssguard;

inline Sample row(std::string app, std::string perms, std::string api, std::string site, std::string ip,
                  std::string loc, Label label) {
    Sample s;
    s.value(Feature::AppName) = std::move(app);
    s.value(Feature::Permissions) = std::move(perms);
    s.value(Feature::ApiName) = std::move(api);
    s.value(Feature::WebsiteName) = std::move(site);
    s.value(Feature::Ip) = std::move(ip);
    s.value(Feature::Location) = std::move(loc);
    s.label = label;
    return s;
}

inline Dataset dataset(std::vector<Sample> samples) {
    Dataset ds;
    ds.samples = std::move(samples);
    return ds;
}

/// Small random dataset over tiny per-feature alphabets, both classes present.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t alphabet = 3) {
    Dataset ds;
    for (std::size_t i = 0; i < n; ++i) {
        Sample s;
        for (auto f : kFeatures) {
            s.value(f) = std::string(1, static_cast<char>('a' + rng.index(alphabet)));
        }
        s.label = rng.bernoulli(0.5) ? Label::Yes : Label::No;
        ds.samples.push_back(std::move(s));
    }
    ds.samples[0].label = Label::Yes;
    ds.samples[1].label = Label::No;
    return ds;
}

// ---------------------------------------------------------------------------
// Feature scoring, computed straight from the definitions in long double.

inline long double entropy_of(std::size_t yes, std::size_t no) {
    const long double n = static_cast<long double>(yes + no);
    long double h = 0.0L;
    for (auto c : {yes, no}) {
        if (c > 0) {
            const long double p = static_cast<long double>(c) / n;
            h -= p * std::log2(p);
        }
    }
    return h;
}

struct OracleSplit {
    long double gain;
    long double ratio;
};

inline OracleSplit oracle_split(const Dataset& ds, Feature f) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> groups;
    std::size_t yes = 0;
    for (const auto& s : ds.samples) {
        auto& g = groups[s.value(f)];
        if (s.label == Label::Yes) {
            ++g.first;
            ++yes;
        } else {
            ++g.second;
        }
    }
    const long double n = static_cast<long double>(ds.size());
    long double cond = 0.0L;
    long double split = 0.0L;
    for (const auto& [v, g] : groups) {
        const long double w = static_cast<long double>(g.first + g.second) / n;
        cond += w * entropy_of(g.first, g.second);
        split -= w * std::log2(w);
    }
    const long double gain = std::max(0.0L, entropy_of(yes, ds.size() - yes) - cond);
    return {gain, split > 0.0L ? gain / split : 0.0L};
}

/// Relief-F over every instance, neighbors found by full sort. Ties in
/// distance go to the neighbor whose (field values, label) sorts first.
inline std::array<long double, kFeatureCount> oracle_relief(const Dataset& ds, std::size_t k) {
    const std::size_t n = ds.size();
    std::array<long double, kFeatureCount> w{};
    auto diff = [&](std::size_t a, std::size_t b, std::size_t f) {
        return ds.samples[a].values[f] != ds.samples[b].values[f] ? 1 : 0;
    };
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<std::tuple<int, std::array<std::string, kFeatureCount>, int, std::size_t>> hits, misses;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == r) {
                continue;
            }
            int d = 0;
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                d += diff(r, j, f);
            }
            auto entry = std::make_tuple(d, ds.samples[j].values, static_cast<int>(ds.samples[j].label), j);
            (ds.samples[j].label == ds.samples[r].label ? hits : misses).push_back(entry);
        }
        std::sort(hits.begin(), hits.end());
        std::sort(misses.begin(), misses.end());
        const std::size_t kh = std::min(k, hits.size());
        const std::size_t km = std::min(k, misses.size());
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            long double h = 0.0L;
            long double m = 0.0L;
            for (std::size_t t = 0; t < kh; ++t) {
                h += diff(r, std::get<3>(hits[t]), f);
            }
            for (std::size_t t = 0; t < km; ++t) {
                m += diff(r, std::get<3>(misses[t]), f);
            }
            if (kh > 0) {
                w[f] -= h / (static_cast<long double>(n) * static_cast<long double>(kh));
            }
            w[f] += m / (static_cast<long double>(n) * static_cast<long double>(km));
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// Exact rational arithmetic for metric checks.

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t n, std::int64_t d) {
        if (d == 0) {
            return {0, 1};  // the 0/0 := 0 convention
        }
        const std::int64_t g = std::gcd(n, d);
        return {n / g, d / g};
    }
    /// Correctly rounded, so equal rationals give equal doubles.
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct OracleMetrics {
    Rational accuracy, precision, recall, f_measure;
};

inline OracleMetrics oracle_metrics(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
    OracleMetrics m;
    m.accuracy = Rational::of(tp + tn, tp + tn + fp + fn);
    m.precision = Rational::of(tp, tp + fp);
    m.recall = Rational::of(tp, tp + fn);
    // F = 2PR / (P + R) in exact arithmetic; 0 when P + R = 0.
    const Rational p = m.precision;
    const Rational r = m.recall;
    const std::int64_t num = 2 * p.num * r.num;
    const std::int64_t den = p.num * r.den + r.num * p.den;
    m.f_measure = den == 0 ? Rational{0, 1} : Rational::of(num, den);
    return m;
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties half.
inline double pairwise_auc(const std::vector<ScoredLabel>& scored) {
    long double good = 0.0L;
    long double pairs = 0.0L;
    for (const auto& p : scored) {
        if (p.actual != Label::Yes) {
            continue;
        }
        for (const auto& q : scored) {
            if (q.actual != Label::No) {
                continue;
            }
            pairs += 1.0L;
            good += p.score > q.score ? 1.0L : p.score == q.score ? 0.5L : 0.0L;
        }
    }
    return static_cast<double>(good / pairs);
}

// ---------------------------------------------------------------------------
// Classifier stub for engine tests: flags exactly the events whose API
// feature is a catalog entry.

class SensitiveApiStub final : public detail::Fitted {
public:
    double score(const Sample& s) const override {
        return SensitiveApiCatalog::builtin().is_sensitive(s.value(Feature::ApiName)) ? 0.9 : 0.1;
    }
    Json to_json() const override { return Json::object(); }
};

inline ClassifierModel sensitive_api_model() {
    return ClassifierModel(ClassifierSpec(ClassifierKind::NaiveBayes), std::make_shared<SensitiveApiStub>(), {});
}

inline BridgeEvent bridge_event(std::string id, std::string site, std::vector<std::string> apis,
                                std::int64_t ts = 0, std::string object = "jsBridge") {
    BridgeEvent e;
    e.event_id = std::move(id);
    e.app_name = "NewsHub";
    e.object_name = std::move(object);
    e.website_name = std::move(site);
    e.ip = "203.0.113.7";
    e.location = "US";
    e.permissions = "INTERNET";
    e.requested_apis = std::move(apis);
    e.timestamp = ts;
    return e;
}

} // namespace testing_support
