#include "xssguard/eval.hpp"

#include "xssguard/error.hpp"
#include "xssguard/rng.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <map>
#include <sstream>

namespace xssguard {

void ConfusionCounts::add(Label predicted, Label actual) {
    if (actual == Label::Yes) {
        (predicted == Label::Yes ? tp : fn) += 1;
    } else {
        (predicted == Label::Yes ? fp : tn) += 1;
    }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
}

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) {
        throw DomainError("metrics of an empty confusion matrix");
    }
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.accuracy = ratio(c.tp + c.tn, c.total());
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN) whenever P+R > 0; P+R == 0 iff TP == 0.
    m.f_measure = c.tp == 0 ? 0.0 : ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    return m;
}

std::vector<Fold> stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) {
        throw DomainError("stratified folds need k >= 2");
    }
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < 2; ++c) {
        if (!by_class[c].empty() && by_class[c].size() < k) {
            throw DomainError("class " + std::string(label_name(static_cast<Label>(c))) + " has " +
                              std::to_string(by_class[c].size()) + " rows, fewer than k = " + std::to_string(k));
        }
    }

    const Rng root(seed);
    std::vector<std::size_t> fold_of(labels.size());
    // Yes is dealt first starting at fold 0, No continues where Yes stopped,
    // which keeps fold sizes within one of each other as well.
    std::size_t next = 0;
    for (std::size_t c : {std::size_t{1}, std::size_t{0}}) {
        Rng rng = root.split(c);
        rng.shuffle(std::span(by_class[c]));
        for (auto i : by_class[c]) {
            fold_of[i] = next;
            next = (next + 1) % k;
        }
    }

    std::vector<Fold> folds(k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            (fold_of[i] == f ? folds[f].test : folds[f].train).push_back(i);
        }
    }
    return folds;
}

std::vector<Fold> stratified_folds(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    std::vector<Label> labels;
    labels.reserve(ds.size());
    for (const auto& s : ds.samples) {
        labels.push_back(s.label);
    }
    return stratified_folds(labels, k, seed);
}

RocCurve roc_curve(std::span<const ScoredLabel> scored) {
    RocCurve curve;
    for (const auto& s : scored) {
        (s.actual == Label::Yes ? curve.positives : curve.negatives) += 1;
    }
    if (curve.positives == 0 || curve.negatives == 0) {
        throw DomainError("ROC needs both classes present");
    }
    std::vector<ScoredLabel> sorted(scored.begin(), scored.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) { return a.score > b.score; });

    const auto P = static_cast<double>(curve.positives);
    const auto N = static_cast<double>(curve.negatives);
    curve.points.push_back({0.0, 0.0, 0, 0});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double threshold = sorted[i].score;
        while (i < sorted.size() && sorted[i].score == threshold) {
            (sorted[i].actual == Label::Yes ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, fp, tp});
    }
    return curve;
}

AucFraction auc_fraction(const RocCurve& curve) {
    AucFraction out;
    out.denominator = 2ull * curve.positives * curve.negatives;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        out.numerator += (b.fp - a.fp) * (a.tp + b.tp);
    }
    return out;
}

double auc(const RocCurve& curve) {
    const auto f = auc_fraction(curve);
    if (f.denominator == 0) {
        throw DomainError("AUC of an empty curve");
    }
    return static_cast<double>(f.numerator) / static_cast<double>(f.denominator);
}

const ClassifierReport* EvaluationReport::find(ClassifierKind kind) const {
    for (const auto& c : classifiers) {
        if (c.spec.kind() == kind) {
            return &c;
        }
    }
    return nullptr;
}

EvaluationReport evaluate_all(const Dataset& ds, std::span<const ClassifierSpec> specs, std::size_t k,
                              std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

    EvaluationReport report;
    report.n = ds.size();
    report.k = k;
    report.seed = seed;
    const auto folds = stratified_folds(ds, k, seed);
    std::vector<Dataset> train_sets;
    for (const auto& fold : folds) {
        train_sets.push_back(ds.subset(fold.train));
    }

    for (const auto& spec : specs) {
        ClassifierReport entry{spec, std::nullopt, {}, {}, {}, 0.0, 0.0, 0.0, {}};
        try {
            std::vector<ScoredLabel> scored;
            scored.reserve(ds.size());
            for (std::size_t f = 0; f < folds.size(); ++f) {
                FoldRecord record;
                record.fold = f;
                const auto t0 = clock::now();
                const ClassifierModel model = train(spec, train_sets[f]);
                const auto t1 = clock::now();
                for (auto i : folds[f].test) {
                    const auto& s = ds.samples[i];
                    const double score = model.score(s);
                    record.counts.add(score >= 0.5 ? Label::Yes : Label::No, s.label);
                    scored.push_back({score, s.label});
                }
                const auto t2 = clock::now();
                record.train_ms = ms(t1 - t0);
                record.test_ms = ms(t2 - t1);
                entry.pooled += record.counts;
                entry.train_ms += record.train_ms;
                entry.test_ms += record.test_ms;
                entry.folds.push_back(record);
            }
            entry.metrics = metrics(entry.pooled);
            entry.roc = roc_curve(scored);
            entry.auc = auc(entry.roc);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        report.classifiers.push_back(std::move(entry));
    }
    return report;
}

namespace {

Json counts_json(const ConfusionCounts& c) { return Json{{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}}; }

std::string fixed(double v, int digits = 6) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

} // namespace

Json report_to_json(const EvaluationReport& report, bool include_timings) {
    Json doc;
    doc["n"] = report.n;
    doc["k"] = report.k;
    doc["seed"] = report.seed;
    Json entries = Json::array();
    for (const auto& c : report.classifiers) {
        Json e;
        e["classifier"] = kind_name(c.spec.kind());
        e["seed"] = c.spec.seed();
        e["hyperparameters"] = Json::object();
        for (const auto& [key, value] : c.spec.hyperparameters()) {
            e["hyperparameters"][key] = value;
        }
        if (c.error) {
            e["error"] = *c.error;
            entries.push_back(std::move(e));
            continue;
        }
        e["accuracy"] = c.metrics.accuracy;
        e["precision"] = c.metrics.precision;
        e["recall"] = c.metrics.recall;
        e["f_measure"] = c.metrics.f_measure;
        e["auc"] = c.auc;
        e["confusion"] = counts_json(c.pooled);
        Json roc = Json::array();
        for (const auto& p : c.roc.points) {
            roc.push_back(Json::array({p.fpr, p.tpr}));
        }
        e["roc"] = std::move(roc);
        if (include_timings) {
            e["train_ms"] = c.train_ms;
            e["test_ms"] = c.test_ms;
        }
        Json folds = Json::array();
        for (const auto& f : c.folds) {
            Json fj;
            fj["fold"] = f.fold;
            fj["confusion"] = counts_json(f.counts);
            fj["accuracy"] = metrics(f.counts).accuracy;
            if (include_timings) {
                fj["train_ms"] = f.train_ms;
                fj["test_ms"] = f.test_ms;
            }
            folds.push_back(std::move(fj));
        }
        e["folds"] = std::move(folds);
        entries.push_back(std::move(e));
    }
    doc["classifiers"] = std::move(entries);
    return doc;
}

std::string metrics_table_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "classifier,accuracy,precision,recall,f_measure,auc\n";
    for (const auto& c : report.classifiers) {
        out << kind_name(c.spec.kind());
        if (c.error) {
            out << ",,,,,\n";
            continue;
        }
        out << ',' << fixed(c.metrics.accuracy) << ',' << fixed(c.metrics.precision) << ','
            << fixed(c.metrics.recall) << ',' << fixed(c.metrics.f_measure) << ',' << fixed(c.auc) << '\n';
    }
    return out.str();
}

std::string timing_table_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "classifier,train_ms,test_ms,total_ms\n";
    for (const auto& c : report.classifiers) {
        out << kind_name(c.spec.kind()) << ',' << fixed(c.train_ms, 3) << ',' << fixed(c.test_ms, 3) << ','
            << fixed(c.train_ms + c.test_ms, 3) << '\n';
    }
    return out.str();
}

std::string roc_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "classifier,fpr,tpr\n";
    for (const auto& c : report.classifiers) {
        if (c.error) {
            continue;
        }
        for (const auto& p : c.roc.points) {
            out << kind_name(c.spec.kind()) << ',' << fixed(p.fpr, 9) << ',' << fixed(p.tpr, 9) << '\n';
        }
    }
    return out.str();
}

std::vector<ClassifierSpec> default_specs(std::uint64_t seed) {
    std::vector<ClassifierSpec> specs;
    for (auto kind : kAllKinds) {
        specs.emplace_back(kind, std::map<std::string, double>{}, seed);
    }
    return specs;
}

} // namespace xssguard
