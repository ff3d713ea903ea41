#include "xssguard/error.hpp"
#include "xssguard/models.hpp"
#include "xssguard/ranker.hpp"

#include <algorithm>
#include <cmath>

namespace xssguard {

namespace {

std::size_t fidx(Feature f) { return static_cast<std::size_t>(f); }
std::size_t lidx(Label l) { return static_cast<std::size_t>(l); }

Feature feature_from_json(const Json& j) {
    auto f = parse_feature(j.get<std::string>());
    if (!f) {
        throw ConfigError("unknown feature " + j.dump());
    }
    return *f;
}

} // namespace

// ---------------------------------------------------------------------------
// NaiveBayesModel

NaiveBayesModel::NaiveBayesModel(const Dataset& train, double alpha) : alpha_(alpha) {
    for (const auto& s : train.samples) {
        ++class_counts_[lidx(s.label)];
        for (auto f : kFeatures) {
            ++counts_[fidx(f)][s.value(f)][lidx(s.label)];
        }
    }
}

NaiveBayesModel::NaiveBayesModel(const Json& state) : alpha_(state.at("alpha").get<double>()) {
    class_counts_ = state.at("class_counts").get<std::array<std::size_t, 2>>();
    for (auto f : kFeatures) {
        for (const auto& [value, c] : state.at("counts").at(std::string(feature_name(f))).items()) {
            counts_[fidx(f)][value] = c.get<std::array<std::size_t, 2>>();
        }
    }
}

std::size_t NaiveBayesModel::count(Feature f, std::string_view value, Label label) const {
    const auto& table = counts_[fidx(f)];
    const auto it = table.find(value);
    return it == table.end() ? 0 : it->second[lidx(label)];
}

double NaiveBayesModel::likelihood(Feature f, std::string_view value, Label label) const {
    const double vocabulary = static_cast<double>(counts_[fidx(f)].size() + 1);
    return (static_cast<double>(count(f, value, label)) + alpha_) /
           (static_cast<double>(class_counts_[lidx(label)]) + alpha_ * vocabulary);
}

double NaiveBayesModel::prior(Label label) const {
    return static_cast<double>(class_counts_[lidx(label)]) /
           static_cast<double>(class_counts_[0] + class_counts_[1]);
}

double NaiveBayesModel::score(const Sample& s) const {
    double log_yes = std::log(prior(Label::Yes));
    double log_no = std::log(prior(Label::No));
    for (auto f : kFeatures) {
        log_yes += std::log(likelihood(f, s.value(f), Label::Yes));
        log_no += std::log(likelihood(f, s.value(f), Label::No));
    }
    // P(Yes | x) = 1 / (1 + exp(log_no - log_yes))
    return 1.0 / (1.0 + std::exp(log_no - log_yes));
}

Json NaiveBayesModel::to_json() const {
    Json j;
    j["alpha"] = alpha_;
    j["class_counts"] = class_counts_;
    Json counts = Json::object();
    for (auto f : kFeatures) {
        Json table = Json::object();
        for (const auto& [value, c] : counts_[fidx(f)]) {
            table[value] = c;
        }
        counts[std::string(feature_name(f))] = std::move(table);
    }
    j["counts"] = std::move(counts);
    return j;
}

// ---------------------------------------------------------------------------
// DecisionTree

DecisionTree::DecisionTree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng rng) {
    if (rows.empty()) {
        throw TrainingError("decision tree needs at least one row");
    }
    grow(data, std::vector<std::size_t>(rows.begin(), rows.end()), 0, params, rng);
}

std::size_t DecisionTree::grow(const Dataset& data, std::vector<std::size_t> rows, std::uint64_t used_mask,
                               const TreeParams& params, Rng& rng) {
    const std::size_t index = nodes_.size();
    nodes_.emplace_back();

    ClassCounts parent;
    for (auto r : rows) {
        parent.add(data.samples[r].label);
    }
    nodes_[index].n = parent.total();
    nodes_[index].yes_fraction = static_cast<double>(parent.yes) / static_cast<double>(parent.total());
    if (parent.yes == 0 || parent.no == 0 || rows.size() < 2 * params.min_leaf) {
        return index;
    }

    std::vector<Feature> candidates;
    for (auto f : kFeatures) {
        if (!(used_mask & (1u << fidx(f)))) {
            candidates.push_back(f);
        }
    }
    const bool subsample = params.features_per_node < kFeatureCount;
    if (subsample) {
        rng.shuffle(std::span(candidates));
    }

    // Evaluate candidates in order; when subsampling, look past the first
    // `features_per_node` only until some candidate gives a usable split.
    std::vector<std::pair<Feature, SplitScore>> usable;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (subsample && i >= params.features_per_node && !usable.empty()) {
            break;
        }
        const Feature f = candidates[i];
        std::map<std::string_view, ClassCounts> by_value;
        for (auto r : rows) {
            by_value[data.samples[r].value(f)].add(data.samples[r].label);
        }
        std::vector<ClassCounts> branches;
        std::size_t big_branches = 0;
        for (const auto& [v, c] : by_value) {
            branches.push_back(c);
            big_branches += c.total() >= params.min_leaf;
        }
        if (big_branches < 2) {
            continue;
        }
        const auto score = score_partition(parent, branches);
        if (score.gain > 1e-12) {
            usable.emplace_back(f, score);
        }
    }
    if (usable.empty()) {
        return index;
    }

    // C4.5: best gain ratio among candidates with at least average gain.
    double mean_gain = 0.0;
    for (const auto& [f, score] : usable) {
        mean_gain += score.gain;
    }
    mean_gain /= static_cast<double>(usable.size());
    std::optional<Feature> best;
    double best_ratio = 0.0;
    for (const auto& [f, score] : usable) {
        if (score.gain < mean_gain - 1e-12) {
            continue;
        }
        if (!best || score.ratio > best_ratio) {
            best = f;
            best_ratio = score.ratio;
        }
    }

    nodes_[index].leaf = false;
    nodes_[index].feature = *best;
    std::map<std::string, std::vector<std::size_t>, std::less<>> partition;
    for (auto r : rows) {
        partition[data.samples[r].value(*best)].push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::uint64_t mask = used_mask | (1u << fidx(*best));
    for (auto& [value, child_rows] : partition) {
        const std::size_t child = grow(data, std::move(child_rows), mask, params, rng);
        nodes_[index].children.emplace(value, child);
    }
    return index;
}

double DecisionTree::score(const Sample& s) const {
    std::size_t at = 0;
    while (!nodes_[at].leaf) {
        const auto& node = nodes_[at];
        const auto it = node.children.find(s.value(node.feature));
        if (it == node.children.end()) {
            return node.yes_fraction;
        }
        at = it->second;
    }
    return nodes_[at].yes_fraction;
}

std::size_t DecisionTree::depth() const {
    std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
        std::size_t d = 0;
        for (const auto& [v, child] : nodes_[i].children) {
            d = std::max(d, 1 + walk(child));
        }
        return d;
    };
    return nodes_.empty() ? 0 : walk(0);
}

bool DecisionTree::operator==(const DecisionTree& other) const {
    if (nodes_.size() != other.nodes_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& a = nodes_[i];
        const auto& b = other.nodes_[i];
        if (a.leaf != b.leaf || a.n != b.n || a.yes_fraction != b.yes_fraction || a.children != b.children ||
            (!a.leaf && a.feature != b.feature)) {
            return false;
        }
    }
    return true;
}

Json DecisionTree::to_json() const {
    Json nodes = Json::array();
    for (const auto& node : nodes_) {
        Json j;
        j["n"] = node.n;
        j["yes_fraction"] = node.yes_fraction;
        if (!node.leaf) {
            j["feature"] = feature_name(node.feature);
            Json children = Json::object();
            for (const auto& [value, child] : node.children) {
                children[value] = child;
            }
            j["children"] = std::move(children);
        }
        nodes.push_back(std::move(j));
    }
    return nodes;
}

DecisionTree::DecisionTree(const Json& state) {
    for (const auto& j : state) {
        Node node;
        node.n = j.at("n").get<std::size_t>();
        node.yes_fraction = j.at("yes_fraction").get<double>();
        if (j.contains("feature")) {
            node.leaf = false;
            node.feature = feature_from_json(j.at("feature"));
            for (const auto& [value, child] : j.at("children").items()) {
                node.children.emplace(value, child.get<std::size_t>());
            }
        }
        nodes_.push_back(std::move(node));
    }
    for (const auto& node : nodes_) {
        for (const auto& [value, child] : node.children) {
            if (child >= nodes_.size()) {
                throw ConfigError("tree child index out of range");
            }
        }
    }
    if (nodes_.empty()) {
        throw ConfigError("tree has no nodes");
    }
}

// ---------------------------------------------------------------------------
// J48Model

namespace {

std::vector<std::size_t> all_rows(const Dataset& data) {
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = i;
    }
    return rows;
}

} // namespace

J48Model::J48Model(const Dataset& train, const TreeParams& params)
    : tree_(train, all_rows(train), params, Rng(0)) {}

J48Model::J48Model(const Json& state) : tree_(state.at("tree")) {}

Json J48Model::to_json() const { return Json{{"tree", tree_.to_json()}}; }

// ---------------------------------------------------------------------------
// TreeEnsembleModel

TreeEnsembleModel::TreeEnsembleModel(const Dataset& train, const Params& params, const Rng& rng) {
    members_.reserve(params.trees);
    const std::size_t n = train.size();
    for (std::size_t t = 0; t < params.trees; ++t) {
        // Each member owns a stream split from the model seed, so members
        // can be grown in any order without changing the forest.
        Rng member = rng.split(t);
        std::vector<std::size_t> rows;
        if (params.bootstrap) {
            rows.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                rows.push_back(member.index(n));
            }
        } else {
            rows = all_rows(train);
        }
        members_.emplace_back(train, rows, params.tree, member.split("nodes"));
    }
}

TreeEnsembleModel::TreeEnsembleModel(const Json& state) {
    for (const auto& tree : state.at("members")) {
        members_.emplace_back(tree);
    }
    if (members_.empty()) {
        throw ConfigError("ensemble has no members");
    }
}

std::size_t TreeEnsembleModel::votes(const Sample& s) const {
    return static_cast<std::size_t>(std::count_if(members_.begin(), members_.end(),
                                                  [&](const DecisionTree& t) { return t.score(s) >= 0.5; }));
}

double TreeEnsembleModel::score(const Sample& s) const {
    double sum = 0.0;
    for (const auto& t : members_) {
        sum += t.score(s);
    }
    return sum / static_cast<double>(members_.size());
}

Json TreeEnsembleModel::to_json() const {
    Json members = Json::array();
    for (const auto& t : members_) {
        members.push_back(t.to_json());
    }
    return Json{{"members", std::move(members)}};
}

} // namespace xssguard
