#pragma once

// Concrete fitted states behind ClassifierModel. Most callers only need
// learners.hpp; these are exposed for inspection and testing.

#include "xssguard/encoder.hpp"
#include "xssguard/learners.hpp"
#include "xssguard/rng.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace xssguard {

Json encoder_to_json(const Encoder& enc);
Encoder encoder_from_json(const Json& doc);

// ---------------------------------------------------------------------------
// Categorical naive Bayes

class NaiveBayesModel final : public detail::Fitted {
public:
    NaiveBayesModel(const Dataset& train, double alpha);
    explicit NaiveBayesModel(const Json& state);

    double score(const Sample& s) const override;
    Json to_json() const override;

    /// Smoothed P(value | label); the unseen bucket widens each feature's
    /// vocabulary by one.
    double likelihood(Feature f, std::string_view value, Label label) const;
    double prior(Label label) const;
    std::size_t count(Feature f, std::string_view value, Label label) const;

private:
    double alpha_;
    std::array<std::size_t, 2> class_counts_{};
    std::array<std::map<std::string, std::array<std::size_t, 2>, std::less<>>, kFeatureCount> counts_;
};

// ---------------------------------------------------------------------------
// Categorical decision tree (C4.5-style, multiway, unpruned)

struct TreeParams {
    std::size_t min_leaf = 2;
    std::size_t features_per_node = kFeatureCount;  // < 6 subsamples per node
};

class DecisionTree {
public:
    struct Node {
        bool leaf = true;
        Feature feature = Feature::ApiName;
        double yes_fraction = 0.0;
        std::size_t n = 0;
        std::map<std::string, std::size_t, std::less<>> children;  // value -> node index
    };

    DecisionTree() = default;
    /// `rows` selects (possibly repeated) samples of `data` to grow on.
    DecisionTree(const Dataset& data, std::span<const std::size_t> rows, const TreeParams& params, Rng rng);
    explicit DecisionTree(const Json& state);

    /// Yes-fraction of the reached leaf, or of the deepest node whose branch
    /// for the sample's value does not exist.
    double score(const Sample& s) const;
    Json to_json() const;

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& root() const { return nodes_.front(); }
    std::size_t depth() const;

    bool operator==(const DecisionTree& other) const;

private:
    std::size_t grow(const Dataset& data, std::vector<std::size_t> rows, std::uint64_t used_mask,
                     const TreeParams& params, Rng& rng);

    std::vector<Node> nodes_;
};

class J48Model final : public detail::Fitted {
public:
    J48Model(const Dataset& train, const TreeParams& params);
    explicit J48Model(const Json& state);

    double score(const Sample& s) const override { return tree_.score(s); }
    Json to_json() const override;
    const DecisionTree& tree() const noexcept { return tree_; }

private:
    DecisionTree tree_;
};

/// Bagging and random forest: score is the mean of the member trees' scores.
class TreeEnsembleModel final : public detail::Fitted {
public:
    struct Params {
        std::size_t trees = 10;
        bool bootstrap = true;
        TreeParams tree;
    };

    TreeEnsembleModel(const Dataset& train, const Params& params, const Rng& rng);
    explicit TreeEnsembleModel(const Json& state);

    double score(const Sample& s) const override;
    Json to_json() const override;

    /// Number of members voting Yes.
    std::size_t votes(const Sample& s) const;
    const std::vector<DecisionTree>& members() const noexcept { return members_; }

private:
    std::vector<DecisionTree> members_;
};

// ---------------------------------------------------------------------------
// Linear SVM on the one-hot view

struct PegasosParams {
    double lambda = 1e-3;
    std::size_t epochs = 50;
};

/// Weights over encoder columns plus a trailing bias (constant-1 column).
std::vector<double> train_pegasos(const Encoder& enc, const Dataset& data, std::span<const std::size_t> rows,
                                  const PegasosParams& params, Rng& rng);

class LinearSvmModel : public detail::Fitted {
public:
    LinearSvmModel(Encoder encoder, std::vector<double> weights);
    explicit LinearSvmModel(const Json& state);

    /// Signed distance w.x + b.
    double margin(const Sample& s) const;
    /// Logistic of the margin.
    double score(const Sample& s) const override;
    Json to_json() const override;

    const Encoder& encoder() const noexcept { return encoder_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    Encoder encoder_;
    std::vector<double> weights_;
};

LinearSvmModel fit_linear_svm(const Dataset& train, const PegasosParams& params, Rng rng);

// ---------------------------------------------------------------------------
// GA-tuned linear SVM

struct SvmGenome {
    double log10_lambda = -3.0;
    std::size_t epochs = 50;
};

struct EvolutionParams {
    std::size_t population = 20;
    std::size_t generations = 10;
    std::size_t inner_folds = 3;
    double log10_lambda_min = -6.0;
    double log10_lambda_max = 0.0;
    std::size_t epochs_min = 10;
    std::size_t epochs_max = 200;
    double mutation_rate = 0.2;
};

struct EvolutionTrace {
    /// Every generation evaluates `population` fresh genomes; the previous
    /// best is carried over with its cached fitness and is not re-evaluated,
    /// so evaluations == population * generations and carry_overs == generations - 1.
    std::size_t evaluations = 0;
    std::size_t carry_overs = 0;
    std::vector<double> best_fitness;  // per generation
    SvmGenome best;
    double best_fit = 0.0;
};

EvolutionTrace evolve_svm_genome(const Dataset& train, const EvolutionParams& params, Rng rng);

class EvolutionarySvmModel final : public LinearSvmModel {
public:
    EvolutionarySvmModel(LinearSvmModel svm, EvolutionTrace trace);
    explicit EvolutionarySvmModel(const Json& state);

    Json to_json() const override;
    const EvolutionTrace& trace() const noexcept { return trace_; }

private:
    EvolutionTrace trace_;
};

// ---------------------------------------------------------------------------
// One-hidden-layer perceptron

/// Sigmoid hidden layer, sigmoid output, mean cross-entropy loss.
///
/// Parameters are one flat vector: hidden x inputs weights (row-major),
/// hidden biases, hidden output weights, output bias.
class Mlp {
public:
    struct Example {
        std::vector<double> x;
        double y = 0.0;
    };

    Mlp(std::size_t inputs, std::size_t hidden);
    Mlp(std::size_t inputs, std::size_t hidden, std::vector<double> params);

    void randomize(Rng& rng, double range);

    double forward(std::span<const double> x) const;
    double loss(std::span<const Example> batch) const;
    /// d loss / d params, same layout as params().
    std::vector<double> gradient(std::span<const Example> batch) const;
    void sgd_step(const Example& e, double lr);

    std::size_t inputs() const noexcept { return inputs_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }

private:
    // Adds the gradient of one example's loss, scaled by `weight`.
    void accumulate(const Example& e, double weight, std::vector<double>& grad) const;

    std::size_t w1() const { return 0; }
    std::size_t b1() const { return hidden_ * inputs_; }
    std::size_t w2() const { return b1() + hidden_; }
    std::size_t b2() const { return w2() + hidden_; }

    std::size_t inputs_;
    std::size_t hidden_;
    std::vector<double> params_;
};

class NeuralNetModel final : public detail::Fitted {
public:
    NeuralNetModel(Encoder encoder, Mlp net);
    explicit NeuralNetModel(const Json& state);

    double score(const Sample& s) const override;
    Json to_json() const override;
    const Mlp& net() const noexcept { return net_; }

private:
    Encoder encoder_;
    Mlp net_;
};

} // namespace xssguard
