#pragma once

#include "xssguard/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace xssguard {

using Json = nlohmann::ordered_json;

enum class ClassifierKind { NaiveBayes, J48, Bagging, RandomForest, SVM, ESVM, NeuralNet };

inline constexpr std::array<ClassifierKind, 7> kAllKinds = {
    ClassifierKind::NaiveBayes, ClassifierKind::J48,  ClassifierKind::Bagging,   ClassifierKind::RandomForest,
    ClassifierKind::SVM,        ClassifierKind::ESVM, ClassifierKind::NeuralNet,
};

std::string_view kind_name(ClassifierKind kind);
/// Accepts the full name ("RandomForest") or a short one ("rf", "nb", "mlp", ...).
std::optional<ClassifierKind> parse_kind(std::string_view name);

/// A classifier kind plus resolved hyperparameters and seed.
///
/// Hyperparameters not given take their per-kind default; unknown keys or
/// out-of-range values throw ConfigError here rather than at training time.
class ClassifierSpec {
public:
    explicit ClassifierSpec(ClassifierKind kind, std::map<std::string, double> overrides = {},
                            std::uint64_t seed = 42);

    static const std::map<std::string, double>& defaults(ClassifierKind kind);

    ClassifierKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::map<std::string, double>& hyperparameters() const noexcept { return params_; }
    double param(const std::string& key) const { return params_.at(key); }
    std::size_t count(const std::string& key) const;

    ClassifierSpec with_seed(std::uint64_t seed) const;

    bool operator==(const ClassifierSpec&) const = default;

private:
    ClassifierKind kind_;
    std::map<std::string, double> params_;
    std::uint64_t seed_;
};

namespace detail {

/// Fitted state of one classifier kind.
class Fitted {
public:
    virtual ~Fitted() = default;
    virtual double score(const Sample& s) const = 0;
    virtual Json to_json() const = 0;
};

} // namespace detail

struct TrainingInfo {
    std::size_t n = 0;
    double fit_ms = 0.0;  // wall clock, not serialized
};

/// Trained classifier; immutable and cheap to copy.
class ClassifierModel {
public:
    ClassifierModel(ClassifierSpec spec, std::shared_ptr<const detail::Fitted> fitted, TrainingInfo info);

    const ClassifierSpec& spec() const noexcept { return spec_; }
    const TrainingInfo& info() const noexcept { return info_; }

    /// Attack probability in [0, 1].
    double score(const Sample& s) const { return fitted_->score(s); }

    /// Yes iff score >= 0.5; a score of exactly 0.5 flags the sample.
    Label predict(const Sample& s) const { return score(s) >= 0.5 ? Label::Yes : Label::No; }

    /// The concrete fitted state, e.g. `model.state<TreeEnsembleModel>()`.
    template <typename T>
    const T* state() const {
        return dynamic_cast<const T*>(fitted_.get());
    }

    Json to_json() const;
    static ClassifierModel from_json(const Json& doc);
    void save(const std::filesystem::path& path) const;
    static ClassifierModel load(const std::filesystem::path& path);

private:
    ClassifierSpec spec_;
    std::shared_ptr<const detail::Fitted> fitted_;
    TrainingInfo info_;
};

/// Deterministic in (spec, dataset). Throws TrainingError unless both
/// classes are present.
ClassifierModel train(const ClassifierSpec& spec, const Dataset& dataset);

inline constexpr int kModelFormatVersion = 1;

} // namespace xssguard
