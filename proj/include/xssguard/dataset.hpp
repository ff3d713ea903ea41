#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xssguard {

enum class Feature { AppName, Permissions, ApiName, WebsiteName, Ip, Location };

inline constexpr std::array<Feature, 6> kFeatures = {
    Feature::AppName, Feature::Permissions, Feature::ApiName,
    Feature::WebsiteName, Feature::Ip, Feature::Location,
};
inline constexpr std::size_t kFeatureCount = kFeatures.size();

/// Column name as it appears in the CSV header ("app_name", "api_name", ...).
std::string_view feature_name(Feature f);
std::optional<Feature> parse_feature(std::string_view name);

enum class Label { No = 0, Yes = 1 };

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view token);

struct Sample {
    std::array<std::string, kFeatureCount> values;
    Label label = Label::No;

    const std::string& value(Feature f) const { return values[static_cast<std::size_t>(f)]; }
    std::string& value(Feature f) { return values[static_cast<std::size_t>(f)]; }

    bool operator==(const Sample&) const = default;
};

enum class Provenance { Generated, Loaded };

struct Dataset {
    std::vector<Sample> samples;
    std::optional<std::uint64_t> seed;
    Provenance provenance = Provenance::Loaded;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    std::size_t count(Label label) const;

    /// Rows at `indices`, in that order.
    Dataset subset(const std::vector<std::size_t>& indices) const;

    bool operator==(const Dataset& other) const { return samples == other.samples; }
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kCsvHeader =
    "app_name,permissions,api_name,website_name,ip,location,label";

/// Canonical output: header in fixed column order, '\n' line endings,
/// fields quoted only when they contain ',', '"', CR or LF.
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Accepts the seven columns in any order. Throws ParseError on a missing,
/// unknown or repeated column, a bad label token, an empty field, or a
/// malformed record.
Dataset read_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Synthetic generator

/// Probability that a field is drawn from the label-leaning half of its pool
/// instead of uniformly from the whole pool.
struct FieldWeights {
    double app_name = 0.05;
    double permissions = 0.30;
    double website_name = 0.25;
    double ip = 0.10;
    double location = 0.15;
};

struct GeneratorVocab {
    std::vector<std::string> app_names;
    std::vector<std::string> attack_sites;
    std::vector<std::string> benign_sites;
    std::vector<std::string> sensitive_apis;
    std::vector<std::string> benign_apis;
    std::vector<std::string> ips;
    std::vector<std::string> locations;
    std::vector<std::string> permission_profiles;
    FieldWeights weights;

    static GeneratorVocab defaults();

    /// `key = v1, v2, ...` lines; `weight.<field> = x` for weights; `#`
    /// comments. Keys not present keep their default value.
    static GeneratorVocab load(std::istream& in);
    static GeneratorVocab load(const std::filesystem::path& path);

    /// Throws ConfigError when a pool is too small or malformed.
    void validate() const;
};

struct GeneratorParams {
    std::size_t n = 460;
    double attack_ratio = 0.5;
    double noise = 0.05;
    std::uint64_t seed = 42;
};

/// Number of Yes rows for a request: round(n * attack_ratio), half away from zero.
std::size_t expected_attacks(std::size_t n, double attack_ratio);

/// Label flips applied per class: min(round(noise * n / 2), |Yes|, |No|).
/// Flipping the same count each way keeps the class balance exact.
std::size_t noise_flips_per_class(std::size_t n, double attack_ratio, double noise);

Dataset generate(const GeneratorParams& params, const GeneratorVocab& vocab);
inline Dataset generate(const GeneratorParams& params) {
    return generate(params, GeneratorVocab::defaults());
}

} // namespace xssguard
