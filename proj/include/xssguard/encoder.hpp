#pragma once

#include "xssguard/dataset.hpp"

#include <array>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace xssguard {

/// Dense one-hot view of a dataset, row-major.
struct EncodedDataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> matrix;
    /// (feature, category) -> column; the category "" names the feature's unseen column.
    std::map<std::pair<Feature, std::string>, std::size_t> column_map;
    std::vector<int> labels;  // Yes -> 1, No -> 0

    std::span<const double> row(std::size_t i) const { return {matrix.data() + i * cols, cols}; }
};

/// One-hot encoder for the six categorical features.
///
/// Each feature owns a contiguous block: its fit-time categories in sorted
/// order followed by one reserved column for categories never seen at fit.
class Encoder {
public:
    static constexpr std::string_view kUnseen = "";

    Encoder() = default;
    explicit Encoder(std::array<std::vector<std::string>, kFeatureCount> categories);

    /// Throws DomainError on an empty dataset.
    static Encoder fit(const Dataset& train);

    std::size_t width() const noexcept { return width_; }
    std::size_t block_offset(Feature f) const { return offset_[idx(f)]; }
    std::size_t block_width(Feature f) const { return categories_[idx(f)].size() + 1; }
    std::size_t unseen_column(Feature f) const { return offset_[idx(f)] + categories_[idx(f)].size(); }
    const std::vector<std::string>& categories(Feature f) const { return categories_[idx(f)]; }

    /// Column for a category, or the unseen column when it was not seen at fit.
    std::size_t column(Feature f, std::string_view category) const;

    /// The six columns set to 1 for this sample, one per feature block.
    std::array<std::size_t, kFeatureCount> active_columns(const Sample& s) const;

    std::vector<double> encode_row(const Sample& s) const;
    EncodedDataset encode(const Dataset& ds) const;

    bool operator==(const Encoder&) const = default;

private:
    static std::size_t idx(Feature f) { return static_cast<std::size_t>(f); }
    void layout();

    std::array<std::vector<std::string>, kFeatureCount> categories_{};
    std::array<std::size_t, kFeatureCount> offset_{};
    std::size_t width_ = 0;
};

} // namespace xssguard
