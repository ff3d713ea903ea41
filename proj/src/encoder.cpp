#include "xssguard/encoder.hpp"

#include "xssguard/error.hpp"

#include <algorithm>
#include <set>

namespace xssguard {

Encoder::Encoder(std::array<std::vector<std::string>, kFeatureCount> categories)
    : categories_(std::move(categories)) {
    for (auto& cats : categories_) {
        std::sort(cats.begin(), cats.end());
        cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    }
    layout();
}

Encoder Encoder::fit(const Dataset& train) {
    if (train.empty()) {
        throw DomainError("cannot fit encoder on an empty dataset");
    }
    std::array<std::vector<std::string>, kFeatureCount> cats;
    for (auto f : kFeatures) {
        std::set<std::string> seen;
        for (const auto& s : train.samples) {
            seen.insert(s.value(f));
        }
        cats[idx(f)].assign(seen.begin(), seen.end());
    }
    return Encoder(std::move(cats));
}

void Encoder::layout() {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        offset_[i] = offset;
        offset += categories_[i].size() + 1;
    }
    width_ = offset;
}

std::size_t Encoder::column(Feature f, std::string_view category) const {
    const auto& cats = categories_[idx(f)];
    const auto it = std::lower_bound(cats.begin(), cats.end(), category);
    if (it == cats.end() || *it != category) {
        return unseen_column(f);
    }
    return offset_[idx(f)] + static_cast<std::size_t>(it - cats.begin());
}

std::array<std::size_t, kFeatureCount> Encoder::active_columns(const Sample& s) const {
    std::array<std::size_t, kFeatureCount> cols{};
    for (auto f : kFeatures) {
        cols[idx(f)] = column(f, s.value(f));
    }
    return cols;
}

std::vector<double> Encoder::encode_row(const Sample& s) const {
    std::vector<double> row(width_, 0.0);
    for (auto c : active_columns(s)) {
        row[c] = 1.0;
    }
    return row;
}

EncodedDataset Encoder::encode(const Dataset& ds) const {
    EncodedDataset out;
    out.rows = ds.size();
    out.cols = width_;
    out.matrix.assign(out.rows * out.cols, 0.0);
    out.labels.reserve(out.rows);
    for (std::size_t r = 0; r < out.rows; ++r) {
        const auto& s = ds.samples[r];
        for (auto c : active_columns(s)) {
            out.matrix[r * out.cols + c] = 1.0;
        }
        out.labels.push_back(s.label == Label::Yes ? 1 : 0);
    }
    for (auto f : kFeatures) {
        const auto& cats = categories_[idx(f)];
        for (std::size_t j = 0; j < cats.size(); ++j) {
            out.column_map.emplace(std::pair{f, cats[j]}, offset_[idx(f)] + j);
        }
        out.column_map.emplace(std::pair{f, std::string(kUnseen)}, unseen_column(f));
    }
    return out;
}

} // namespace xssguard
