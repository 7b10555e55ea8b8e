#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace mindrel {

using Index = std::size_t;
using IndexSet = std::vector<Index>; // sorted ascending, unique

// Tabular samples. Rows are samples, columns features; labels are class ids in [0, num_classes).
struct Dataset {
    Eigen::MatrixXd features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names; // original label value per class id
    int num_classes = 2;

    [[nodiscard]] auto rows() const -> Index { return static_cast<Index>(features.rows()); }
    [[nodiscard]] auto cols() const -> Index { return static_cast<Index>(features.cols()); }
};

// Reads a CSV with a header row. Non-numeric columns are one-hot encoded
// (one column per distinct value, sorted, named "column=value"); labels are
// mapped to contiguous ids in sorted order of their original values.
auto load_csv(std::filesystem::path const& path, std::string const& label_column) -> Dataset;
auto parse_csv(std::istream& in, std::string const& label_column) -> Dataset;

auto take_rows(Dataset const& data, std::span<Index const> rows) -> Dataset;

// Per-feature training range; maps min to -1 and max to +1.
struct NormalizationSpec {
    std::vector<std::string> names;
    std::vector<double> min;
    std::vector<double> max;

    [[nodiscard]] auto size() const -> Index { return names.size(); }
    // Linear map without clipping; constant features map to 0.
    [[nodiscard]] auto normalize(Index feature, double raw) const -> double;
    [[nodiscard]] auto index_of(std::string const& name) const -> Index;

    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
    static auto from_json(nlohmann::ordered_json const& j) -> NormalizationSpec;
};

auto fit_normalizer(Dataset const& train) -> NormalizationSpec;
// Normalizes and clips every value into [-1, 1].
auto apply_normalizer(NormalizationSpec const& spec, Dataset const& data) -> Dataset;

// Deterministic shuffle; first floor(n * train_fraction) shuffled rows form the training split.
auto split(Dataset const& data, double train_fraction, std::uint64_t seed) -> std::pair<Dataset, Dataset>;

struct FeaturePartition {
    IndexSet public_idx;
    IndexSet sensitive_idx;

    [[nodiscard]] auto num_features() const -> Index { return public_idx.size() + sensitive_idx.size(); }
    [[nodiscard]] auto is_sensitive(Index i) const -> bool;

    // Everything not listed as sensitive is public.
    static auto from_sensitive(Index num_features, IndexSet sensitive) -> FeaturePartition;
};

auto sample_partition(Index num_features, Index num_sensitive, std::uint64_t seed) -> FeaturePartition;

} // namespace mindrel
