#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mindrel/dataset.hpp"

namespace mindrel {

// Generators for the bundled synthetic datasets. Each writes a CSV with a
// header and a label column named "y".
enum class SyntheticKind {
    Linear,     // correlated Gaussian features, label from a fixed linear rule plus noise
    BankLike,   // 14 numeric + 2 categorical attributes, imbalanced positive class
    Multiclass, // Gaussian class blobs, 3 classes
};

auto parse_synthetic_kind(std::string const& name) -> SyntheticKind;

void write_synthetic_csv(std::ostream& out, SyntheticKind kind, Index rows, Index features, std::uint64_t seed);

// Convenience: generate and parse in memory.
auto make_synthetic(SyntheticKind kind, Index rows, Index features, std::uint64_t seed) -> Dataset;

} // namespace mindrel
