#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mindrel/artifacts.hpp"
#include "mindrel/engine.hpp"

namespace mindrel {

// Parses "name=value,name=value" into pairs (raw, unnormalized values).
auto parse_assignments(std::string const& text) -> std::vector<std::pair<std::string, double>>;

// Parses a sensitive-feature argument: a comma list of feature names, or a count
// that selects that many features at random under `seed`.
auto parse_sensitive(std::string const& text, NormalizationSpec const& names, std::uint64_t seed) -> FeaturePartition;

// Builds the starting feature vector from raw public values. Every public
// feature needs a value; sensitive features may not be given one.
auto public_vector(NormalizationSpec const& normalizer, FeaturePartition const& partition,
                   std::vector<std::pair<std::string, double>> const& raw) -> Eigen::VectorXd;

// Terminal dialogue: asks for one feature at a time on `in`, normalizes the raw
// answer, echoes the value used and the confidence, and ends with the decision.
auto run_interactive(Engine const& engine, Artifacts const& artifacts, FeaturePartition const& partition,
                     Eigen::VectorXd const& x_public, std::istream& in, std::ostream& out) -> Session;

} // namespace mindrel
