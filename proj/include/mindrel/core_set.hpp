#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "json.hpp"
#include "mindrel/dataset.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/model.hpp"
#include "mindrel/predictive.hpp"

namespace mindrel {

inline constexpr Index kDefaultProbeSamples = 100000;
inline constexpr Index kDefaultMcSamples = 100;

struct CoreSetResult {
    bool is_core = false;
    std::optional<int> label; // present iff is_core
    double confidence = 0.0;  // max class probability; 1 for a passing pure test

    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
};

auto operator==(CoreSetResult const& a, CoreSetResult const& b) -> bool;

// Counts arithmetic operations inside test_pure_linear.
struct OpCounter {
    std::size_t ops = 0;
};

// Worst case over the box [-1, 1]^|U| for a binary linear model: with
// c the observed score (bias included) and w = |theta_U|_1, the set is core
// iff c - w >= 0 (label 1) or c + w < 0 (label 0).
auto test_pure_linear(LinearModel const& model, Evidence const& ev, OpCounter* counter = nullptr) -> CoreSetResult;

// Constancy of the hard label over `num_probe` posterior draws plus the posterior
// mean. Approximate: "not core" is always sound.
auto test_pure_sampled(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                       Index num_probe, std::uint64_t seed) -> CoreSetResult;

// Core iff the most probable label has probability >= 1 - delta.
auto test_delta(PredictiveLaw const& law, double delta) -> CoreSetResult;

struct CoreTestOptions {
    double delta = 0.0;
    Index probe_samples = kDefaultProbeSamples;
    Index mc_samples = kDefaultMcSamples;
    std::uint64_t seed = 0;
};

void check_delta(double delta);

// Dispatches to the applicable test: pure linear for binary linear models at
// delta 0, sampled constancy for other models at delta 0, the law otherwise.
// A failing pure test reports the law's confidence.
auto test_core(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
               CoreTestOptions const& opts) -> CoreSetResult;
auto test_core(Model const& model, GaussianStats const& stats, Evidence const& ev, CoreTestOptions const& opts)
    -> CoreSetResult;

inline constexpr Index kOptimalMaxSensitive = 20;

struct OptimalCore {
    IndexSet core;
    int label = 0;
    CoreSetResult result;
};

// Smallest subset of the sensitive features that passes the core test with its
// true values, searched by size and then lexicographically. Falls back to the
// full sensitive set with the plug-in label when nothing passes.
auto optimal_min_core(Model const& model, GaussianStats const& stats, FeaturePartition const& partition,
                      Eigen::VectorXd const& x_full, CoreTestOptions const& opts) -> OptimalCore;

} // namespace mindrel
