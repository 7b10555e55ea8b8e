#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "json.hpp"
#include "mindrel/dataset.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/model.hpp"

namespace mindrel {

// A feature vector of which only the coordinates outside `unknown` are observed.
// Values stored at unknown positions are ignored.
struct Evidence {
    Eigen::VectorXd x;
    IndexSet unknown;

    [[nodiscard]] auto known() const -> IndexSet;
    [[nodiscard]] auto known_values() const -> Eigen::VectorXd;
};

// Law of X_unknown given the observed coordinates.
auto posterior(GaussianStats const& stats, Evidence const& ev) -> ConditionalGaussian;

// Gaussian law of a soft score.
struct PredictiveGaussian {
    double mean = 0.0;
    double variance = 0.0;
};

// Distribution of the hard label.
struct PredictiveLaw {
    Eigen::VectorXd class_probs;

    // most probable class, lowest index on ties
    [[nodiscard]] auto argmax() const -> int;
    [[nodiscard]] auto confidence() const -> double { return class_probs.maxCoeff(); }
    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
};

// Soft-score law of a linear model when the unobserved coordinates (post.target_idx)
// follow `post`. Observed values are read from x; the bias joins the observed part.
auto linear_soft_law(LinearModel const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                     Index output = 0) -> PredictiveGaussian;
auto linear_soft_law(LinearModel const& model, GaussianStats const& stats, Evidence const& ev) -> PredictiveGaussian;

// Binary label law: P(1) = Phi(mean / sd), or 1{mean >= 0} when the variance is zero.
auto threshold_law(PredictiveGaussian const& pg) -> PredictiveLaw;

// First-order expansion of the network around the posterior mean.
auto taylor_soft_law(MlpModel const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                     Index output = 0) -> PredictiveGaussian;

// Label frequencies over `num_samples` posterior draws.
auto multiclass_law(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                    Index num_samples, std::uint64_t seed) -> PredictiveLaw;

// Exact Phi law for binary linear models, Taylor + Phi for binary MLPs,
// sampled frequencies for more than two classes.
auto predictive_law(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                    Index mc_samples, std::uint64_t seed) -> PredictiveLaw;

// Shannon entropy in nats; probabilities are clamped to [1e-12, 1] first.
auto entropy(PredictiveLaw const& law) -> double;
auto entropy(Eigen::VectorXd const& probs) -> double;
auto binary_entropy(double p) -> double;

auto standard_normal_cdf(double z) -> double;

// x with the posterior targets overwritten by `values` (one per target).
auto complete(Eigen::VectorXd x, IndexSet const& targets, Eigen::VectorXd const& values) -> Eigen::VectorXd;

} // namespace mindrel
