#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "json.hpp"
#include "mindrel/dataset.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

inline constexpr double kDefaultRidge = 1e-6;

// Joint Gaussian model of the features. `sigma` already includes `ridge` on its diagonal.
struct GaussianStats {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    double ridge = 0.0;

    [[nodiscard]] auto dim() const -> Index { return static_cast<Index>(mu.size()); }

    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
    static auto from_json(nlohmann::ordered_json const& j) -> GaussianStats;
};

// Sample mean and biased (1/n) sample covariance, plus ridge * I.
auto estimate(Eigen::MatrixXd const& samples, double ridge = kDefaultRidge) -> GaussianStats;
auto estimate(Dataset const& train, double ridge = kDefaultRidge) -> GaussianStats;

// Law of X_target given X_given = given_values.
struct ConditionalGaussian {
    IndexSet target_idx;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    [[nodiscard]] auto size() const -> Index { return target_idx.size(); }
    // position of a feature index inside target_idx
    [[nodiscard]] auto position(Index feature) const -> Index;
};

// Precomputed conditioning of a Gaussian (mean, cov) on a fixed set of its
// coordinates. The gain and Schur complement are computed once; the
// conditional mean is then an affine function of the observed values.
class GaussianConditioner {
public:
    // Positions are row/column positions inside (mean, cov).
    GaussianConditioner(Eigen::VectorXd const& mean, Eigen::MatrixXd const& cov,
                        std::span<Index const> target_pos, std::span<Index const> given_pos);

    [[nodiscard]] auto conditional_mean(Eigen::VectorXd const& given_values) const -> Eigen::VectorXd;
    [[nodiscard]] auto covariance() const -> Eigen::MatrixXd const& { return cov_; }

private:
    Eigen::VectorXd target_mean_;
    Eigen::VectorXd given_mean_;
    Eigen::MatrixXd gain_; // Sigma_TG Sigma_GG^{-1}
    Eigen::MatrixXd cov_;
};

// Conditional of X_{target} given X_{given} = given_values under `stats`.
// target and given must be disjoint; an empty `given` yields the marginal.
auto condition(GaussianStats const& stats, IndexSet const& target_idx, IndexSet const& given_idx,
               Eigen::VectorXd const& given_values) -> ConditionalGaussian;

// Further conditions an existing conditional on some of its own targets
// (feature indices, a subset of prior.target_idx).
auto condition(ConditionalGaussian const& prior, IndexSet const& given_idx, Eigen::VectorXd const& given_values)
    -> ConditionalGaussian;

// Draws from N(mean, cov) through a symmetric square root of cov
// (eigenvalues clamped at zero, so semidefinite covariances are accepted).
class GaussianSampler {
public:
    explicit GaussianSampler(ConditionalGaussian const& law);

    // count x dim matrix of draws; consumes standard normals from rng
    [[nodiscard]] auto draw(Index count, Rng& rng) const -> Eigen::MatrixXd;
    [[nodiscard]] auto dim() const -> Index { return static_cast<Index>(mean_.size()); }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd root_;
};

auto sample(ConditionalGaussian const& law, Index count, std::uint64_t seed) -> Eigen::MatrixXd;

} // namespace mindrel
