#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "mindrel/artifacts.hpp"
#include "mindrel/dataset.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/model.hpp"
#include "mindrel/random.hpp"

namespace support {

inline auto data_dir() -> std::filesystem::path
{
    return MINDREL_DATA_DIR;
}

// Loan example: f = 1.0 Job - 0.5 Loc + 0.5 Inc, features independent N(0, 1).
inline auto loan_model() -> mindrel::LinearModel
{
    mindrel::LinearModel m;
    m.weights = Eigen::RowVector3d(1.0, -0.5, 0.5);
    m.bias = Eigen::VectorXd::Zero(1);
    return m;
}

inline auto loan_stats() -> mindrel::GaussianStats
{
    return { Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 0.0 };
}

inline auto loan_artifacts() -> mindrel::Artifacts
{
    mindrel::NormalizationSpec n { { "Job", "Loc", "Inc" }, { -1.0, -1.0, -1.0 }, { 1.0, 1.0, 1.0 } };
    return { loan_model(), loan_stats(), n, { "denied", "approved" }, {} };
}

// Job public; Loc and Inc sensitive.
inline auto loan_partition() -> mindrel::FeaturePartition
{
    return mindrel::FeaturePartition::from_sensitive(3, { 1, 2 });
}

inline auto loan_x(double job) -> Eigen::VectorXd
{
    return Eigen::Vector3d(job, 0.0, 0.0);
}

inline auto random_spd(Eigen::Index d, mindrel::Rng& rng, double floor = 0.2) -> Eigen::MatrixXd
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            a(i, j) = normal(rng);
        }
    }
    Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(d);
    s.diagonal().array() += floor;
    return s;
}

inline auto random_vector(Eigen::Index d, mindrel::Rng& rng, double lo = -1.0, double hi = 1.0) -> Eigen::VectorXd
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        v(i) = u(rng);
    }
    return v;
}

inline auto random_mlp(mindrel::Index d, mindrel::Index hidden, mindrel::Index outputs, mindrel::Rng& rng)
    -> mindrel::MlpModel
{
    auto layer = [&rng](Eigen::Index out, Eigen::Index in) {
        return mindrel::DenseLayer { Eigen::MatrixXd(random_vector(out * in, rng).reshaped(out, in)),
                                     random_vector(out, rng, -0.5, 0.5) };
    };
    auto const h = static_cast<Eigen::Index>(hidden);
    mindrel::MlpModel m;
    m.layers[0] = layer(h, static_cast<Eigen::Index>(d));
    m.layers[1] = layer(h, h);
    m.layers[2] = layer(static_cast<Eigen::Index>(outputs), h);
    return m;
}

} // namespace support
