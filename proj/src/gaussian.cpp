#include "mindrel/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mindrel/errors.hpp"

namespace mindrel {

namespace {

auto select(Eigen::VectorXd const& v, std::span<Index const> idx) -> Eigen::VectorXd
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (Index i = 0; i < idx.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

auto select(Eigen::MatrixXd const& m, std::span<Index const> rows, std::span<Index const> cols) -> Eigen::MatrixXd
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (Index i = 0; i < rows.size(); ++i) {
        for (Index j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                = m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
        }
    }
    return out;
}

void check_disjoint(IndexSet const& a, IndexSet const& b)
{
    for (auto i : a) {
        if (std::binary_search(b.begin(), b.end(), i)) {
            throw UsageError("target and given index sets overlap at feature " + std::to_string(i));
        }
    }
}

void check_range(IndexSet const& idx, Index dim)
{
    if (!std::is_sorted(idx.begin(), idx.end()) || std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
        throw UsageError("index sets must be sorted and free of duplicates");
    }
    if (!idx.empty() && idx.back() >= dim) {
        throw UsageError("feature index " + std::to_string(idx.back()) + " out of range");
    }
}

} // namespace

auto GaussianStats::to_json() const -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(sigma.cols()));
        for (Eigen::Index c = 0; c < sigma.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = sigma(r, c);
        }
        rows.push_back(row);
    }
    j["sigma"] = rows;
    j["ridge"] = ridge;
    return j;
}

auto GaussianStats::from_json(nlohmann::ordered_json const& j) -> GaussianStats
{
    try {
        auto const mu = j.at("mu").get<std::vector<double>>();
        auto const sigma = j.at("sigma").get<std::vector<std::vector<double>>>();
        GaussianStats s;
        s.ridge = j.value("ridge", 0.0);
        s.mu = Eigen::Map<Eigen::VectorXd const>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        s.sigma.resize(s.mu.size(), s.mu.size());
        if (sigma.size() != mu.size()) {
            throw DataError(DataErrorKind::Malformed, "stats: sigma must be a square matrix matching mu");
        }
        for (Index r = 0; r < sigma.size(); ++r) {
            if (sigma[r].size() != mu.size()) {
                throw DataError(DataErrorKind::Malformed, "stats: sigma must be a square matrix matching mu");
            }
            for (Index c = 0; c < sigma.size(); ++c) {
                s.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = sigma[r][c];
            }
        }
        return s;
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, std::string("stats: ") + e.what());
    }
}

auto estimate(Eigen::MatrixXd const& samples, double ridge) -> GaussianStats
{
    if (samples.rows() < 2) {
        throw DataError(DataErrorKind::EmptyDataset, "estimating a Gaussian needs at least 2 rows");
    }
    if (ridge < 0.0) {
        throw UsageError("ridge must be nonnegative");
    }
    GaussianStats s;
    auto const n = static_cast<double>(samples.rows());
    s.mu = samples.colwise().mean().transpose();
    Eigen::MatrixXd const centered = samples.rowwise() - s.mu.transpose();
    s.sigma = (centered.transpose() * centered) / n;
    s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
    s.sigma.diagonal().array() += ridge;
    s.ridge = ridge;
    return s;
}

auto estimate(Dataset const& train, double ridge) -> GaussianStats
{
    return estimate(train.features, ridge);
}

auto ConditionalGaussian::position(Index feature) const -> Index
{
    auto it = std::lower_bound(target_idx.begin(), target_idx.end(), feature);
    if (it == target_idx.end() || *it != feature) {
        throw UsageError("feature " + std::to_string(feature) + " is not a target of this conditional");
    }
    return static_cast<Index>(it - target_idx.begin());
}

GaussianConditioner::GaussianConditioner(Eigen::VectorXd const& mean, Eigen::MatrixXd const& cov,
                                         std::span<Index const> target_pos, std::span<Index const> given_pos)
    : target_mean_(select(mean, target_pos))
    , given_mean_(select(mean, given_pos))
{
    Eigen::MatrixXd const tt = select(cov, target_pos, target_pos);
    if (given_pos.empty()) {
        gain_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(target_pos.size()), 0);
        cov_ = tt;
        return;
    }
    Eigen::MatrixXd const gg = select(cov, given_pos, given_pos);
    Eigen::MatrixXd const tg = select(cov, target_pos, given_pos);
    Eigen::LLT<Eigen::MatrixXd> llt(gg);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("covariance block of the conditioning set is not positive definite");
    }
    // gain = tg * gg^{-1}, via gg^{-1} tg^T
    gain_ = llt.solve(tg.transpose()).transpose();
    cov_ = tt - gain_ * tg.transpose();
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

auto GaussianConditioner::conditional_mean(Eigen::VectorXd const& given_values) const -> Eigen::VectorXd
{
    if (given_values.size() != given_mean_.size()) {
        throw UsageError("expected " + std::to_string(given_mean_.size()) + " conditioning values, got "
                         + std::to_string(given_values.size()));
    }
    if (given_mean_.size() == 0) {
        return target_mean_;
    }
    return target_mean_ + gain_ * (given_values - given_mean_);
}

auto condition(GaussianStats const& stats, IndexSet const& target_idx, IndexSet const& given_idx,
               Eigen::VectorXd const& given_values) -> ConditionalGaussian
{
    check_range(target_idx, stats.dim());
    check_range(given_idx, stats.dim());
    check_disjoint(target_idx, given_idx);
    GaussianConditioner const c(stats.mu, stats.sigma, target_idx, given_idx);
    return { target_idx, c.conditional_mean(given_values), c.covariance() };
}

auto condition(ConditionalGaussian const& prior, IndexSet const& given_idx, Eigen::VectorXd const& given_values)
    -> ConditionalGaussian
{
    std::vector<Index> given_pos;
    given_pos.reserve(given_idx.size());
    for (auto f : given_idx) {
        given_pos.push_back(prior.position(f));
    }
    IndexSet rest;
    std::vector<Index> rest_pos;
    for (Index p = 0; p < prior.size(); ++p) {
        if (!std::binary_search(given_idx.begin(), given_idx.end(), prior.target_idx[p])) {
            rest.push_back(prior.target_idx[p]);
            rest_pos.push_back(p);
        }
    }
    GaussianConditioner const c(prior.mean, prior.cov, rest_pos, given_pos);
    return { rest, c.conditional_mean(given_values), c.covariance() };
}

GaussianSampler::GaussianSampler(ConditionalGaussian const& law)
    : mean_(law.mean)
{
    auto const k = law.mean.size();
    if (k == 0) {
        root_.resize(0, 0);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(law.cov);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition of the sampling covariance failed");
    }
    Eigen::VectorXd const lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_ = eig.eigenvectors() * lambda.asDiagonal();
}

auto GaussianSampler::draw(Index count, Rng& rng) const -> Eigen::MatrixXd
{
    auto const k = mean_.size();
    auto const n = static_cast<Eigen::Index>(count);
    Eigen::MatrixXd eps(n, k);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            eps(r, c) = normal(rng);
        }
    }
    Eigen::MatrixXd out = eps * root_.transpose();
    out.rowwise() += mean_.transpose();
    return out;
}

auto sample(ConditionalGaussian const& law, Index count, std::uint64_t seed) -> Eigen::MatrixXd
{
    if (count == 0) {
        throw UsageError("sample count must be at least 1");
    }
    Rng rng(seed);
    return GaussianSampler(law).draw(count, rng);
}

} // namespace mindrel
