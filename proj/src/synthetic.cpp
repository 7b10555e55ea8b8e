#include "mindrel/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mindrel/errors.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

// Random correlated Gaussian mixing matrix with unit-ish marginal variances.
auto mixing_matrix(Index d, Rng& rng) -> Eigen::MatrixXd
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            a(i, j) = (i == j ? 1.0 : 0.0) + 0.35 * normal(rng);
        }
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        a.row(i) /= a.row(i).norm();
    }
    return a;
}

void write_linear(std::ostream& out, Index rows, Index d, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    auto const mix = mixing_matrix(d, rng);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(d));
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        theta(j) = normal(rng) * (j % 3 == 0 ? 1.5 : 0.6);
    }
    for (Index j = 0; j < d; ++j) {
        out << 'x' << j << ',';
    }
    out << "y\n";
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            z(j) = normal(rng);
        }
        Eigen::VectorXd const x = 2.0 * (mix * z) + Eigen::VectorXd::Constant(z.size(), 5.0);
        double const score = theta.dot(x - Eigen::VectorXd::Constant(z.size(), 5.0)) + 0.5 * normal(rng);
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            out << x(j) << ',';
        }
        out << (score >= 0.0 ? 1 : 0) << '\n';
    }
}

void write_bank_like(std::ostream& out, Index rows, Rng& rng)
{
    constexpr Index kNumeric = 14;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto const mix = mixing_matrix(kNumeric, rng);
    static constexpr std::array<char const*, kNumeric> names = {
        "age", "balance", "duration", "campaign", "pdays", "previous", "day",
        "emp_var_rate", "cons_price_idx", "cons_conf_idx", "euribor3m", "nr_employed", "tenure", "contacts",
    };
    static constexpr std::array<double, kNumeric> weights = {
        0.3, 0.5, 1.6, -0.7, -0.4, 0.6, 0.05, -1.1, 0.2, 0.35, -0.9, -0.5, 0.15, 0.0,
    };
    static constexpr std::array<char const*, 4> jobs = { "admin", "blue_collar", "retired", "student" };
    static constexpr std::array<double, 4> job_effect = { 0.0, -0.5, 0.7, 0.9 };
    static constexpr std::array<char const*, 3> marital = { "divorced", "married", "single" };
    static constexpr std::array<double, 3> marital_effect = { 0.1, -0.2, 0.3 };

    for (auto const* n : names) {
        out << n << ',';
    }
    out << "job,marital,y\n";
    Eigen::VectorXd z(static_cast<Eigen::Index>(kNumeric));
    for (Index r = 0; r < rows; ++r) {
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            z(j) = normal(rng);
        }
        Eigen::VectorXd const x = mix * z;
        double score = -2.2;
        for (Index j = 0; j < kNumeric; ++j) {
            score += weights[j] * x(static_cast<Eigen::Index>(j));
        }
        // job correlates with age (x0), marital status with tenure (x12)
        auto const job = static_cast<Index>(std::clamp(std::floor(2.0 + 1.2 * x(0) + normal(rng)), 0.0, 3.0));
        auto const mar = static_cast<Index>(std::clamp(std::floor(1.0 + 0.8 * x(12) + 0.7 * normal(rng) + 0.5), 0.0, 2.0));
        score += job_effect[job] + marital_effect[mar] + 0.6 * normal(rng);

        // raw units: a few skewed or integer-valued attributes like the original table
        out << std::round(40.0 + 10.0 * x(0)) << ',' << std::exp(7.0 + 0.8 * x(1)) << ',' << std::exp(5.5 + 0.6 * x(2))
            << ',' << std::round(std::exp(0.9 + 0.5 * x(3))) << ',' << 100.0 + 60.0 * x(4) << ',' << std::round(std::exp(0.5 + 0.6 * x(5)))
            << ',' << std::round(std::clamp(15.5 + 8.0 * x(6), 1.0, 31.0));
        for (Eigen::Index j = 7; j < static_cast<Eigen::Index>(kNumeric); ++j) {
            out << ',' << x(j);
        }
        out << ',' << jobs[job] << ',' << marital[mar] << ',' << (score >= 0.0 ? "yes" : "no") << '\n';
    }
}

void write_multiclass(std::ostream& out, Index rows, Index d, Rng& rng)
{
    constexpr int kClasses = 3;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, kClasses - 1);
    auto const mix = mixing_matrix(d, rng);
    Eigen::MatrixXd centers(kClasses, static_cast<Eigen::Index>(d));
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        for (Eigen::Index j = 0; j < centers.cols(); ++j) {
            centers(c, j) = 1.2 * normal(rng);
        }
    }
    for (Index j = 0; j < d; ++j) {
        out << 'x' << j << ',';
    }
    out << "y\n";
    Eigen::VectorXd z(static_cast<Eigen::Index>(d));
    for (Index r = 0; r < rows; ++r) {
        int const cls = pick(rng);
        for (Eigen::Index j = 0; j < z.size(); ++j) {
            z(j) = normal(rng);
        }
        Eigen::VectorXd const x = centers.row(cls).transpose() + mix * z;
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            out << x(j) << ',';
        }
        out << cls << '\n';
    }
}

} // namespace

auto parse_synthetic_kind(std::string const& name) -> SyntheticKind
{
    if (name == "linear") {
        return SyntheticKind::Linear;
    }
    if (name == "bank") {
        return SyntheticKind::BankLike;
    }
    if (name == "multiclass") {
        return SyntheticKind::Multiclass;
    }
    throw UsageError("unknown synthetic dataset kind '" + name + "' (expected linear, bank or multiclass)");
}

void write_synthetic_csv(std::ostream& out, SyntheticKind kind, Index rows, Index features, std::uint64_t seed)
{
    if (rows == 0 || (kind != SyntheticKind::BankLike && features == 0)) {
        throw UsageError("synthetic dataset needs at least one row and one feature");
    }
    Rng rng(seed);
    out << std::setprecision(8);
    switch (kind) {
    case SyntheticKind::Linear:
        write_linear(out, rows, features, rng);
        break;
    case SyntheticKind::BankLike:
        write_bank_like(out, rows, rng);
        break;
    case SyntheticKind::Multiclass:
        write_multiclass(out, rows, features, rng);
        break;
    }
}

auto make_synthetic(SyntheticKind kind, Index rows, Index features, std::uint64_t seed) -> Dataset
{
    std::stringstream ss;
    write_synthetic_csv(ss, kind, rows, features, seed);
    return parse_csv(ss, "y");
}

} // namespace mindrel
