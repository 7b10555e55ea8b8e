#include "mindrel/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mindrel/errors.hpp"

namespace mindrel {

namespace {

constexpr double kProbFloor = 1e-12;

auto degenerate_law(int label, int num_classes) -> PredictiveLaw
{
    PredictiveLaw law { Eigen::VectorXd::Zero(num_classes) };
    law.class_probs(label) = 1.0;
    return law;
}

} // namespace

auto Evidence::known() const -> IndexSet
{
    IndexSet out;
    auto const d = static_cast<Index>(x.size());
    out.reserve(d - unknown.size());
    for (Index i = 0; i < d; ++i) {
        if (!std::binary_search(unknown.begin(), unknown.end(), i)) {
            out.push_back(i);
        }
    }
    return out;
}

auto Evidence::known_values() const -> Eigen::VectorXd
{
    auto const idx = known();
    Eigen::VectorXd v(static_cast<Eigen::Index>(idx.size()));
    for (Index i = 0; i < idx.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = x(static_cast<Eigen::Index>(idx[i]));
    }
    return v;
}

auto posterior(GaussianStats const& stats, Evidence const& ev) -> ConditionalGaussian
{
    if (static_cast<Index>(ev.x.size()) != stats.dim()) {
        throw UsageError("evidence has " + std::to_string(ev.x.size()) + " features, statistics have "
                         + std::to_string(stats.dim()));
    }
    return condition(stats, ev.unknown, ev.known(), ev.known_values());
}

auto PredictiveLaw::argmax() const -> int
{
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < class_probs.size(); ++k) {
        if (class_probs(k) > class_probs(best)) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

auto PredictiveLaw::to_json() const -> nlohmann::ordered_json
{
    return std::vector<double>(class_probs.data(), class_probs.data() + class_probs.size());
}

auto complete(Eigen::VectorXd x, IndexSet const& targets, Eigen::VectorXd const& values) -> Eigen::VectorXd
{
    for (Index p = 0; p < targets.size(); ++p) {
        x(static_cast<Eigen::Index>(targets[p])) = values(static_cast<Eigen::Index>(p));
    }
    return x;
}

auto linear_soft_law(LinearModel const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                     Index output) -> PredictiveGaussian
{
    if (static_cast<Index>(x.size()) != model.num_features()) {
        throw UsageError("model expects " + std::to_string(model.num_features()) + " features");
    }
    auto const row = static_cast<Eigen::Index>(output);
    Eigen::RowVectorXd const theta = model.weights.row(row);
    Eigen::VectorXd theta_u(static_cast<Eigen::Index>(post.size()));
    Eigen::VectorXd observed = x;
    for (Index p = 0; p < post.size(); ++p) {
        auto const f = static_cast<Eigen::Index>(post.target_idx[p]);
        theta_u(static_cast<Eigen::Index>(p)) = theta(f);
        observed(f) = 0.0;
    }
    PredictiveGaussian pg;
    pg.mean = theta.dot(observed) + model.bias(row) + theta_u.dot(post.mean);
    pg.variance = std::max(0.0, theta_u.dot(post.cov * theta_u));
    return pg;
}

auto linear_soft_law(LinearModel const& model, GaussianStats const& stats, Evidence const& ev) -> PredictiveGaussian
{
    return linear_soft_law(model, posterior(stats, ev), ev.x);
}

auto standard_normal_cdf(double z) -> double
{
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

auto threshold_law(PredictiveGaussian const& pg) -> PredictiveLaw
{
    if (!std::isfinite(pg.mean) || !std::isfinite(pg.variance) || pg.variance < 0.0) {
        throw NumericalError("predictive Gaussian is not finite");
    }
    double const p = pg.variance == 0.0 ? (pg.mean >= 0.0 ? 1.0 : 0.0)
                                        : standard_normal_cdf(pg.mean / std::sqrt(pg.variance));
    PredictiveLaw law { Eigen::VectorXd(2) };
    law.class_probs << 1.0 - p, p;
    return law;
}

auto taylor_soft_law(MlpModel const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x, Index output)
    -> PredictiveGaussian
{
    Model const m = model;
    Eigen::VectorXd const anchor = complete(x, post.target_idx, post.mean);
    PredictiveGaussian pg;
    pg.mean = soft_predict(m, anchor)(static_cast<Eigen::Index>(output));
    if (post.size() == 0) {
        return pg;
    }
    Eigen::VectorXd const grad = input_gradient(m, anchor, output);
    Eigen::VectorXd g(static_cast<Eigen::Index>(post.size()));
    for (Index p = 0; p < post.size(); ++p) {
        g(static_cast<Eigen::Index>(p)) = grad(static_cast<Eigen::Index>(post.target_idx[p]));
    }
    pg.variance = std::max(0.0, g.dot(post.cov * g));
    return pg;
}

auto multiclass_law(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                    Index num_samples, std::uint64_t seed) -> PredictiveLaw
{
    if (num_samples == 0) {
        throw UsageError("multi-class law needs at least one sample");
    }
    auto const classes = num_classes(model);
    if (post.size() == 0) {
        return degenerate_law(hard_predict(model, x), classes);
    }
    Eigen::MatrixXd const draws = sample(post, num_samples, seed);
    Eigen::MatrixXd rows = x.transpose().replicate(draws.rows(), 1);
    for (Index p = 0; p < post.size(); ++p) {
        rows.col(static_cast<Eigen::Index>(post.target_idx[p])) = draws.col(static_cast<Eigen::Index>(p));
    }
    PredictiveLaw law { Eigen::VectorXd::Zero(classes) };
    for (int label : hard_predict_rows(model, rows)) {
        law.class_probs(label) += 1.0;
    }
    law.class_probs /= static_cast<double>(num_samples);
    return law;
}

auto predictive_law(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                    Index mc_samples, std::uint64_t seed) -> PredictiveLaw
{
    if (num_classes(model) > 2) {
        return multiclass_law(model, post, x, mc_samples, seed);
    }
    if (auto const* lin = std::get_if<LinearModel>(&model)) {
        return threshold_law(linear_soft_law(*lin, post, x));
    }
    return threshold_law(taylor_soft_law(std::get<MlpModel>(model), post, x));
}

auto entropy(Eigen::VectorXd const& probs) -> double
{
    double h = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        double const p = std::clamp(probs(k), kProbFloor, 1.0);
        h -= p * std::log(p);
    }
    return h;
}

auto entropy(PredictiveLaw const& law) -> double
{
    return entropy(law.class_probs);
}

auto binary_entropy(double p) -> double
{
    Eigen::Vector2d probs(p, 1.0 - p);
    return entropy(probs);
}

} // namespace mindrel
