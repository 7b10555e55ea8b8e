#include "mindrel/core_set.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mindrel/errors.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

constexpr Index kProbeChunk = 4096;

auto passed(int label) -> CoreSetResult
{
    return { true, label, 1.0 };
}

// Advances `subset` (sorted positions into a pool of size n) to the next
// combination of the same size in lexicographic order.
auto next_combination(std::vector<Index>& subset, Index n) -> bool
{
    auto const k = subset.size();
    for (Index i = k; i-- > 0;) {
        if (subset[i] < n - k + i) {
            ++subset[i];
            for (Index j = i + 1; j < k; ++j) {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

} // namespace

auto CoreSetResult::to_json() const -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["is_core"] = is_core;
    j["label"] = label ? nlohmann::ordered_json(*label) : nlohmann::ordered_json(nullptr);
    j["confidence"] = confidence;
    return j;
}

auto operator==(CoreSetResult const& a, CoreSetResult const& b) -> bool
{
    return a.is_core == b.is_core && a.label == b.label && a.confidence == b.confidence;
}

void check_delta(double delta)
{
    if (!(delta >= 0.0 && delta < 0.5)) {
        throw UsageError("delta must lie in [0, 0.5)");
    }
}

auto test_pure_linear(LinearModel const& model, Evidence const& ev, OpCounter* counter) -> CoreSetResult
{
    if (model.weights.rows() != 1) {
        throw UsageError("the vertex test applies to binary linear models only");
    }
    if (static_cast<Index>(ev.x.size()) != model.num_features()) {
        throw UsageError("model expects " + std::to_string(model.num_features()) + " features");
    }
    double c = model.bias(0);
    double w = 0.0;
    std::size_t ops = 1;
    auto u = ev.unknown.begin();
    for (Eigen::Index i = 0; i < ev.x.size(); ++i) {
        double const theta = model.weights(0, i);
        if (u != ev.unknown.end() && *u == static_cast<Index>(i)) {
            w += std::abs(theta);
            ++u;
        } else {
            c += theta * ev.x(i);
            ++ops;
        }
        ++ops;
    }
    ops += 2;
    if (counter != nullptr) {
        counter->ops += ops;
    }
    if (c - w >= 0.0) {
        return passed(1);
    }
    if (c + w < 0.0) {
        return passed(0);
    }
    return { false, std::nullopt, 0.0 };
}

auto test_pure_sampled(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
                       Index num_probe, std::uint64_t seed) -> CoreSetResult
{
    if (num_probe == 0) {
        throw UsageError("the sampled core test needs at least one probe");
    }
    int const label = hard_predict(model, complete(x, post.target_idx, post.mean));
    if (post.size() == 0) {
        return passed(label);
    }
    GaussianSampler const sampler(post);
    Rng rng(seed);
    Eigen::MatrixXd rows;
    for (Index done = 0; done < num_probe;) {
        auto const count = std::min(kProbeChunk, num_probe - done);
        Eigen::MatrixXd const draws = sampler.draw(count, rng);
        rows = x.transpose().replicate(draws.rows(), 1);
        for (Index p = 0; p < post.size(); ++p) {
            rows.col(static_cast<Eigen::Index>(post.target_idx[p])) = draws.col(static_cast<Eigen::Index>(p));
        }
        auto const labels = hard_predict_rows(model, rows);
        if (std::any_of(labels.begin(), labels.end(), [label](int l) { return l != label; })) {
            return { false, std::nullopt, 0.0 };
        }
        done += count;
    }
    return passed(label);
}

auto test_delta(PredictiveLaw const& law, double delta) -> CoreSetResult
{
    check_delta(delta);
    double const conf = law.confidence();
    if (conf >= 1.0 - delta) {
        return { true, law.argmax(), conf };
    }
    return { false, std::nullopt, conf };
}

auto test_core(Model const& model, ConditionalGaussian const& post, Eigen::VectorXd const& x,
               CoreTestOptions const& opts) -> CoreSetResult
{
    check_delta(opts.delta);
    auto const law_seed = derive_seed(opts.seed, { 1 });
    if (opts.delta > 0.0) {
        return test_delta(predictive_law(model, post, x, opts.mc_samples, law_seed), opts.delta);
    }
    CoreSetResult result;
    auto const* lin = std::get_if<LinearModel>(&model);
    if (lin != nullptr && lin->weights.rows() == 1) {
        result = test_pure_linear(*lin, Evidence { x, post.target_idx });
    } else {
        result = test_pure_sampled(model, post, x, opts.probe_samples, derive_seed(opts.seed, { 2 }));
    }
    if (!result.is_core) {
        result.confidence = predictive_law(model, post, x, opts.mc_samples, law_seed).confidence();
    }
    return result;
}

auto test_core(Model const& model, GaussianStats const& stats, Evidence const& ev, CoreTestOptions const& opts)
    -> CoreSetResult
{
    return test_core(model, posterior(stats, ev), ev.x, opts);
}

auto optimal_min_core(Model const& model, GaussianStats const& stats, FeaturePartition const& partition,
                      Eigen::VectorXd const& x_full, CoreTestOptions const& opts) -> OptimalCore
{
    auto const& s = partition.sensitive_idx;
    if (s.size() > kOptimalMaxSensitive) {
        throw UsageError("exhaustive search is limited to " + std::to_string(kOptimalMaxSensitive)
                         + " sensitive features, got " + std::to_string(s.size()));
    }
    if (static_cast<Index>(x_full.size()) != partition.num_features()) {
        throw UsageError("feature vector length does not match the partition");
    }
    for (Index k = 0; k <= s.size(); ++k) {
        std::vector<Index> pick(k);
        for (Index i = 0; i < k; ++i) {
            pick[i] = i;
        }
        do {
            IndexSet revealed;
            for (auto p : pick) {
                revealed.push_back(s[p]);
            }
            IndexSet unknown;
            std::set_difference(s.begin(), s.end(), revealed.begin(), revealed.end(), std::back_inserter(unknown));
            auto const result = test_core(model, stats, Evidence { x_full, unknown }, opts);
            if (result.is_core) {
                return { revealed, *result.label, result };
            }
        } while (k > 0 && next_combination(pick, s.size()));
    }
    // every test certifies once nothing is left unknown, so this is a guard only
    int const label = hard_predict(model, x_full);
    return { s, label, { false, std::nullopt, 0.0 } };
}

} // namespace mindrel
