#include "mindrel/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mindrel/errors.hpp"
#include "mindrel/predictive.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

// stream tags for derive_seed
enum : std::uint64_t {
    kTestStream = 11,
    kScoreStream = 12,
    kScoreLawStream = 13,
    kRandomStream = 14,
    kLawStream = 15,
};

auto nan() -> double
{
    return std::numeric_limits<double>::quiet_NaN();
}

auto name_of(std::vector<std::string> const& names, Index i) -> nlohmann::ordered_json
{
    if (i < names.size()) {
        return names[i];
    }
    return i;
}

auto names_of(std::vector<std::string> const& names, IndexSet const& idx) -> nlohmann::ordered_json
{
    auto out = nlohmann::ordered_json::array();
    for (auto i : idx) {
        out.push_back(name_of(names, i));
    }
    return out;
}

auto scores_json(std::vector<std::string> const& names, std::vector<FeatureScore> const& scores)
    -> nlohmann::ordered_json
{
    auto out = nlohmann::ordered_json::array();
    for (auto const& sc : scores) {
        out.push_back({ { "feature", name_of(names, sc.feature) }, { "score", sc.score } });
    }
    return out;
}

} // namespace

auto parse_selector(std::string const& name) -> Selector
{
    if (name == "fscore") {
        return Selector::FScore;
    }
    if (name == "importance") {
        return Selector::Importance;
    }
    if (name == "random") {
        return Selector::Random;
    }
    throw UsageError("unknown selector '" + name + "' (expected fscore, importance or random)");
}

auto selector_name(Selector s) -> std::string
{
    switch (s) {
    case Selector::FScore:
        return "fscore";
    case Selector::Importance:
        return "importance";
    case Selector::Random:
        return "random";
    }
    return "unknown";
}

auto operator==(StepRecord const& a, StepRecord const& b) -> bool
{
    if (a.feature != b.feature || a.value != b.value || a.clipped != b.clipped || a.entropy != b.entropy
        || a.confidence != b.confidence || a.scores.size() != b.scores.size()) {
        return false;
    }
    for (Index i = 0; i < a.scores.size(); ++i) {
        if (a.scores[i].feature != b.scores[i].feature || a.scores[i].score != b.scores[i].score) {
            return false;
        }
    }
    return true;
}

auto Session::leakage() const -> double
{
    auto const s = partition.sensitive_idx.size();
    return s == 0 ? 0.0 : static_cast<double>(revealed.size()) / static_cast<double>(s);
}

auto Session::label() const -> int
{
    if (!terminal || !terminal->label) {
        throw UsageError("session has no decision yet");
    }
    return *terminal->label;
}

auto importance_from(LinearModel const& model) -> std::vector<double>
{
    std::vector<double> out(model.num_features());
    for (Index j = 0; j < out.size(); ++j) {
        out[j] = model.weights.col(static_cast<Eigen::Index>(j)).norm();
    }
    return out;
}

Engine::Engine(Model model, GaussianStats stats, EngineConfig config, std::vector<double> importance)
    : model_(std::move(model))
    , stats_(std::move(stats))
    , config_(config)
    , importance_(std::move(importance))
{
    check_delta(config_.delta);
    if (config_.mc_samples == 0 || config_.probe_samples == 0) {
        throw UsageError("mc_samples and probe_samples must be positive");
    }
    if (num_features(model_) != stats_.dim()) {
        throw UsageError("model and statistics disagree on the number of features");
    }
    if (importance_.empty()) {
        if (auto const* lin = std::get_if<LinearModel>(&model_)) {
            importance_ = importance_from(*lin);
        }
    }
    if (config_.selector == Selector::Importance && importance_.size() != stats_.dim()) {
        throw UsageError("the importance selector needs one importance weight per feature");
    }
}

auto Engine::test_options(std::uint64_t seed, Index step) const -> CoreTestOptions
{
    return { config_.delta, config_.probe_samples, config_.mc_samples, derive_seed(seed, { kTestStream, step }) };
}

auto Engine::start(FeaturePartition partition, Eigen::VectorXd const& x, std::optional<std::uint64_t> seed) const
    -> Session
{
    auto const d = stats_.dim();
    if (partition.num_features() != d || static_cast<Index>(x.size()) != d) {
        throw UsageError("expected " + std::to_string(d) + " features");
    }
    Session s;
    s.x = x;
    for (auto i : partition.public_idx) {
        if (!std::isfinite(x(static_cast<Eigen::Index>(i)))) {
            throw UsageError("public feature " + std::to_string(i) + " has no finite value");
        }
    }
    for (auto i : partition.sensitive_idx) {
        s.x(static_cast<Eigen::Index>(i)) = nan();
    }
    s.unrevealed = partition.sensitive_idx;
    s.partition = std::move(partition);
    s.seed = seed.value_or(config_.seed);
    evaluate(s);
    return s;
}

void Engine::evaluate(Session& s) const
{
    auto const step = s.revealed.size();
    s.post = std::make_shared<ConditionalGaussian const>(posterior(stats_, Evidence { s.x, s.unrevealed }));
    s.status = test_core(model_, *s.post, s.x, test_options(s.seed, step));
    s.entropy = entropy(predictive_law(model_, *s.post, s.x, config_.mc_samples,
                                       derive_seed(s.seed, { kLawStream, step })));
    s.pending.reset();
    s.pending_scores.clear();
    if (s.status.is_core) {
        s.terminal = s.status;
        return;
    }
    auto [next, scores] = select_next(s);
    s.pending = next;
    s.pending_scores = std::move(scores);
}

auto Engine::score_feature(Session const& s, Index j) const -> double
{
    if (!s.post) {
        throw UsageError("session was not started by an engine");
    }
    auto const& post = *s.post;
    auto const pos = post.position(j);
    IndexSet rest;
    std::vector<Index> rest_pos;
    for (Index p = 0; p < post.size(); ++p) {
        if (p != pos) {
            rest.push_back(post.target_idx[p]);
            rest_pos.push_back(p);
        }
    }
    std::vector<Index> const given_pos { pos };
    GaussianConditioner const cond(post.mean, post.cov, rest_pos, given_pos);
    double const mu = post.mean(static_cast<Eigen::Index>(pos));
    double const sd = std::sqrt(std::max(0.0, post.cov(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(pos))));

    auto const step = s.revealed.size();
    auto const draws = config_.mc_samples;
    // Antithetic pairs from a stream shared by every candidate feature.
    Rng rng(derive_seed(s.seed, { kScoreStream, step }));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x = s.x;
    Eigen::VectorXd given(1);
    auto entropy_at = [&](double z, Index k) {
        x(static_cast<Eigen::Index>(j)) = z;
        given(0) = z;
        ConditionalGaussian const law_post { rest, cond.conditional_mean(given), cond.covariance() };
        return entropy(predictive_law(model_, law_post, x, config_.mc_samples,
                                      derive_seed(s.seed, { kScoreLawStream, step, k })));
    };
    double acc = 0.0;
    for (Index k = 0; k < draws; k += 2) {
        double const eps = normal(rng);
        if (k + 1 < draws) {
            acc += entropy_at(mu + sd * eps, k) + entropy_at(mu - sd * eps, k + 1);
        } else {
            acc += entropy_at(mu + sd * eps, k);
        }
    }
    return -acc / static_cast<double>(draws);
}

auto Engine::select_next(Session const& s) const -> std::pair<Index, std::vector<FeatureScore>>
{
    if (s.unrevealed.empty()) {
        throw UsageError("no unrevealed feature left to select");
    }
    auto const& u = s.unrevealed;
    switch (config_.selector) {
    case Selector::FScore: {
        std::vector<FeatureScore> scores;
        scores.reserve(u.size());
        Index best = 0;
        for (Index i = 0; i < u.size(); ++i) {
            scores.push_back({ u[i], score_feature(s, u[i]) });
            if (scores[i].score > scores[best].score) {
                best = i;
            }
        }
        return { u[best], std::move(scores) };
    }
    case Selector::Importance: {
        Index best = u.front();
        for (auto j : u) {
            if (importance_[j] > importance_[best]) {
                best = j;
            }
        }
        return { best, {} };
    }
    case Selector::Random: {
        Rng rng(derive_seed(s.seed, { kRandomStream, s.revealed.size() }));
        std::uniform_int_distribution<Index> pick(0, u.size() - 1);
        return { u[pick(rng)], {} };
    }
    }
    throw UsageError("unknown selector");
}

auto Engine::step(Session& s, double value) const -> StepRecord const&
{
    if (s.terminal) {
        throw UsageError("session is already decided");
    }
    if (!s.pending) {
        throw UsageError("session has no pending feature request");
    }
    if (!std::isfinite(value)) {
        throw UsageError("revealed value must be finite");
    }
    auto const j = *s.pending;
    StepRecord rec;
    rec.feature = j;
    rec.value = std::clamp(value, -1.0, 1.0);
    rec.clipped = rec.value != value;
    rec.scores = std::move(s.pending_scores);

    s.x(static_cast<Eigen::Index>(j)) = rec.value;
    s.revealed.emplace_back(j, rec.value);
    s.unrevealed.erase(std::find(s.unrevealed.begin(), s.unrevealed.end(), j));
    evaluate(s);
    rec.entropy = s.entropy;
    rec.confidence = s.status.confidence;
    s.log.push_back(std::move(rec));
    return s.log.back();
}

auto Engine::preview(Session const& s, Index feature, double value) const -> CoreSetResult
{
    if (!std::binary_search(s.unrevealed.begin(), s.unrevealed.end(), feature)) {
        throw UsageError("feature " + std::to_string(feature) + " is not an unrevealed sensitive feature");
    }
    if (!std::isfinite(value)) {
        throw UsageError("preview value must be finite");
    }
    Eigen::VectorXd x = s.x;
    x(static_cast<Eigen::Index>(feature)) = std::clamp(value, -1.0, 1.0);
    IndexSet unknown;
    std::copy_if(s.unrevealed.begin(), s.unrevealed.end(), std::back_inserter(unknown),
                 [feature](Index i) { return i != feature; });
    return test_core(model_, stats_, Evidence { x, unknown }, test_options(s.seed, s.revealed.size() + 1));
}

auto Engine::run_auto(Eigen::VectorXd const& x_full, FeaturePartition const& partition,
                      std::optional<std::uint64_t> seed) const -> Session
{
    auto s = start(partition, x_full, seed);
    while (!s.terminal) {
        step(s, x_full(static_cast<Eigen::Index>(*s.pending)));
    }
    return s;
}

auto session_to_json(Session const& s, std::vector<std::string> const& feature_names) -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["public"] = names_of(feature_names, s.partition.public_idx);
    j["sensitive"] = names_of(feature_names, s.partition.sensitive_idx);
    auto revealed = nlohmann::ordered_json::array();
    for (auto const& [f, v] : s.revealed) {
        revealed.push_back({ { "feature", name_of(feature_names, f) }, { "value", v } });
    }
    j["revealed"] = revealed;
    j["unrevealed"] = names_of(feature_names, s.unrevealed);
    auto log = nlohmann::ordered_json::array();
    for (auto const& r : s.log) {
        log.push_back({
            { "feature", name_of(feature_names, r.feature) },
            { "value", r.value },
            { "clipped", r.clipped },
            { "scores", scores_json(feature_names, r.scores) },
            { "entropy", r.entropy },
            { "confidence", r.confidence },
        });
    }
    j["step_log"] = log;
    j["status"] = s.terminal ? "decided" : "awaiting_feature";
    j["requested_feature"] = s.pending ? name_of(feature_names, *s.pending) : nlohmann::ordered_json(nullptr);
    j["confidence"] = s.status.confidence;
    j["entropy"] = s.entropy;
    j["terminal"] = s.terminal ? s.terminal->to_json() : nlohmann::ordered_json(nullptr);
    j["leakage"] = s.leakage();
    return j;
}

} // namespace mindrel
