#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "mindrel/core_set.hpp"
#include "mindrel/dataset.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/model.hpp"

namespace mindrel {

enum class Selector { FScore, Importance, Random };

auto parse_selector(std::string const& name) -> Selector;
auto selector_name(Selector s) -> std::string;

struct EngineConfig {
    double delta = 0.0;
    Selector selector = Selector::FScore;
    Index mc_samples = kDefaultMcSamples;
    Index probe_samples = kDefaultProbeSamples;
    std::uint64_t seed = 0;
};

struct FeatureScore {
    Index feature = 0;
    double score = 0.0;
};

struct StepRecord {
    Index feature = 0;
    double value = 0.0; // after clipping
    bool clipped = false;
    std::vector<FeatureScore> scores; // candidates scored before choosing `feature` (FScore only)
    double entropy = 0.0;             // label entropy after the reveal
    double confidence = 0.0;          // test confidence after the reveal
};

auto operator==(StepRecord const& a, StepRecord const& b) -> bool;

// One individual's disclosure state. Sensitive coordinates of x are NaN until revealed.
struct Session {
    FeaturePartition partition;
    Eigen::VectorXd x;
    std::vector<std::pair<Index, double>> revealed; // in reveal order
    IndexSet unrevealed;
    std::vector<StepRecord> log;
    std::optional<Index> pending; // feature the protocol asks for next
    std::vector<FeatureScore> pending_scores;
    CoreSetResult status; // latest core-set test
    double entropy = 0.0; // of the current label law
    std::optional<CoreSetResult> terminal;
    std::uint64_t seed = 0;
    std::shared_ptr<ConditionalGaussian const> post; // law of the unrevealed features

    [[nodiscard]] auto decided() const -> bool { return terminal.has_value(); }
    [[nodiscard]] auto num_revealed() const -> Index { return revealed.size(); }
    // |R| / |S|; 0 when there are no sensitive features
    [[nodiscard]] auto leakage() const -> double;
    // representative label of a decided session
    [[nodiscard]] auto label() const -> int;
};

// The sequential protocol. Holds immutable model and statistics; every method is
// const, so one engine can drive many sessions concurrently.
class Engine {
public:
    // `importance` gives one weight per feature for the Importance selector;
    // when empty it is taken from a linear model's coefficients.
    Engine(Model model, GaussianStats stats, EngineConfig config, std::vector<double> importance = {});

    [[nodiscard]] auto model() const -> Model const& { return model_; }
    [[nodiscard]] auto stats() const -> GaussianStats const& { return stats_; }
    [[nodiscard]] auto config() const -> EngineConfig const& { return config_; }
    [[nodiscard]] auto importance() const -> std::vector<double> const& { return importance_; }

    // Fresh session with nothing revealed; the core test runs immediately,
    // so a session may start decided.
    [[nodiscard]] auto start(FeaturePartition partition, Eigen::VectorXd const& x,
                             std::optional<std::uint64_t> seed = std::nullopt) const -> Session;

    // Negated mean label entropy over draws of feature j from its current law.
    [[nodiscard]] auto score_feature(Session const& s, Index j) const -> double;
    [[nodiscard]] auto select_next(Session const& s) const -> std::pair<Index, std::vector<FeatureScore>>;

    // Reveals the pending feature. Values outside [-1, 1] are clipped.
    auto step(Session& s, double value) const -> StepRecord const&;

    // Core test after hypothetically revealing `feature`; the session is untouched.
    [[nodiscard]] auto preview(Session const& s, Index feature, double value) const -> CoreSetResult;

    // Full protocol, answering each request from x_full.
    [[nodiscard]] auto run_auto(Eigen::VectorXd const& x_full, FeaturePartition const& partition,
                                std::optional<std::uint64_t> seed = std::nullopt) const -> Session;

private:
    void evaluate(Session& s) const;
    [[nodiscard]] auto test_options(std::uint64_t seed, Index step) const -> CoreTestOptions;

    Model model_;
    GaussianStats stats_;
    EngineConfig config_;
    std::vector<double> importance_;
};

// Column norms of a logistic model's coefficient matrix.
auto importance_from(LinearModel const& model) -> std::vector<double>;

auto session_to_json(Session const& s, std::vector<std::string> const& feature_names) -> nlohmann::ordered_json;

} // namespace mindrel
