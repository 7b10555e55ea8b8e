#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mindrel/engine.hpp"
#include "mindrel/model.hpp"

namespace mindrel {

inline constexpr Index kOptimalBudget = 12;

struct ExperimentSpec {
    std::string name = "experiment";
    std::filesystem::path dataset;
    std::string label = "y";
    std::string model = "logistic"; // logistic | mlp
    std::vector<Index> sensitive_sizes { 5 };
    std::vector<double> deltas { 0.0 };
    std::vector<Selector> selectors { Selector::FScore };
    Index repetitions = 20;
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    Index test_cap = 500; // 0 keeps the full test split
    bool include_optimal = false;
    Index mc_samples = kDefaultMcSamples;
    Index probe_samples = kDefaultProbeSamples;
    std::optional<TrainConfig> train; // family defaults when absent
    double ridge = kDefaultRidge;

    // Relative dataset paths resolve against `base_dir`.
    static auto from_json(nlohmann::ordered_json const& j, std::filesystem::path const& base_dir = {}) -> ExperimentSpec;
    static auto load(std::filesystem::path const& path) -> ExperimentSpec;
    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
};

// One terminal outcome per test sample.
struct SampleOutcome {
    Index core_size = 0;
    int label = 0;
};

struct CellResult {
    Index sensitive_size = 0;
    std::string method; // mindrel | all_features | optimal
    std::optional<Selector> selector;
    std::optional<double> delta;
    std::vector<double> accuracy; // per repetition
    std::vector<double> leakage;  // per repetition
    std::vector<std::vector<SampleOutcome>> samples; // per repetition, per test sample
    std::map<Index, Index> histogram;
    double mean_accuracy = 0.0;
    double se_accuracy = 0.0;
    double mean_leakage = 0.0;
    double se_leakage = 0.0;

    [[nodiscard]] auto key() const -> std::string;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<std::string> feature_names;
    Index train_rows = 0;
    Index test_rows = 0;
    double model_test_accuracy = 0.0;
    std::vector<CellResult> cells;
    double wall_seconds = 0.0;

    [[nodiscard]] auto find(Index sensitive_size, std::string const& method, std::optional<Selector> selector = {},
                            std::optional<double> delta = {}) const -> CellResult const&;
    // deterministic: wall time is left out
    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;
};

auto data_leakage(std::vector<Session> const& sessions) -> double;
auto data_leakage(std::vector<SampleOutcome> const& outcomes, Index sensitive_size) -> double;
auto accuracy(std::vector<int> const& predicted, std::vector<int> const& truth) -> double;
auto accuracy(std::vector<Session> const& sessions, std::vector<int> const& truth) -> double;
auto histogram_core_sizes(std::vector<Session> const& sessions) -> std::map<Index, Index>;
// running totals over sizes 0..max
auto cumulative(std::map<Index, Index> const& histogram) -> std::vector<Index>;

auto run_experiment(ExperimentSpec const& spec) -> ExperimentResult;

// results.json, results.csv, core_sizes.csv and timing.json in `dir`.
void write_results(ExperimentResult const& result, std::filesystem::path const& dir);

} // namespace mindrel
