#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mindrel/errors.hpp"
#include "mindrel/experiment.hpp"
#include "support.hpp"

using namespace mindrel;

namespace {

auto decided_session(Index sensitive, Index revealed, int label) -> Session
{
    Session s;
    IndexSet sens;
    for (Index i = 0; i < sensitive; ++i) {
        sens.push_back(i);
    }
    s.partition = FeaturePartition::from_sensitive(sensitive + 1, sens);
    for (Index i = 0; i < revealed; ++i) {
        s.revealed.emplace_back(i, 0.0);
    }
    s.terminal = CoreSetResult { true, label, 1.0 };
    return s;
}

auto small_spec() -> ExperimentSpec
{
    auto spec = ExperimentSpec::from_json(nlohmann::ordered_json::parse(R"({
        "name": "small",
        "dataset": "synthetic_linear.csv",
        "sensitive_sizes": [2, 4],
        "deltas": [0.0, 0.2],
        "selectors": ["fscore", "random"],
        "repetitions": 2,
        "seed": 3,
        "test_cap": 25,
        "mc_samples": 20,
        "include_optimal": true
    })"),
                                          support::data_dir());
    return spec;
}

auto slurp(std::filesystem::path const& p) -> std::string
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("metric examples")
{
    std::vector<Session> const sessions { decided_session(4, 1, 1), decided_session(4, 2, 0),
                                          decided_session(4, 0, 1) };
    CHECK(data_leakage(sessions) == doctest::Approx(0.25));
    CHECK(accuracy(sessions, { 1, 1, 1 }) == doctest::Approx(2.0 / 3.0));
    CHECK(accuracy(std::vector<int> { 1, 0, 1, 1 }, std::vector<int> { 1, 0, 0, 1 }) == 0.75);
    CHECK(data_leakage(std::vector<SampleOutcome> { { 1, 0 }, { 3, 1 } }, 4) == 0.5);
    CHECK(data_leakage(std::vector<SampleOutcome> { { 0, 0 } }, 0) == 0.0);

    CHECK_THROWS_AS(data_leakage(std::vector<Session> {}), UsageError);
    CHECK_THROWS_AS(accuracy(std::vector<int> {}, std::vector<int> {}), UsageError);
    CHECK_THROWS_AS(accuracy(std::vector<int> { 1 }, std::vector<int> { 1, 0 }), UsageError);
    Session open;
    open.partition = FeaturePartition::from_sensitive(2, { 0 });
    CHECK_THROWS_AS(data_leakage(std::vector<Session> { open }), UsageError);
}

TEST_CASE("core size histogram and its running totals")
{
    std::vector<Session> const sessions { decided_session(5, 0, 1), decided_session(5, 1, 1),
                                          decided_session(5, 1, 0), decided_session(5, 2, 1) };
    auto const h = histogram_core_sizes(sessions);
    CHECK(h == std::map<Index, Index> { { 0, 1 }, { 1, 2 }, { 2, 1 } });
    CHECK(cumulative(h) == std::vector<Index> { 1, 3, 4 });
    CHECK(cumulative({ { 2, 3 } }) == std::vector<Index> { 0, 0, 3 });
    CHECK(cumulative({}).empty());
}

TEST_CASE("spec parsing")
{
    auto const spec = small_spec();
    CHECK(spec.dataset == support::data_dir() / "synthetic_linear.csv");
    CHECK(spec.selectors == std::vector<Selector> { Selector::FScore, Selector::Random });
    CHECK(spec.train_fraction == 0.7);
    auto const again = ExperimentSpec::from_json(spec.to_json());
    CHECK(again.to_json() == spec.to_json());
    CHECK_THROWS_AS(ExperimentSpec::from_json({ { "dataset", "x.csv" }, { "selectors", { "best" } } }),
                    UsageError);
    CHECK_THROWS_AS(ExperimentSpec::load("/nonexistent/spec.json"), DataError);
    auto const quick = ExperimentSpec::load(support::data_dir() / ".." / "experiments" / "quick.json");
    CHECK(quick.include_optimal);
    CHECK(std::filesystem::exists(quick.dataset));
}

TEST_CASE("optimal baseline budget is enforced before any work")
{
    ExperimentSpec spec;
    spec.dataset = "/nonexistent/data.csv";
    spec.sensitive_sizes = { 15 };
    spec.include_optimal = true;
    CHECK_THROWS_AS(run_experiment(spec), UsageError);
    spec.include_optimal = false;
    CHECK_THROWS_AS(run_experiment(spec), DataError);
}

TEST_CASE("small experiment is deterministic and internally consistent")
{
    auto const spec = small_spec();
    auto const a = run_experiment(spec);
    auto const b = run_experiment(spec);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(a.test_rows == 25);
    // per size: all_features, 2 deltas x 2 selectors, optimal per delta
    CHECK(a.cells.size() == 2 * (1 + 4 + 2));

    for (Index s : { Index { 2 }, Index { 4 } }) {
        auto const& all = a.find(s, "all_features");
        CHECK(all.mean_leakage == 1.0);
        CHECK(all.mean_accuracy == doctest::Approx(a.model_test_accuracy));
        for (auto sel : spec.selectors) {
            // the pure protocol reproduces the full-feature predictions
            auto const& pure = a.find(s, "mindrel", sel, 0.0);
            CHECK(pure.accuracy == all.accuracy);
            CHECK(pure.mean_leakage <= 1.0);
            CHECK(pure.samples.size() == spec.repetitions);
            Index total = 0;
            for (auto const& [size, count] : pure.histogram) {
                CHECK(size <= s);
                total += count;
            }
            CHECK(total == spec.repetitions * a.test_rows);
            auto const& opt = a.find(s, "optimal", {}, 0.0);
            CHECK(opt.mean_leakage <= pure.mean_leakage + 1e-12);
        }
    }
    CHECK_THROWS_AS((void)a.find(3, "mindrel"), UsageError);

    auto const dir = std::filesystem::temp_directory_path() / "mindrel_experiment_test";
    std::filesystem::remove_all(dir);
    write_results(a, dir);
    for (auto const* name : { "results.json", "results.csv", "core_sizes.csv", "timing.json" }) {
        CHECK(std::filesystem::exists(dir / name));
    }
    auto const csv = slurp(dir / "results.csv");
    CHECK(csv.rfind("sensitive_size,method,selector,delta", 0) == 0);
    auto const json = nlohmann::ordered_json::parse(slurp(dir / "results.json"));
    CHECK(json["cells"].size() == a.cells.size());
    write_results(b, dir / "again");
    CHECK(slurp(dir / "results.json") == slurp(dir / "again" / "results.json"));
    std::filesystem::remove_all(dir);
}
