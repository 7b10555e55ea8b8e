#include <set>

#include "doctest.h"
#include "mindrel/engine.hpp"
#include "mindrel/errors.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace mindrel;

namespace {

auto loan_engine(Selector sel = Selector::FScore, double delta = 0.0, Index mc = kDefaultMcSamples) -> Engine
{
    EngineConfig cfg;
    cfg.selector = sel;
    cfg.delta = delta;
    cfg.mc_samples = mc;
    return { support::loan_model(), support::loan_stats(), cfg };
}

auto random_problem(Index d, Rng& rng) -> std::pair<LinearModel, GaussianStats>
{
    LinearModel m;
    m.weights = support::random_vector(static_cast<Eigen::Index>(d), rng).transpose();
    m.bias = support::random_vector(1, rng, -0.3, 0.3);
    GaussianStats s { support::random_vector(static_cast<Eigen::Index>(d), rng, -0.2, 0.2),
                      support::random_spd(static_cast<Eigen::Index>(d), rng) * 0.3, 0.0 };
    return { m, s };
}

} // namespace

TEST_CASE("user A is decided at the start")
{
    auto const engine = loan_engine();
    auto const s = engine.start(support::loan_partition(), support::loan_x(1.0));
    CHECK(s.decided());
    CHECK(s.label() == 1);
    CHECK(s.num_revealed() == 0);
    CHECK(s.leakage() == 0.0);
    CHECK_FALSE(s.pending.has_value());
}

TEST_CASE("user B requests Loc and is decided by its answer")
{
    auto const engine = loan_engine();
    auto s = engine.start(support::loan_partition(), support::loan_x(-0.9));
    REQUIRE_FALSE(s.decided());
    CHECK(std::isnan(s.x(1)));
    CHECK(s.status.confidence == doctest::Approx(0.8985).epsilon(1e-3));
    REQUIRE(s.pending == Index { 1 });
    REQUIRE(s.pending_scores.size() == 2);
    // Loc and Inc are symmetric, so their estimates coincide and the lower index wins
    CHECK(s.pending_scores[0].score == s.pending_scores[1].score);

    auto const& rec = engine.step(s, 1.0);
    CHECK(rec.feature == 1);
    CHECK(rec.value == 1.0);
    CHECK_FALSE(rec.clipped);
    CHECK(s.decided());
    CHECK(s.label() == 0);
    CHECK(s.leakage() == 0.5);
    CHECK(s.unrevealed == IndexSet { 2 });
    CHECK_THROWS_AS(engine.step(s, 0.0), UsageError);
}

TEST_CASE("F-Score estimates approach the quadrature reference")
{
    auto const engine = loan_engine(Selector::FScore, 0.0, 10000);
    auto const s = engine.start(support::loan_partition(), support::loan_x(-0.9));
    CHECK(std::abs(engine.score_feature(s, 1) - oracle::kUserBScoreLoc) < 0.02);
    CHECK(std::abs(engine.score_feature(s, 2) - oracle::kUserBScoreInc) < 0.02);
    // revealing either feature lowers the expected entropy
    CHECK(-engine.score_feature(s, 1) < s.entropy);
}

TEST_CASE("a single unrevealed feature is scored and requested")
{
    auto const engine = loan_engine();
    auto s = engine.start(FeaturePartition::from_sensitive(3, { 1 }), Eigen::Vector3d(-0.2, 0.0, 0.1));
    REQUIRE_FALSE(s.decided());
    CHECK(s.pending == Index { 1 });
    CHECK(std::isfinite(engine.score_feature(s, 1)));
    engine.step(s, 0.0);
    CHECK(s.decided());
}

TEST_CASE("importance selector follows the weight order")
{
    LinearModel m;
    m.weights = Eigen::RowVector3d(3.0, 1.0, 2.0);
    m.bias = Eigen::VectorXd::Zero(1);
    GaussianStats stats { Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity(), 0.0 };
    EngineConfig cfg;
    cfg.selector = Selector::Importance;
    Engine const engine(m, stats, cfg);
    CHECK(engine.importance() == std::vector<double> { 3.0, 1.0, 2.0 });
    auto const s = engine.run_auto(Eigen::Vector3d(0.1, 0.0, -0.05), FeaturePartition::from_sensitive(3, { 0, 1, 2 }));
    REQUIRE(s.revealed.size() == 3);
    CHECK(s.revealed[0].first == 0);
    CHECK(s.revealed[1].first == 2);
    CHECK(s.revealed[2].first == 1);
    CHECK(s.log[0].scores.empty());

    Rng rng(1);
    CHECK_THROWS_AS(Engine(Model(support::random_mlp(3, 4, 1, rng)), stats, cfg), UsageError);
}

TEST_CASE("F-Score prefers an informative feature over noise")
{
    LinearModel m;
    m.weights = Eigen::RowVector3d(0.5, 1.0, 0.0);
    m.bias = Eigen::VectorXd::Zero(1);
    GaussianStats stats { Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity() * 0.3, 0.0 };
    Engine const engine(m, stats, {});
    auto const s = engine.start(FeaturePartition::from_sensitive(3, { 1, 2 }), Eigen::Vector3d(0.1, 0.0, 0.0));
    REQUIRE_FALSE(s.decided());
    CHECK(s.pending == Index { 1 });
    CHECK(s.pending_scores[0].score > s.pending_scores[1].score);
    // revealing noise leaves the label law unchanged
    CHECK(-s.pending_scores[1].score == doctest::Approx(s.entropy).epsilon(1e-9));
}

TEST_CASE("random selector is reproducible and seed dependent")
{
    auto const engine = loan_engine(Selector::Random);
    std::set<Index> first;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto const a = engine.start(support::loan_partition(), support::loan_x(-0.9), seed);
        auto const b = engine.start(support::loan_partition(), support::loan_x(-0.9), seed);
        CHECK(a.pending == b.pending);
        first.insert(*a.pending);
    }
    CHECK(first.size() == 2);
}

TEST_CASE("pure protocol reproduces the full-feature prediction")
{
    Rng rng(77);
    for (auto sel : { Selector::FScore, Selector::Importance, Selector::Random }) {
        for (int trial = 0; trial < 40; ++trial) {
            auto const [m, stats] = random_problem(7, rng);
            EngineConfig cfg;
            cfg.selector = sel;
            cfg.mc_samples = 20;
            Engine const engine(m, stats, cfg);
            auto const x = support::random_vector(7, rng);
            auto const part = sample_partition(7, 5, static_cast<std::uint64_t>(trial));
            auto const s = engine.run_auto(x, part, static_cast<std::uint64_t>(trial));
            CHECK(s.decided());
            CHECK(s.label() == hard_predict(Model(m), x));
            CHECK(s.num_revealed() <= part.sensitive_idx.size());
            CHECK(s.log.size() == s.num_revealed());
            for (std::size_t k = 0; k + 1 < s.log.size(); ++k) {
                CHECK(s.log[k].confidence <= 1.0);
            }
        }
    }
}

TEST_CASE("sessions replay identically")
{
    Rng rng(5);
    auto const [m, stats] = random_problem(8, rng);
    EngineConfig cfg;
    cfg.delta = 0.1;
    cfg.mc_samples = 30;
    cfg.seed = 9;
    Engine const engine(m, stats, cfg);
    auto const x = support::random_vector(8, rng);
    auto const part = sample_partition(8, 6, 1);
    auto const a = engine.run_auto(x, part);
    auto const b = engine.run_auto(x, part);
    CHECK(a.revealed == b.revealed);
    CHECK(a.log == b.log);
    CHECK(session_to_json(a, {}).dump() == session_to_json(b, {}).dump());
}

TEST_CASE("preview leaves the session untouched and agrees with step")
{
    auto const engine = loan_engine(Selector::FScore, 0.05);
    auto s = engine.start(support::loan_partition(), support::loan_x(-0.9));
    REQUIRE_FALSE(s.decided());
    auto const before = session_to_json(s, {}).dump();
    auto const p = engine.preview(s, 1, 1.0);
    CHECK(session_to_json(s, {}).dump() == before);
    CHECK(engine.preview(s, 1, 1.0) == p);
    engine.step(s, 1.0);
    CHECK(s.status == p);
    CHECK_THROWS_AS((void)engine.preview(s, 1, 0.0), UsageError);
}

TEST_CASE("out-of-range answers are clipped and non-finite answers rejected")
{
    auto const engine = loan_engine();
    auto s = engine.start(support::loan_partition(), support::loan_x(-0.9));
    CHECK_THROWS_AS(engine.step(s, std::nan("")), UsageError);
    CHECK(s.revealed.empty());
    auto const& rec = engine.step(s, 4.0);
    CHECK(rec.clipped);
    CHECK(rec.value == 1.0);
    CHECK(s.x(1) == 1.0);
}

TEST_CASE("engine argument checks")
{
    CHECK_THROWS_AS(loan_engine(Selector::FScore, 0.5), UsageError);
    CHECK_THROWS_AS(parse_selector("greedy"), UsageError);
    CHECK(parse_selector("importance") == Selector::Importance);
    CHECK(selector_name(Selector::Random) == "random");
    auto const engine = loan_engine();
    CHECK_THROWS_AS((void)engine.start(support::loan_partition(), Eigen::Vector3d(std::nan(""), 0.0, 0.0)),
                    UsageError);
    CHECK_THROWS_AS((void)engine.start(support::loan_partition(), Eigen::Vector2d::Zero()), UsageError);
}

TEST_CASE("session json")
{
    auto const engine = loan_engine();
    auto s = engine.start(support::loan_partition(), support::loan_x(-0.9));
    engine.step(s, 1.0);
    auto const j = session_to_json(s, { "Job", "Loc", "Inc" });
    CHECK(j["public"] == nlohmann::ordered_json { "Job" });
    CHECK(j["revealed"][0]["feature"] == "Loc");
    CHECK(j["step_log"][0]["scores"].size() == 2);
    CHECK(j["status"] == "decided");
    CHECK(j["terminal"]["label"] == 0);
    CHECK(j["leakage"] == 0.5);
}
