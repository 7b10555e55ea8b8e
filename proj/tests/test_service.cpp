#include <atomic>
#include <thread>

#include "doctest.h"
#include "mindrel/service.hpp"
#include "support.hpp"
// after Eigen: resolv.h defines a _res macro
#include "httplib.h"

using namespace mindrel;
using json = nlohmann::ordered_json;

namespace {

struct FakeClock {
    std::shared_ptr<ServiceOptions::Clock::time_point> now
        = std::make_shared<ServiceOptions::Clock::time_point>(ServiceOptions::Clock::time_point {});

    void advance(std::chrono::seconds s) const { *now += s; }
};

auto make_service(FakeClock const& clock = {}) -> std::unique_ptr<SessionService>
{
    ServiceOptions opts;
    opts.now = [clock] { return *clock.now; };
    opts.probe_samples = 2000;
    return std::make_unique<SessionService>(support::loan_artifacts(), opts);
}

auto api_code(auto&& fn) -> std::pair<int, std::string>
{
    try {
        fn();
    } catch (ApiError const& e) {
        return { e.status(), e.code() };
    }
    return { 200, "" };
}

} // namespace

TEST_CASE("user B over the session API")
{
    auto svc = make_service();
    auto const created = svc->create(json::parse(R"({"public": {"Job": -0.9}})"));
    auto const id = created["session_id"].get<std::string>();
    CHECK(id.size() == 16);
    CHECK(created["status"] == "awaiting_feature");
    CHECK(created["requested_feature"] == "Loc");
    CHECK(created["sensitive_count"] == 2);
    CHECK(created["threshold"] == 1.0);
    CHECK(created["confidence"].get<double>() == doctest::Approx(0.8985).epsilon(1e-3));
    CHECK(created["public_normalized"]["Job"] == -0.9);
    CHECK(created["decision"].is_null());

    auto const what = svc->whatif(id, json::parse(R"({"feature": "Loc", "value": 1.0})"));
    CHECK(what["would_decide"] == true);
    CHECK(what["label_if_decided"] == 0);
    CHECK(svc->get(id)["revealed_count"] == 0);

    auto const after = svc->submit(id, json::parse(R"({"feature": "Loc", "value": 1.0})"));
    CHECK(after["status"] == "decided");
    CHECK(after["feature"] == "Loc");
    CHECK(after["clipped"] == false);
    CHECK(after["decision"]["label"] == 0);
    CHECK(after["decision"]["label_name"] == "denied");
    CHECK(after["decision"]["features_revealed"] == json { "Loc" });
    CHECK(after["decision"]["leakage"] == 0.5);

    auto const view = svc->get(id);
    CHECK(view["revealed"][0]["feature"] == "Loc");
    CHECK(view["step_log"].size() == 1);

    CHECK(api_code([&] { svc->submit(id, json::parse(R"({"value": 0.0})")); })
          == std::pair<int, std::string> { 409, "already_decided" });
    CHECK(svc->health()["sessions"] == 1);
    CHECK(svc->health()["model"]["feature_names"][1] == "Loc");
}

TEST_CASE("user A is decided on creation")
{
    auto svc = make_service();
    auto const created = svc->create(json::parse(R"({"public": {"Job": 1.0}, "sensitive": ["Loc", "Inc"]})"));
    CHECK(created["status"] == "decided");
    CHECK(created["decision"]["label_name"] == "approved");
    CHECK(created["requested_feature"].is_null());
}

TEST_CASE("request validation")
{
    auto svc = make_service();
    auto const error_of = [&](char const* body) {
        try {
            svc->create(json::parse(body));
        } catch (ApiError const& e) {
            return e.to_json();
        }
        return json();
    };
    auto const bad_delta = error_of(R"({"public": {"Job": 0.1}, "delta": 0.7})");
    CHECK(bad_delta["code"] == "invalid_argument");
    CHECK(bad_delta["field"] == "delta");
    CHECK(error_of(R"({"public": {"Age": 3}})")["field"] == "public.Age");
    CHECK(error_of(R"({"public": {"Job": "high"}})")["field"] == "public.Job");
    CHECK(error_of(R"({"public": {}, "sensitive": ["Loc"]})")["field"] == "public.Job");
    CHECK(error_of(R"({"public": {"Job": 0.1}, "selector": "best"})")["field"] == "selector");
    CHECK(error_of(R"([1, 2])")["code"] == "invalid_argument");

    CHECK(api_code([&] { svc->get("0000000000000000"); }) == std::pair<int, std::string> { 404, "not_found" });

    auto const id = svc->create(json::parse(R"({"public": {"Job": -0.9}})"))["session_id"].get<std::string>();
    CHECK(api_code([&] { svc->submit(id, json::parse(R"({"feature": "Inc", "value": 0.0})")); }).first == 400);
    CHECK(api_code([&] { svc->submit(id, json::parse(R"({"value": "x"})")); }).first == 400);
    CHECK(api_code([&] { svc->whatif(id, json::parse(R"({"feature": "Job", "value": 0.0})")); }).first == 400);
    CHECK(svc->get(id)["revealed_count"] == 0);
}

TEST_CASE("out-of-range values are clipped with a warning")
{
    auto svc = make_service();
    auto const id = svc->create(json::parse(R"({"public": {"Job": -0.9}, "delta": 0.05})"))["session_id"]
                        .get<std::string>();
    auto const r = svc->submit(id, json::parse(R"({"value": 2.5})"));
    CHECK(r["clipped"] == true);
    CHECK(r["normalized_value"] == 1.0);
    CHECK(r.contains("warning"));
    CHECK(r["delta"] == 0.05);
}

TEST_CASE("sessions expire after the idle timeout")
{
    FakeClock clock;
    auto svc = make_service(clock);
    auto const id = svc->create(json::parse(R"({"public": {"Job": -0.9}})"))["session_id"].get<std::string>();
    clock.advance(std::chrono::minutes(29));
    CHECK(svc->get(id)["session_id"] == id);
    clock.advance(std::chrono::minutes(29));
    CHECK(svc->get(id)["session_id"] == id);
    clock.advance(std::chrono::minutes(31));
    CHECK(api_code([&] { svc->get(id); }).first == 404);
    CHECK(svc->size() == 0);
}

TEST_CASE("concurrent answers to one session apply exactly once")
{
    auto svc = make_service();
    for (int round = 0; round < 20; ++round) {
        auto const id = svc->create(json::parse(R"({"public": {"Job": -0.9}})"))["session_id"].get<std::string>();
        std::atomic<int> ok { 0 };
        std::atomic<int> refused { 0 };
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&] {
                auto const [status, code] = api_code([&] { svc->submit(id, json::parse(R"({"value": 1.0})")); });
                if (status == 200) {
                    ++ok;
                } else if (status == 409 && (code == "conflict" || code == "already_decided")) {
                    ++refused;
                }
            });
        }
        for (auto& t : threads) {
            t.join();
        }
        CHECK(ok == 1);
        CHECK(refused == 7);
        CHECK(svc->get(id)["revealed_count"] == 1);
    }
}

TEST_CASE("HTTP round trip")
{
    auto svc = make_service();
    HttpFrontend http(*svc);
    auto const port = http.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread server([&] { http.listen(); });
    http.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["status"] == "ok");

    auto created = client.Post("/sessions", R"({"public": {"Job": -0.9}})", "application/json");
    REQUIRE(created);
    CHECK(created->status == 200);
    auto const id = json::parse(created->body)["session_id"].get<std::string>();

    auto what = client.Post("/sessions/" + id + "/whatif", R"({"feature": "Loc", "value": -1})", "application/json");
    REQUIRE(what);
    CHECK(json::parse(what->body)["would_decide"] == false);

    auto step = client.Post("/sessions/" + id + "/feature", R"({"value": 1.0})", "application/json");
    REQUIRE(step);
    CHECK(step->status == 200);
    CHECK(json::parse(step->body)["decision"]["label"] == 0);

    auto got = client.Get("/sessions/" + id);
    REQUIRE(got);
    CHECK(json::parse(got->body)["status"] == "decided");

    auto again = client.Post("/sessions/" + id + "/feature", R"({"value": 1.0})", "application/json");
    REQUIRE(again);
    CHECK(again->status == 409);

    auto missing = client.Get("/sessions/ffffffffffffffff");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["code"] == "not_found");

    auto broken = client.Post("/sessions", "{not json", "application/json");
    REQUIRE(broken);
    CHECK(broken->status == 400);
    CHECK(json::parse(broken->body)["code"] == "invalid_json");

    auto bad = client.Post("/sessions", R"({"public": {"Job": 0}, "delta": 0.7})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["field"] == "delta");

    http.stop();
    server.join();
}

TEST_CASE("service sessions reproduce the automatic run")
{
    auto svc = make_service();
    auto const a = support::loan_artifacts();
    Engine const engine(a.model, a.stats, {});
    Rng rng(6);
    for (int trial = 0; trial < 30; ++trial) {
        Eigen::VectorXd const x = support::random_vector(3, rng);
        auto const expected = session_to_json(engine.run_auto(x, support::loan_partition()), a.feature_names());
        json body;
        body["public"]["Job"] = x(0);
        auto view = svc->create(body);
        auto const id = view["session_id"].get<std::string>();
        while (view["status"] == "awaiting_feature") {
            auto const f = a.normalizer.index_of(view["requested_feature"].get<std::string>());
            view = svc->submit(id, { { "value", x(static_cast<Eigen::Index>(f)) } });
        }
        auto const got = svc->get(id);
        CHECK(got["step_log"].dump() == expected["step_log"].dump());
        CHECK(got["terminal"].dump() == expected["terminal"].dump());
    }
}
