#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "json.hpp"
#include "mindrel/artifacts.hpp"
#include "mindrel/engine.hpp"

namespace mindrel {

// Error reported to API clients as {code, message, field?} with an HTTP status.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, std::string const& message, std::string field = {})
        : std::runtime_error(message)
        , status_(status)
        , code_(std::move(code))
        , field_(std::move(field))
    {
    }

    [[nodiscard]] auto status() const noexcept -> int { return status_; }
    [[nodiscard]] auto code() const noexcept -> std::string const& { return code_; }
    [[nodiscard]] auto field() const noexcept -> std::string const& { return field_; }
    [[nodiscard]] auto to_json() const -> nlohmann::ordered_json;

private:
    int status_;
    std::string code_;
    std::string field_;
};

struct ServiceOptions {
    using Clock = std::chrono::steady_clock;
    std::chrono::seconds ttl { 30 * 60 };
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
    Index mc_samples = kDefaultMcSamples;
    Index probe_samples = kDefaultProbeSamples;
    std::uint64_t seed = 0; // base seed of every session
};

// In-memory store of disclosure sessions over one set of artifacts.
// Mutations of a session are serialized; a second concurrent mutation is
// refused with a conflict error.
class SessionService {
public:
    explicit SessionService(Artifacts artifacts, ServiceOptions options = {});
    ~SessionService();
    SessionService(SessionService const&) = delete;
    auto operator=(SessionService const&) -> SessionService& = delete;

    // {public: {name: raw value}, sensitive?: [names], delta?: r, selector?: s}
    auto create(nlohmann::ordered_json const& body) -> nlohmann::ordered_json;
    // {value: raw value, feature?: name (must match the request)}
    auto submit(std::string const& id, nlohmann::ordered_json const& body) -> nlohmann::ordered_json;
    auto get(std::string const& id) -> nlohmann::ordered_json;
    // {feature: name, value: raw value}; read-only
    auto whatif(std::string const& id, nlohmann::ordered_json const& body) -> nlohmann::ordered_json;
    auto health() -> nlohmann::ordered_json;

    [[nodiscard]] auto artifacts() const -> Artifacts const& { return artifacts_; }
    [[nodiscard]] auto size() -> Index;

private:
    struct Record;

    auto find(std::string const& id) -> std::shared_ptr<Record>;
    void evict_expired();
    auto status_view(std::string const& id, Record const& r) const -> nlohmann::ordered_json;
    auto feature_index(nlohmann::ordered_json const& name, std::string const& field) const -> Index;
    auto new_id() -> std::string;

    Artifacts artifacts_;
    ServiceOptions options_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Record>> sessions_;
    std::uint64_t counter_ = 0;
    std::uint64_t id_salt_;
};

// HTTP front end. Routes:
//   POST /sessions, POST /sessions/{id}/feature, GET /sessions/{id},
//   POST /sessions/{id}/whatif, GET /health
class HttpFrontend {
public:
    explicit HttpFrontend(SessionService& service);
    ~HttpFrontend();
    HttpFrontend(HttpFrontend const&) = delete;
    auto operator=(HttpFrontend const&) -> HttpFrontend& = delete;

    // Binds host:port (port 0 picks a free port) and returns the bound port.
    auto bind(std::string const& host, int port) -> int;
    // Serves until stop() is called.
    auto listen() -> bool;
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace mindrel
