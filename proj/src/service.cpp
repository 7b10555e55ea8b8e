#include "mindrel/service.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "httplib.h"
#include "mindrel/errors.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

using json = nlohmann::ordered_json;

auto bad_request(std::string const& message, std::string field = {}) -> ApiError
{
    return { 400, "invalid_argument", message, std::move(field) };
}

auto number_field(json const& body, char const* key) -> double
{
    if (!body.is_object() || !body.contains(key)) {
        throw bad_request(std::string("missing field '") + key + "'", key);
    }
    auto const& v = body.at(key);
    if (!v.is_number()) {
        throw bad_request(std::string("field '") + key + "' must be a number", key);
    }
    double const d = v.get<double>();
    if (!std::isfinite(d)) {
        throw bad_request(std::string("field '") + key + "' must be finite", key);
    }
    return d;
}

} // namespace

auto ApiError::to_json() const -> nlohmann::ordered_json
{
    json j;
    j["code"] = code_;
    j["message"] = what();
    if (!field_.empty()) {
        j["field"] = field_;
    }
    return j;
}

struct SessionService::Record {
    Record(Engine e, Session s, ServiceOptions::Clock::time_point t)
        : engine(std::move(e))
        , session(std::move(s))
        , last_activity(t)
    {
    }

    std::mutex mutex; // held by the single writer
    Engine engine;
    Session session;
    ServiceOptions::Clock::time_point last_activity; // guarded by the store mutex
};

SessionService::SessionService(Artifacts artifacts, ServiceOptions options)
    : artifacts_(std::move(artifacts))
    , options_(std::move(options))
    , id_salt_(std::random_device {}())
{
}

SessionService::~SessionService() = default;

auto SessionService::new_id() -> std::string
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(splitmix64(id_salt_ ^ splitmix64(++counter_))));
    return buf;
}

void SessionService::evict_expired()
{
    auto const now = options_.now();
    std::erase_if(sessions_, [&](auto const& kv) { return now - kv.second->last_activity > options_.ttl; });
}

auto SessionService::find(std::string const& id) -> std::shared_ptr<Record>
{
    std::lock_guard lock(mutex_);
    evict_expired();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw ApiError(404, "not_found", "no session with id '" + id + "'");
    }
    it->second->last_activity = options_.now();
    return it->second;
}

auto SessionService::size() -> Index
{
    std::lock_guard lock(mutex_);
    evict_expired();
    return sessions_.size();
}

auto SessionService::feature_index(json const& name, std::string const& field) const -> Index
{
    if (!name.is_string()) {
        throw bad_request("feature names must be strings", field);
    }
    auto const& names = artifacts_.feature_names();
    auto it = std::find(names.begin(), names.end(), name.get<std::string>());
    if (it == names.end()) {
        throw bad_request("unknown feature '" + name.get<std::string>() + "'", field);
    }
    return static_cast<Index>(it - names.begin());
}

auto SessionService::status_view(std::string const& id, Record const& r) const -> json
{
    auto const& s = r.session;
    auto const& names = artifacts_.feature_names();
    auto const& cfg = r.engine.config();
    json j;
    j["session_id"] = id;
    j["status"] = s.decided() ? "decided" : "awaiting_feature";
    j["requested_feature"] = s.pending ? json(names[*s.pending]) : json(nullptr);
    j["confidence"] = s.status.confidence;
    j["threshold"] = 1.0 - cfg.delta;
    j["delta"] = cfg.delta;
    j["selector"] = selector_name(cfg.selector);
    j["revealed_count"] = s.num_revealed();
    j["sensitive_count"] = s.partition.sensitive_idx.size();
    if (s.decided()) {
        auto const label = s.label();
        auto revealed = json::array();
        for (auto const& [f, v] : s.revealed) {
            revealed.push_back(names[f]);
        }
        j["decision"] = {
            { "label", label },
            { "label_name", static_cast<Index>(label) < artifacts_.class_names.size()
                                ? artifacts_.class_names[static_cast<Index>(label)]
                                : std::to_string(label) },
            { "confidence", s.terminal->confidence },
            { "features_revealed", revealed },
            { "leakage", s.leakage() },
        };
    } else {
        j["decision"] = nullptr;
    }
    return j;
}

auto SessionService::create(json const& body) -> json
{
    if (!body.is_object()) {
        throw bad_request("request body must be a JSON object");
    }
    auto const d = artifacts_.feature_names().size();
    auto const& norm = artifacts_.normalizer;

    EngineConfig cfg { 0.0, Selector::FScore, options_.mc_samples, options_.probe_samples, options_.seed };
    if (body.contains("delta")) {
        cfg.delta = number_field(body, "delta");
        if (!(cfg.delta >= 0.0 && cfg.delta < 0.5)) {
            throw bad_request("delta must lie in [0, 0.5)", "delta");
        }
    }
    if (body.contains("selector")) {
        if (!body.at("selector").is_string()) {
            throw bad_request("selector must be a string", "selector");
        }
        try {
            cfg.selector = parse_selector(body.at("selector").get<std::string>());
        } catch (UsageError const& e) {
            throw bad_request(e.what(), "selector");
        }
    }
    if (body.contains("seed")) {
        if (!body.at("seed").is_number_unsigned()) {
            throw bad_request("seed must be a nonnegative integer", "seed");
        }
        cfg.seed = body.at("seed").get<std::uint64_t>();
    }

    if (!body.contains("public") || !body.at("public").is_object()) {
        throw bad_request("'public' must map feature names to values", "public");
    }
    auto const& pub = body.at("public");
    IndexSet sensitive;
    if (body.contains("sensitive")) {
        if (!body.at("sensitive").is_array()) {
            throw bad_request("'sensitive' must be a list of feature names", "sensitive");
        }
        for (auto const& n : body.at("sensitive")) {
            sensitive.push_back(feature_index(n, "sensitive"));
        }
        std::sort(sensitive.begin(), sensitive.end());
        if (std::adjacent_find(sensitive.begin(), sensitive.end()) != sensitive.end()) {
            throw bad_request("a sensitive feature is listed twice", "sensitive");
        }
    } else {
        for (Index i = 0; i < d; ++i) {
            if (!pub.contains(norm.names[i])) {
                sensitive.push_back(i);
            }
        }
    }
    auto partition = FeaturePartition::from_sensitive(d, sensitive);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    json echoed = json::object();
    for (auto const& [name, value] : pub.items()) {
        auto const field = "public." + name;
        auto const i = feature_index(name, field);
        if (partition.is_sensitive(i)) {
            throw bad_request("'" + name + "' is sensitive and cannot be given up front", field);
        }
        if (!value.is_number() || !std::isfinite(value.get<double>())) {
            throw bad_request("value of '" + name + "' must be a finite number", field);
        }
        x(static_cast<Eigen::Index>(i)) = std::clamp(norm.normalize(i, value.get<double>()), -1.0, 1.0);
    }
    for (auto i : partition.public_idx) {
        if (!pub.contains(norm.names[i])) {
            throw bad_request("missing public feature '" + norm.names[i] + "'", "public." + norm.names[i]);
        }
        echoed[norm.names[i]] = x(static_cast<Eigen::Index>(i));
    }

    std::unique_ptr<Engine> engine;
    try {
        engine = std::make_unique<Engine>(artifacts_.model, artifacts_.stats, cfg, artifacts_.importance);
    } catch (UsageError const& e) {
        throw bad_request(e.what(), "selector");
    }
    auto session = engine->start(partition, x);
    auto record = std::make_shared<Record>(std::move(*engine), std::move(session), options_.now());

    std::string id;
    {
        std::lock_guard lock(mutex_);
        evict_expired();
        do {
            id = new_id();
        } while (sessions_.contains(id));
        sessions_.emplace(id, record);
    }
    auto view = status_view(id, *record);
    view["public_normalized"] = echoed;
    return view;
}

auto SessionService::submit(std::string const& id, json const& body) -> json
{
    auto rec = find(id);
    std::unique_lock lock(rec->mutex, std::try_to_lock);
    if (!lock.owns_lock()) {
        throw ApiError(409, "conflict", "another request is updating this session");
    }
    auto& s = rec->session;
    if (s.decided()) {
        throw ApiError(409, "already_decided", "session is already decided");
    }
    double const raw = number_field(body, "value");
    auto const j = *s.pending;
    auto const& names = artifacts_.feature_names();
    if (body.contains("feature") && feature_index(body.at("feature"), "feature") != j) {
        throw bad_request("the session asked for '" + names[j] + "'", "feature");
    }
    double const normalized = artifacts_.normalizer.normalize(j, raw);
    auto const& step = rec->engine.step(s, normalized);
    auto view = status_view(id, *rec);
    view["feature"] = names[j];
    view["normalized_value"] = step.value;
    view["clipped"] = step.clipped;
    if (step.clipped) {
        view["warning"] = "value " + std::to_string(normalized) + " lies outside [-1, 1] after normalization and was clipped";
    }
    return view;
}

auto SessionService::get(std::string const& id) -> json
{
    auto rec = find(id);
    std::lock_guard lock(rec->mutex);
    auto view = status_view(id, *rec);
    auto const full = session_to_json(rec->session, artifacts_.feature_names());
    for (auto const& [k, v] : full.items()) {
        if (!view.contains(k)) {
            view[k] = v;
        }
    }
    return view;
}

auto SessionService::whatif(std::string const& id, json const& body) -> json
{
    auto rec = find(id);
    std::lock_guard lock(rec->mutex);
    auto const& s = rec->session;
    if (!body.is_object() || !body.contains("feature")) {
        throw bad_request("missing field 'feature'", "feature");
    }
    auto const j = feature_index(body.at("feature"), "feature");
    if (!std::binary_search(s.unrevealed.begin(), s.unrevealed.end(), j)) {
        throw bad_request("'" + artifacts_.feature_names()[j] + "' is not an unrevealed sensitive feature", "feature");
    }
    if (s.decided()) {
        throw ApiError(409, "already_decided", "session is already decided");
    }
    double const raw = number_field(body, "value");
    double const normalized = std::clamp(artifacts_.normalizer.normalize(j, raw), -1.0, 1.0);
    auto const r = rec->engine.preview(s, j, normalized);
    json out;
    out["feature"] = artifacts_.feature_names()[j];
    out["normalized_value"] = normalized;
    out["confidence_after"] = r.confidence;
    out["would_decide"] = r.is_core;
    out["label_if_decided"] = r.label ? json(*r.label) : json(nullptr);
    return out;
}

auto SessionService::health() -> json
{
    json j;
    j["status"] = "ok";
    j["service"] = "mindrel";
    j["model"] = {
        { "family", family_name(artifacts_.model) },
        { "features", num_features(artifacts_.model) },
        { "classes", num_classes(artifacts_.model) },
        { "class_names", artifacts_.class_names },
        { "feature_names", artifacts_.feature_names() },
    };
    j["sessions"] = size();
    return j;
}

struct HttpFrontend::Impl {
    explicit Impl(SessionService& s)
        : service(s)
    {
    }

    SessionService& service;
    httplib::Server server;
};

namespace {

void reply(httplib::Response& res, int status, json const& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& handler)
{
    try {
        reply(res, 200, handler());
    } catch (ApiError const& e) {
        reply(res, e.status(), e.to_json());
    } catch (UsageError const& e) {
        reply(res, 400, ApiError(400, "invalid_argument", e.what()).to_json());
    } catch (DataError const& e) {
        reply(res, 400, ApiError(400, "invalid_data", e.what()).to_json());
    } catch (NumericalError const& e) {
        reply(res, 500, ApiError(500, "numerical_failure", e.what()).to_json());
    } catch (std::exception const& e) {
        reply(res, 500, ApiError(500, "internal", e.what()).to_json());
    }
}

auto parse_body(httplib::Request const& req) -> json
{
    if (req.body.empty()) {
        return json::object();
    }
    try {
        return json::parse(req.body);
    } catch (json::exception const&) {
        throw ApiError(400, "invalid_json", "request body is not valid JSON");
    }
}

} // namespace

HttpFrontend::HttpFrontend(SessionService& service)
    : impl_(std::make_unique<Impl>(service))
{
    auto& svc = impl_->service;
    auto& srv = impl_->server;
    srv.Post("/sessions", [&svc](httplib::Request const& req, httplib::Response& res) {
        guarded(res, [&] { return svc.create(parse_body(req)); });
    });
    srv.Post(R"(/sessions/([^/]+)/feature)", [&svc](httplib::Request const& req, httplib::Response& res) {
        guarded(res, [&] { return svc.submit(req.matches[1], parse_body(req)); });
    });
    srv.Post(R"(/sessions/([^/]+)/whatif)", [&svc](httplib::Request const& req, httplib::Response& res) {
        guarded(res, [&] { return svc.whatif(req.matches[1], parse_body(req)); });
    });
    srv.Get(R"(/sessions/([^/]+))", [&svc](httplib::Request const& req, httplib::Response& res) {
        guarded(res, [&] { return svc.get(req.matches[1]); });
    });
    srv.Get("/health", [&svc](httplib::Request const&, httplib::Response& res) {
        guarded(res, [&] { return svc.health(); });
    });
}

HttpFrontend::~HttpFrontend() = default;

auto HttpFrontend::bind(std::string const& host, int port) -> int
{
    if (port == 0) {
        return impl_->server.bind_to_any_port(host);
    }
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

auto HttpFrontend::listen() -> bool
{
    return impl_->server.listen_after_bind();
}

void HttpFrontend::stop()
{
    impl_->server.stop();
}

void HttpFrontend::wait_until_ready() const
{
    impl_->server.wait_until_ready();
}

} // namespace mindrel
