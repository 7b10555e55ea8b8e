#include "mindrel/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mindrel/errors.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

enum : std::uint64_t {
    kSplitStream = 1,
    kPartitionStream = 3,
    kSessionStream = 4,
    kOptimalStream = 5,
};

auto mean_of(std::vector<double> const& v) -> double
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// standard error of the mean (sample standard deviation / sqrt(n))
auto se_of(std::vector<double> const& v) -> double
{
    if (v.size() < 2) {
        return 0.0;
    }
    double const m = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    auto const n = static_cast<double>(v.size());
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

auto make_cell(Index size, std::string method, std::optional<Selector> selector, std::optional<double> delta)
    -> CellResult
{
    CellResult c;
    c.sensitive_size = size;
    c.method = std::move(method);
    c.selector = selector;
    c.delta = delta;
    return c;
}

void finish(CellResult& cell)
{
    cell.mean_accuracy = mean_of(cell.accuracy);
    cell.se_accuracy = se_of(cell.accuracy);
    cell.mean_leakage = mean_of(cell.leakage);
    cell.se_leakage = se_of(cell.leakage);
}

void record(CellResult& cell, std::vector<SampleOutcome> outcomes, std::vector<int> const& truth)
{
    std::vector<int> labels;
    labels.reserve(outcomes.size());
    for (auto const& o : outcomes) {
        labels.push_back(o.label);
        ++cell.histogram[o.core_size];
    }
    cell.accuracy.push_back(accuracy(labels, truth));
    cell.leakage.push_back(data_leakage(outcomes, cell.sensitive_size));
    cell.samples.push_back(std::move(outcomes));
}

auto delta_json(std::optional<double> d) -> nlohmann::ordered_json
{
    return d ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr);
}

auto csv_number(double v) -> std::string
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

auto train_config_json(TrainConfig const& c) -> nlohmann::ordered_json
{
    return { { "lr", c.lr }, { "epochs", c.epochs }, { "batch", c.batch }, { "seed", c.seed } };
}

} // namespace

auto ExperimentSpec::from_json(nlohmann::ordered_json const& j, std::filesystem::path const& base_dir)
    -> ExperimentSpec
{
    try {
        ExperimentSpec s;
        s.name = j.value("name", s.name);
        auto const& ds = j.at("dataset");
        std::filesystem::path path = ds.is_string() ? ds.get<std::string>() : ds.at("path").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) {
            path = base_dir / path;
        }
        s.dataset = path;
        if (ds.is_object()) {
            s.label = ds.value("label", s.label);
        }
        s.label = j.value("label", s.label);
        s.model = j.value("model", s.model);
        if (s.model != "logistic" && s.model != "mlp") {
            throw UsageError("unknown model family '" + s.model + "' (expected logistic or mlp)");
        }
        s.sensitive_sizes = j.value("sensitive_sizes", s.sensitive_sizes);
        s.deltas = j.value("deltas", s.deltas);
        if (j.contains("selectors")) {
            s.selectors.clear();
            for (auto const& name : j.at("selectors")) {
                s.selectors.push_back(parse_selector(name.get<std::string>()));
            }
        }
        s.repetitions = j.value("repetitions", s.repetitions);
        s.seed = j.value("seed", s.seed);
        s.train_fraction = j.value("train_fraction", s.train_fraction);
        s.test_cap = j.value("test_cap", s.test_cap);
        s.include_optimal = j.value("include_optimal", s.include_optimal);
        s.mc_samples = j.value("mc_samples", s.mc_samples);
        s.probe_samples = j.value("probe_samples", s.probe_samples);
        s.ridge = j.value("ridge", s.ridge);
        if (j.contains("train") && !j.at("train").is_null()) {
            auto const& t = j.at("train");
            TrainConfig c = s.model == "mlp" ? kMlpDefaults : kLogisticDefaults;
            c.lr = t.value("lr", c.lr);
            c.epochs = t.value("epochs", c.epochs);
            c.batch = t.value("batch", c.batch);
            c.seed = t.value("seed", s.seed);
            s.train = c;
        }
        if (s.repetitions < 1) {
            throw UsageError("repetitions must be at least 1");
        }
        for (double d : s.deltas) {
            check_delta(d);
        }
        return s;
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, std::string("experiment spec: ") + e.what());
    }
}

auto ExperimentSpec::load(std::filesystem::path const& path) -> ExperimentSpec
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataErrorKind::MissingFile, "cannot open experiment spec " + path.string());
    }
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, "experiment spec " + path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

auto ExperimentSpec::to_json() const -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["name"] = name;
    j["dataset"] = { { "path", dataset.filename().string() }, { "label", label } };
    j["model"] = model;
    j["sensitive_sizes"] = sensitive_sizes;
    j["deltas"] = deltas;
    auto sel = nlohmann::ordered_json::array();
    for (auto s : selectors) {
        sel.push_back(selector_name(s));
    }
    j["selectors"] = sel;
    j["repetitions"] = repetitions;
    j["seed"] = seed;
    j["train_fraction"] = train_fraction;
    j["test_cap"] = test_cap;
    j["include_optimal"] = include_optimal;
    j["mc_samples"] = mc_samples;
    j["probe_samples"] = probe_samples;
    j["train"] = train ? train_config_json(*train) : nlohmann::ordered_json(nullptr);
    j["ridge"] = ridge;
    return j;
}

auto CellResult::key() const -> std::string
{
    std::string k = std::to_string(sensitive_size) + "/" + method;
    if (selector) {
        k += "/" + selector_name(*selector);
    }
    if (delta) {
        k += "/" + csv_number(*delta);
    }
    return k;
}

auto ExperimentResult::find(Index sensitive_size, std::string const& method, std::optional<Selector> selector,
                            std::optional<double> delta) const -> CellResult const&
{
    for (auto const& c : cells) {
        if (c.sensitive_size == sensitive_size && c.method == method && c.selector == selector && c.delta == delta) {
            return c;
        }
    }
    throw UsageError("no result cell for |S|=" + std::to_string(sensitive_size) + " method " + method);
}

auto ExperimentResult::to_json() const -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["spec"] = spec.to_json();
    j["features"] = feature_names.size();
    j["train_rows"] = train_rows;
    j["test_rows"] = test_rows;
    j["model_test_accuracy"] = model_test_accuracy;
    auto cs = nlohmann::ordered_json::array();
    for (auto const& c : cells) {
        nlohmann::ordered_json cj;
        cj["sensitive_size"] = c.sensitive_size;
        cj["method"] = c.method;
        cj["selector"] = c.selector ? nlohmann::ordered_json(selector_name(*c.selector)) : nlohmann::ordered_json(nullptr);
        cj["delta"] = delta_json(c.delta);
        cj["mean_accuracy"] = c.mean_accuracy;
        cj["se_accuracy"] = c.se_accuracy;
        cj["mean_leakage"] = c.mean_leakage;
        cj["se_leakage"] = c.se_leakage;
        cj["accuracy"] = c.accuracy;
        cj["leakage"] = c.leakage;
        auto hist = nlohmann::ordered_json::object();
        for (auto const& [size, count] : c.histogram) {
            hist[std::to_string(size)] = count;
        }
        cj["core_size_histogram"] = hist;
        cs.push_back(cj);
    }
    j["cells"] = cs;
    return j;
}

auto data_leakage(std::vector<SampleOutcome> const& outcomes, Index sensitive_size) -> double
{
    if (outcomes.empty()) {
        throw UsageError("leakage of an empty set of sessions is undefined");
    }
    if (sensitive_size == 0) {
        return 0.0;
    }
    double total = 0.0;
    for (auto const& o : outcomes) {
        total += static_cast<double>(o.core_size) / static_cast<double>(sensitive_size);
    }
    return total / static_cast<double>(outcomes.size());
}

auto data_leakage(std::vector<Session> const& sessions) -> double
{
    if (sessions.empty()) {
        throw UsageError("leakage of an empty set of sessions is undefined");
    }
    double total = 0.0;
    for (auto const& s : sessions) {
        if (!s.decided()) {
            throw UsageError("leakage needs decided sessions");
        }
        total += s.leakage();
    }
    return total / static_cast<double>(sessions.size());
}

auto accuracy(std::vector<int> const& predicted, std::vector<int> const& truth) -> double
{
    if (predicted.empty()) {
        throw UsageError("accuracy of an empty set of predictions is undefined");
    }
    if (predicted.size() != truth.size()) {
        throw UsageError("prediction and ground-truth lengths differ");
    }
    Index hits = 0;
    for (Index i = 0; i < predicted.size(); ++i) {
        hits += predicted[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

auto accuracy(std::vector<Session> const& sessions, std::vector<int> const& truth) -> double
{
    std::vector<int> labels;
    labels.reserve(sessions.size());
    for (auto const& s : sessions) {
        labels.push_back(s.label());
    }
    return accuracy(labels, truth);
}

auto histogram_core_sizes(std::vector<Session> const& sessions) -> std::map<Index, Index>
{
    std::map<Index, Index> h;
    for (auto const& s : sessions) {
        if (!s.decided()) {
            throw UsageError("histogram needs decided sessions");
        }
        ++h[s.num_revealed()];
    }
    return h;
}

auto cumulative(std::map<Index, Index> const& histogram) -> std::vector<Index>
{
    if (histogram.empty()) {
        return {};
    }
    std::vector<Index> out(histogram.rbegin()->first + 1, 0);
    for (auto const& [size, count] : histogram) {
        out[size] += count;
    }
    std::partial_sum(out.begin(), out.end(), out.begin());
    return out;
}

auto run_experiment(ExperimentSpec const& spec) -> ExperimentResult
{
    auto const t0 = std::chrono::steady_clock::now();
    if (spec.repetitions < 1) {
        throw UsageError("repetitions must be at least 1");
    }
    for (double d : spec.deltas) {
        check_delta(d);
    }
    for (auto s : spec.sensitive_sizes) {
        if (spec.include_optimal && s > kOptimalBudget) {
            throw UsageError("the optimal baseline is limited to |S| <= " + std::to_string(kOptimalBudget)
                             + " (requested " + std::to_string(s) + ")");
        }
    }

    auto const raw = load_csv(spec.dataset, spec.label);
    auto [train_raw, test_raw] = split(raw, spec.train_fraction, derive_seed(spec.seed, { kSplitStream }));
    auto const norm = fit_normalizer(train_raw);
    auto const train = apply_normalizer(norm, train_raw);
    auto test = apply_normalizer(norm, test_raw);
    if (spec.test_cap > 0 && test.rows() > spec.test_cap) {
        std::vector<Index> head(spec.test_cap);
        std::iota(head.begin(), head.end(), Index { 0 });
        test = take_rows(test, head);
    }
    if (test.rows() == 0) {
        throw DataError(DataErrorKind::EmptyDataset, "test split is empty");
    }
    auto const d = train.cols();
    for (auto s : spec.sensitive_sizes) {
        if (s > d) {
            throw UsageError("|S| = " + std::to_string(s) + " exceeds the " + std::to_string(d) + " features");
        }
    }

    bool const mlp = spec.model == "mlp";
    TrainConfig cfg = spec.train.value_or(mlp ? kMlpDefaults : kLogisticDefaults);
    if (!spec.train) {
        cfg.seed = spec.seed;
    }
    Model model = mlp ? Model(train_mlp(train, cfg)) : Model(train_logistic(train, cfg));
    std::vector<double> importance;
    if (mlp && std::find(spec.selectors.begin(), spec.selectors.end(), Selector::Importance) != spec.selectors.end()) {
        auto lcfg = kLogisticDefaults;
        lcfg.seed = cfg.seed;
        importance = importance_from(train_logistic(train, lcfg));
    }
    auto const stats = estimate(train, spec.ridge);
    auto const full = hard_predict_rows(model, test.features);

    ExperimentResult result;
    result.spec = spec;
    result.feature_names = train.feature_names;
    result.train_rows = train.rows();
    result.test_rows = test.rows();
    result.model_test_accuracy = accuracy(full, test.labels);

    struct Variant {
        double delta;
        Selector selector;
        Engine engine;
    };
    std::vector<Variant> variants;
    for (double delta : spec.deltas) {
        for (auto sel : spec.selectors) {
            EngineConfig ec { delta, sel, spec.mc_samples, spec.probe_samples, spec.seed };
            variants.push_back({ delta, sel, Engine(model, stats, ec, importance) });
        }
    }

    auto const n = test.rows();
    for (auto s : spec.sensitive_sizes) {
        auto all = make_cell(s, "all_features", std::nullopt, std::nullopt);
        std::vector<CellResult> mind;
        for (auto const& v : variants) {
            mind.push_back(make_cell(s, "mindrel", v.selector, v.delta));
        }
        std::vector<CellResult> opt;
        if (spec.include_optimal) {
            for (double delta : spec.deltas) {
                opt.push_back(make_cell(s, "optimal", std::nullopt, delta));
            }
        }
        for (Index r = 0; r < spec.repetitions; ++r) {
            auto const partition = sample_partition(d, s, derive_seed(spec.seed, { kPartitionStream, s, r }));
            std::vector<SampleOutcome> base(n);
            for (Index i = 0; i < n; ++i) {
                base[i] = { s, full[i] };
            }
            record(all, std::move(base), test.labels);
            for (Index v = 0; v < variants.size(); ++v) {
                std::vector<SampleOutcome> out(n);
                for (Index i = 0; i < n; ++i) {
                    Eigen::VectorXd const x = test.features.row(static_cast<Eigen::Index>(i)).transpose();
                    auto const session
                        = variants[v].engine.run_auto(x, partition, derive_seed(spec.seed, { kSessionStream, s, r, i }));
                    out[i] = { session.num_revealed(), session.label() };
                }
                record(mind[v], std::move(out), test.labels);
            }
            for (auto& cell : opt) {
                std::vector<SampleOutcome> out(n);
                for (Index i = 0; i < n; ++i) {
                    Eigen::VectorXd const x = test.features.row(static_cast<Eigen::Index>(i)).transpose();
                    CoreTestOptions const o { *cell.delta, spec.probe_samples, spec.mc_samples,
                                              derive_seed(spec.seed, { kOptimalStream, s, r, i }) };
                    auto const best = optimal_min_core(model, stats, partition, x, o);
                    out[i] = { best.core.size(), best.label };
                }
                record(cell, std::move(out), test.labels);
            }
        }
        finish(all);
        result.cells.push_back(std::move(all));
        for (auto& c : mind) {
            finish(c);
            result.cells.push_back(std::move(c));
        }
        for (auto& c : opt) {
            finish(c);
            result.cells.push_back(std::move(c));
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

void write_results(ExperimentResult const& result, std::filesystem::path const& dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&dir](char const* name) {
        std::ofstream out(dir / name);
        if (!out) {
            throw DataError(DataErrorKind::MissingFile, "cannot write " + (dir / name).string());
        }
        return out;
    };
    {
        auto out = open("results.json");
        out << result.to_json().dump(2) << '\n';
    }
    {
        auto out = open("results.csv");
        out << "sensitive_size,method,selector,delta,repetitions,mean_accuracy,se_accuracy,mean_leakage,se_leakage\n";
        for (auto const& c : result.cells) {
            out << c.sensitive_size << ',' << c.method << ',' << (c.selector ? selector_name(*c.selector) : "") << ','
                << (c.delta ? csv_number(*c.delta) : "") << ',' << c.accuracy.size() << ','
                << csv_number(c.mean_accuracy) << ',' << csv_number(c.se_accuracy) << ','
                << csv_number(c.mean_leakage) << ',' << csv_number(c.se_leakage) << '\n';
        }
    }
    {
        auto out = open("core_sizes.csv");
        out << "sensitive_size,method,selector,delta,core_size,count,cumulative\n";
        for (auto const& c : result.cells) {
            auto const cum = cumulative(c.histogram);
            for (Index size = 0; size < cum.size(); ++size) {
                auto const it = c.histogram.find(size);
                out << c.sensitive_size << ',' << c.method << ',' << (c.selector ? selector_name(*c.selector) : "")
                    << ',' << (c.delta ? csv_number(*c.delta) : "") << ',' << size << ','
                    << (it == c.histogram.end() ? 0 : it->second) << ',' << cum[size] << '\n';
            }
        }
    }
    {
        auto out = open("timing.json");
        nlohmann::ordered_json t;
        t["wall_seconds"] = result.wall_seconds;
        out << t.dump(2) << '\n';
    }
}

} // namespace mindrel
