// mindrel command-line tool: synth, train, evaluate, audit, interactive, serve.

#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "mindrel/artifacts.hpp"
#include "mindrel/errors.hpp"
#include "mindrel/experiment.hpp"
#include "mindrel/interactive.hpp"
#include "mindrel/random.hpp"
#include "mindrel/service.hpp"
#include "mindrel/synthetic.hpp"

namespace {

using namespace mindrel;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct EngineArgs {
    double delta = 0.0;
    std::string selector = "fscore";
    std::uint64_t seed = 0;
    Index mc_samples = kDefaultMcSamples;
    Index probe_samples = kDefaultProbeSamples;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--delta", delta, "failure probability in [0, 0.5)")->capture_default_str();
        cmd.add_option("--selector", selector, "fscore, importance or random")->capture_default_str();
        cmd.add_option("--seed", seed, "random seed")->capture_default_str();
        cmd.add_option("--mc-samples", mc_samples, "draws per score estimate")->capture_default_str();
        cmd.add_option("--probe-samples", probe_samples, "probes of the sampled core test")->capture_default_str();
    }

    [[nodiscard]] auto config() const -> EngineConfig
    {
        return { delta, parse_selector(selector), mc_samples, probe_samples, seed };
    }
};

auto make_engine(Artifacts const& a, EngineArgs const& args) -> Engine
{
    return { a.model, a.stats, args.config(), a.importance };
}

auto parse_bind(std::string const& bind) -> std::pair<std::string, int>
{
    auto const colon = bind.rfind(':');
    if (colon == std::string::npos) {
        throw UsageError("--bind expects host:port, got '" + bind + "'");
    }
    try {
        return { bind.substr(0, colon), std::stoi(bind.substr(colon + 1)) };
    } catch (std::exception const&) {
        throw UsageError("bad port in --bind '" + bind + "'");
    }
}

void print_summary(ExperimentResult const& r, std::ostream& out)
{
    out << "model test accuracy " << std::fixed << std::setprecision(4) << r.model_test_accuracy << " on "
        << r.test_rows << " test rows\n";
    out << std::left << std::setw(6) << "|S|" << std::setw(14) << "method" << std::setw(12) << "selector"
        << std::setw(8) << "delta" << std::setw(18) << "accuracy" << "leakage\n";
    for (auto const& c : r.cells) {
        out << std::setw(6) << c.sensitive_size << std::setw(14) << c.method << std::setw(12)
            << (c.selector ? selector_name(*c.selector) : "-") << std::setw(8)
            << (c.delta ? std::to_string(*c.delta).substr(0, 5) : "-") << std::setprecision(4) << c.mean_accuracy
            << " +- " << std::setw(8) << c.se_accuracy << c.mean_leakage << " +- " << c.se_leakage << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Sequential data minimization for tabular classifiers" };
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "write a deterministic synthetic dataset as CSV");
    std::string kind = "linear";
    Index rows = 2000;
    Index features = 10;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--kind", kind, "linear, bank or multiclass")->capture_default_str();
    synth->add_option("--rows", rows)->capture_default_str();
    synth->add_option("--features", features, "ignored for bank")->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--out", synth_out, "output CSV (stdout when omitted)");

    // train
    auto* train = app.add_subcommand("train", "train a model and write model.json, stats.json, normalizer.json");
    std::string dataset;
    std::string label = "y";
    std::string family = "logistic";
    std::uint64_t train_seed = 0;
    std::string train_out;
    std::optional<double> lr;
    std::optional<int> epochs;
    std::optional<int> batch;
    double ridge = kDefaultRidge;
    double train_fraction = 0.7;
    train->add_option("--dataset", dataset, "CSV file with a header row")->required();
    train->add_option("--label", label, "label column")->capture_default_str();
    train->add_option("--model", family, "logistic or mlp")->capture_default_str();
    train->add_option("--seed", train_seed)->capture_default_str();
    train->add_option("--out", train_out, "artifact directory")->required();
    train->add_option("--lr", lr);
    train->add_option("--epochs", epochs);
    train->add_option("--batch", batch);
    train->add_option("--ridge", ridge)->capture_default_str();
    train->add_option("--train-fraction", train_fraction)->capture_default_str();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "run an experiment spec");
    std::string spec_path;
    std::string eval_out = "results";
    evaluate->add_option("--spec", spec_path, "experiment spec (JSON)")->required();
    evaluate->add_option("--out", eval_out, "output directory")->capture_default_str();

    // audit
    auto* audit = app.add_subcommand("audit", "run the protocol on one complete record and print the session");
    std::string artifacts_dir;
    std::string record;
    std::string sensitive;
    EngineArgs audit_args;
    audit->add_option("--artifacts", artifacts_dir, "directory written by train")->required();
    audit->add_option("--record", record, "name=value list with every feature (raw units)")->required();
    audit->add_option("--sensitive", sensitive, "comma list of sensitive features or a count")->required();
    audit_args.add_to(*audit);

    // interactive
    auto* interactive = app.add_subcommand("interactive", "disclose sensitive features one prompt at a time");
    std::string public_values;
    EngineArgs inter_args;
    interactive->add_option("--artifacts", artifacts_dir)->required();
    interactive->add_option("--sensitive", sensitive, "comma list of sensitive features or a count")->required();
    interactive->add_option("--public", public_values, "name=value list of public features (raw units)");
    inter_args.add_to(*interactive);

    // serve
    auto* serve = app.add_subcommand("serve", "HTTP session service");
    std::string bind = "127.0.0.1:8080";
    std::uint64_t serve_seed = 0;
    Index serve_probes = kDefaultProbeSamples;
    serve->add_option("--artifacts", artifacts_dir)->required();
    serve->add_option("--bind", bind, "host:port")->capture_default_str();
    serve->add_option("--seed", serve_seed)->capture_default_str();
    serve->add_option("--probe-samples", serve_probes)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        auto const code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (synth->parsed()) {
            auto const k = parse_synthetic_kind(kind);
            if (synth_out.empty()) {
                write_synthetic_csv(std::cout, k, rows, features, synth_seed);
            } else {
                std::ofstream out(synth_out);
                if (!out) {
                    throw DataError(DataErrorKind::MissingFile, "cannot write " + synth_out);
                }
                write_synthetic_csv(out, k, rows, features, synth_seed);
            }
        } else if (train->parsed()) {
            if (family != "logistic" && family != "mlp") {
                throw UsageError("--model must be logistic or mlp");
            }
            auto const raw = load_csv(dataset, label);
            auto [train_raw, test_raw] = split(raw, train_fraction, derive_seed(train_seed, { 1 }));
            auto const norm = fit_normalizer(train_raw);
            auto const tr = apply_normalizer(norm, train_raw);
            auto const te = apply_normalizer(norm, test_raw);
            bool const mlp = family == "mlp";
            TrainConfig cfg = mlp ? kMlpDefaults : kLogisticDefaults;
            cfg.lr = lr.value_or(cfg.lr);
            cfg.epochs = epochs.value_or(cfg.epochs);
            cfg.batch = batch.value_or(cfg.batch);
            cfg.seed = train_seed;
            Artifacts a { mlp ? Model(train_mlp(tr, cfg)) : Model(train_logistic(tr, cfg)), estimate(tr, ridge), norm,
                          tr.class_names, {} };
            if (mlp) {
                auto lcfg = kLogisticDefaults;
                lcfg.seed = train_seed;
                a.importance = importance_from(train_logistic(tr, lcfg));
            }
            save_artifacts(a, train_out);
            std::cout << "trained " << family << " on " << tr.rows() << " rows, " << tr.cols() << " features\n";
            if (te.rows() > 0) {
                std::cout << "test accuracy " << std::fixed << std::setprecision(4)
                          << accuracy(hard_predict_rows(a.model, te.features), te.labels) << " on " << te.rows()
                          << " rows\n";
            }
            std::cout << "artifacts written to " << train_out << '\n';
        } else if (evaluate->parsed()) {
            auto const spec = ExperimentSpec::load(spec_path);
            auto const result = run_experiment(spec);
            write_results(result, eval_out);
            print_summary(result, std::cout);
            std::cout << "results written to " << eval_out << '\n';
        } else if (audit->parsed()) {
            auto const a = load_artifacts(artifacts_dir);
            auto const partition = parse_sensitive(sensitive, a.normalizer, audit_args.seed);
            auto const values = parse_assignments(record);
            Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(a.normalizer.size()),
                                                          std::numeric_limits<double>::quiet_NaN());
            for (auto const& [name, v] : values) {
                auto const i = a.normalizer.index_of(name);
                x(static_cast<Eigen::Index>(i)) = std::clamp(a.normalizer.normalize(i, v), -1.0, 1.0);
            }
            for (Index i = 0; i < a.normalizer.size(); ++i) {
                if (std::isnan(x(static_cast<Eigen::Index>(i)))) {
                    throw UsageError("--record is missing feature '" + a.normalizer.names[i] + "'");
                }
            }
            auto const engine = make_engine(a, audit_args);
            auto const session = engine.run_auto(x, partition);
            auto j = session_to_json(session, a.feature_names());
            j["all_features_label"] = hard_predict(a.model, x);
            std::cout << j.dump(2) << '\n';
        } else if (interactive->parsed()) {
            auto const a = load_artifacts(artifacts_dir);
            auto const partition = parse_sensitive(sensitive, a.normalizer, inter_args.seed);
            auto const x = public_vector(a.normalizer, partition, parse_assignments(public_values));
            auto const engine = make_engine(a, inter_args);
            run_interactive(engine, a, partition, x, std::cin, std::cout);
        } else if (serve->parsed()) {
            auto const [host, port] = parse_bind(bind);
            ServiceOptions opts;
            opts.seed = serve_seed;
            opts.probe_samples = serve_probes;
            SessionService service(load_artifacts(artifacts_dir), opts);
            HttpFrontend http(service);
            auto const bound = http.bind(host, port);
            if (bound < 0) {
                throw UsageError("cannot bind " + bind);
            }
            std::cout << "listening on " << host << ':' << bound << std::endl;
            http.listen();
        }
    } catch (UsageError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (DataError const& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (NumericalError const& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kOk;
}
