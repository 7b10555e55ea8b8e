#include "mindrel/interactive.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "mindrel/errors.hpp"

namespace mindrel {

namespace {

auto trim(std::string s) -> std::string
{
    auto const first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    auto const last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

auto parse_number(std::string const& text) -> std::optional<double>
{
    auto const t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    std::istringstream is(t);
    is.imbue(std::locale::classic());
    double v = 0.0;
    is >> v;
    if (!is || !is.eof() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

auto split_commas(std::string const& text) -> std::vector<std::string>
{
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

auto fixed(double v) -> std::string
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

} // namespace

auto parse_assignments(std::string const& text) -> std::vector<std::pair<std::string, double>>
{
    std::vector<std::pair<std::string, double>> out;
    for (auto const& item : split_commas(text)) {
        // one-hot column names contain '=' themselves, so split at the last one
        auto const at = item.rfind('=');
        if (at == std::string::npos) {
            throw UsageError("expected name=value, got '" + item + "'");
        }
        auto const value = parse_number(item.substr(at + 1));
        if (!value) {
            throw UsageError("value for '" + item.substr(0, at) + "' is not a number");
        }
        out.emplace_back(trim(item.substr(0, at)), *value);
    }
    return out;
}

auto parse_sensitive(std::string const& text, NormalizationSpec const& names, std::uint64_t seed) -> FeaturePartition
{
    auto const d = names.size();
    auto const t = trim(text);
    if (!t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
        return sample_partition(d, static_cast<Index>(std::stoull(t)), seed);
    }
    IndexSet s;
    for (auto const& name : split_commas(t)) {
        s.push_back(names.index_of(name));
    }
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
        throw UsageError("a sensitive feature is listed twice");
    }
    return FeaturePartition::from_sensitive(d, s);
}

auto public_vector(NormalizationSpec const& normalizer, FeaturePartition const& partition,
                   std::vector<std::pair<std::string, double>> const& raw) -> Eigen::VectorXd
{
    Eigen::VectorXd x = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(normalizer.size()),
                                                  std::numeric_limits<double>::quiet_NaN());
    for (auto const& [name, value] : raw) {
        auto const i = normalizer.index_of(name);
        if (partition.is_sensitive(i)) {
            throw UsageError("'" + name + "' is sensitive and must not be given up front");
        }
        x(static_cast<Eigen::Index>(i)) = std::clamp(normalizer.normalize(i, value), -1.0, 1.0);
    }
    for (auto i : partition.public_idx) {
        if (std::isnan(x(static_cast<Eigen::Index>(i)))) {
            throw UsageError("missing value for public feature '" + normalizer.names[i] + "'");
        }
    }
    return x;
}

auto run_interactive(Engine const& engine, Artifacts const& artifacts, FeaturePartition const& partition,
                     Eigen::VectorXd const& x_public, std::istream& in, std::ostream& out) -> Session
{
    auto const& names = artifacts.feature_names();
    double const threshold = 1.0 - engine.config().delta;
    auto s = engine.start(partition, x_public);
    out << "sensitive features: " << partition.sensitive_idx.size() << ", decision threshold "
        << fixed(threshold) << '\n';
    out << "confidence " << fixed(s.status.confidence) << '\n';
    while (!s.decided()) {
        auto const j = *s.pending;
        out << "requested: " << names[j] << '\n';
        std::optional<double> raw;
        while (!raw) {
            out << names[j] << "> " << std::flush;
            std::string line;
            if (!std::getline(in, line)) {
                throw UsageError("input ended before a decision was reached");
            }
            raw = parse_number(line);
            if (!raw) {
                out << "error: '" << trim(line) << "' is not a number, try again\n";
            }
        }
        double const normalized = artifacts.normalizer.normalize(j, *raw);
        auto const& rec = engine.step(s, normalized);
        out << "using " << names[j] << " = " << fixed(rec.value);
        if (rec.clipped) {
            out << " (clipped from " << fixed(normalized) << ")";
        }
        out << "; confidence " << fixed(rec.confidence) << '\n';
    }
    auto const label = s.label();
    auto const& label_name = static_cast<Index>(label) < artifacts.class_names.size()
                                 ? artifacts.class_names[static_cast<Index>(label)]
                                 : std::to_string(label);
    out << "decision: " << label_name << " (class " << label << "), confidence " << fixed(s.terminal->confidence)
        << ", revealed " << s.num_revealed() << " of " << partition.sensitive_idx.size() << " sensitive features\n";
    return s;
}

} // namespace mindrel
