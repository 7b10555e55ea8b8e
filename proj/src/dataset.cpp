#include "mindrel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mindrel/errors.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

auto trim(std::string_view s) -> std::string_view
{
    auto const ws = " \t\r\n";
    auto const b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) {
        return {};
    }
    auto const e = s.find_last_not_of(ws);
    s = s.substr(b, e - b + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

auto split_line(std::string const& line) -> std::vector<std::string>
{
    std::vector<std::string> out;
    std::string_view rest(line);
    while (true) {
        auto const pos = rest.find(',');
        out.emplace_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos) {
            break;
        }
        rest.remove_prefix(pos + 1);
    }
    return out;
}

auto parse_number(std::string const& s, double& value) -> bool
{
    if (s.empty()) {
        return false;
    }
    auto const* first = s.data();
    auto const* last = s.data() + s.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last && std::isfinite(value);
}

} // namespace

auto parse_csv(std::istream& in, std::string const& label_column) -> Dataset
{
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw DataError(DataErrorKind::EmptyDataset, "CSV input has no header row", 1);
    }
    auto const header = split_line(line);
    auto const label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw DataError(DataErrorKind::MissingLabelColumn,
                        "label column '" + label_column + "' not found in header", 1, label_column);
    }
    auto const label_col = static_cast<Index>(label_it - header.begin());
    auto const ncol = header.size();

    std::vector<std::vector<std::string>> cells; // row-major raw cells
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_line(line);
        if (fields.size() != ncol) {
            throw DataError(DataErrorKind::RaggedRow,
                            "line " + std::to_string(lineno) + " has " + std::to_string(fields.size())
                                + " fields, expected " + std::to_string(ncol),
                            lineno);
        }
        for (Index c = 0; c < ncol; ++c) {
            if (fields[c].empty()) {
                throw DataError(DataErrorKind::MissingCell,
                                "empty cell at line " + std::to_string(lineno) + ", column '" + header[c] + "'",
                                lineno, header[c]);
            }
        }
        cells.push_back(std::move(fields));
    }
    if (cells.empty()) {
        throw DataError(DataErrorKind::EmptyDataset, "CSV input has no data rows");
    }
    auto const nrow = cells.size();

    // column typing: numeric when every cell parses as a finite number
    std::vector<bool> numeric(ncol, true);
    std::vector<std::vector<double>> values(ncol, std::vector<double>(nrow));
    for (Index c = 0; c < ncol; ++c) {
        for (Index r = 0; r < nrow && numeric[c]; ++r) {
            numeric[c] = parse_number(cells[r][c], values[c][r]);
        }
    }

    Dataset data;
    std::vector<std::vector<double>> columns;
    for (Index c = 0; c < ncol; ++c) {
        if (c == label_col) {
            continue;
        }
        if (numeric[c]) {
            data.feature_names.push_back(header[c]);
            columns.push_back(values[c]);
            continue;
        }
        std::set<std::string> levels;
        for (Index r = 0; r < nrow; ++r) {
            levels.insert(cells[r][c]);
        }
        for (auto const& level : levels) {
            data.feature_names.push_back(header[c] + "=" + level);
            std::vector<double> col(nrow);
            for (Index r = 0; r < nrow; ++r) {
                col[r] = cells[r][c] == level ? 1.0 : 0.0;
            }
            columns.push_back(std::move(col));
        }
    }

    data.features.resize(static_cast<Eigen::Index>(nrow), static_cast<Eigen::Index>(columns.size()));
    for (Index c = 0; c < columns.size(); ++c) {
        for (Index r = 0; r < nrow; ++r) {
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = columns[c][r];
        }
    }

    data.labels.resize(nrow);
    if (numeric[label_col]) {
        std::map<double, std::string> classes;
        for (Index r = 0; r < nrow; ++r) {
            classes.emplace(values[label_col][r], cells[r][label_col]);
        }
        std::map<double, int> ids;
        for (auto const& [v, name] : classes) {
            ids.emplace(v, static_cast<int>(data.class_names.size()));
            data.class_names.push_back(name);
        }
        for (Index r = 0; r < nrow; ++r) {
            data.labels[r] = ids.at(values[label_col][r]);
        }
    } else {
        std::map<std::string, int> ids;
        for (Index r = 0; r < nrow; ++r) {
            ids.emplace(cells[r][label_col], 0);
        }
        for (auto& [name, id] : ids) {
            id = static_cast<int>(data.class_names.size());
            data.class_names.push_back(name);
        }
        for (Index r = 0; r < nrow; ++r) {
            data.labels[r] = ids.at(cells[r][label_col]);
        }
    }
    // a single observed class still yields a binary problem
    data.num_classes = std::max(2, static_cast<int>(data.class_names.size()));
    return data;
}

auto load_csv(std::filesystem::path const& path, std::string const& label_column) -> Dataset
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataErrorKind::MissingFile, "cannot open '" + path.string() + "'");
    }
    return parse_csv(in, label_column);
}

auto take_rows(Dataset const& data, std::span<Index const> rows) -> Dataset
{
    Dataset out;
    out.feature_names = data.feature_names;
    out.class_names = data.class_names;
    out.num_classes = data.num_classes;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
    out.labels.resize(rows.size());
    for (Index i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(rows[i]));
        out.labels[i] = data.labels[rows[i]];
    }
    return out;
}

auto NormalizationSpec::normalize(Index feature, double raw) const -> double
{
    auto const lo = min.at(feature);
    auto const hi = max.at(feature);
    if (!(hi > lo)) {
        return 0.0;
    }
    return 2.0 * (raw - lo) / (hi - lo) - 1.0;
}

auto NormalizationSpec::index_of(std::string const& name) const -> Index
{
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw UsageError("unknown feature '" + name + "'");
    }
    return static_cast<Index>(it - names.begin());
}

auto NormalizationSpec::to_json() const -> nlohmann::ordered_json
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (Index i = 0; i < names.size(); ++i) {
        j[names[i]] = { min[i], max[i] };
    }
    return j;
}

auto NormalizationSpec::from_json(nlohmann::ordered_json const& j) -> NormalizationSpec
{
    if (!j.is_object()) {
        throw DataError(DataErrorKind::Malformed, "normalizer document must be a JSON object");
    }
    NormalizationSpec spec;
    for (auto const& [name, range] : j.items()) {
        if (!range.is_array() || range.size() != 2) {
            throw DataError(DataErrorKind::Malformed, "normalizer entry '" + name + "' must be [min, max]", std::nullopt, name);
        }
        auto const lo = range[0].get<double>();
        auto const hi = range[1].get<double>();
        if (lo > hi) {
            throw DataError(DataErrorKind::Malformed, "normalizer entry '" + name + "' has min > max", std::nullopt, name);
        }
        spec.names.push_back(name);
        spec.min.push_back(lo);
        spec.max.push_back(hi);
    }
    return spec;
}

auto fit_normalizer(Dataset const& train) -> NormalizationSpec
{
    if (train.rows() == 0) {
        throw DataError(DataErrorKind::EmptyDataset, "cannot fit a normalizer on an empty dataset");
    }
    NormalizationSpec spec;
    spec.names = train.feature_names;
    for (Eigen::Index c = 0; c < train.features.cols(); ++c) {
        spec.min.push_back(train.features.col(c).minCoeff());
        spec.max.push_back(train.features.col(c).maxCoeff());
    }
    return spec;
}

auto apply_normalizer(NormalizationSpec const& spec, Dataset const& data) -> Dataset
{
    if (spec.size() != data.cols()) {
        throw DataError(DataErrorKind::ShapeMismatch,
                        "normalizer has " + std::to_string(spec.size()) + " features, dataset has "
                            + std::to_string(data.cols()));
    }
    Dataset out = data;
    for (Eigen::Index c = 0; c < out.features.cols(); ++c) {
        for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
            out.features(r, c) = std::clamp(spec.normalize(static_cast<Index>(c), data.features(r, c)), -1.0, 1.0);
        }
    }
    return out;
}

auto split(Dataset const& data, double train_fraction, std::uint64_t seed) -> std::pair<Dataset, Dataset>
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie strictly between 0 and 1");
    }
    std::vector<Index> order(data.rows());
    std::iota(order.begin(), order.end(), Index{ 0 });
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto const ntrain = static_cast<Index>(std::floor(static_cast<double>(data.rows()) * train_fraction));
    std::span<Index const> all(order);
    return { take_rows(data, all.first(ntrain)), take_rows(data, all.subspan(ntrain)) };
}

auto FeaturePartition::is_sensitive(Index i) const -> bool
{
    return std::binary_search(sensitive_idx.begin(), sensitive_idx.end(), i);
}

auto FeaturePartition::from_sensitive(Index num_features, IndexSet sensitive) -> FeaturePartition
{
    std::sort(sensitive.begin(), sensitive.end());
    if (std::adjacent_find(sensitive.begin(), sensitive.end()) != sensitive.end()) {
        throw UsageError("duplicate sensitive feature index");
    }
    if (!sensitive.empty() && sensitive.back() >= num_features) {
        throw UsageError("sensitive feature index out of range");
    }
    FeaturePartition p;
    p.sensitive_idx = std::move(sensitive);
    for (Index i = 0; i < num_features; ++i) {
        if (!p.is_sensitive(i)) {
            p.public_idx.push_back(i);
        }
    }
    return p;
}

auto sample_partition(Index num_features, Index num_sensitive, std::uint64_t seed) -> FeaturePartition
{
    if (num_sensitive > num_features) {
        throw UsageError("cannot choose " + std::to_string(num_sensitive) + " sensitive features out of "
                         + std::to_string(num_features));
    }
    std::vector<Index> order(num_features);
    std::iota(order.begin(), order.end(), Index{ 0 });
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(num_sensitive);
    return FeaturePartition::from_sensitive(num_features, std::move(order));
}

} // namespace mindrel
