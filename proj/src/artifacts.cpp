#include "mindrel/artifacts.hpp"

#include <fstream>

#include "mindrel/errors.hpp"

namespace mindrel {

auto read_json(std::filesystem::path const& path) -> nlohmann::ordered_json
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(DataErrorKind::MissingFile, "cannot open " + path.string());
    }
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, path.string() + ": " + e.what());
    }
}

void write_json(std::filesystem::path const& path, nlohmann::ordered_json const& j)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError(DataErrorKind::MissingFile, "cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

void save_artifacts(Artifacts const& a, std::filesystem::path const& dir)
{
    std::filesystem::create_directories(dir);
    auto model = model_to_json(a.model);
    model["class_names"] = a.class_names;
    if (!a.importance.empty()) {
        model["importance"] = a.importance;
    }
    write_json(dir / "model.json", model);
    write_json(dir / "stats.json", a.stats.to_json());
    write_json(dir / "normalizer.json", a.normalizer.to_json());
}

auto load_artifacts(std::filesystem::path const& dir) -> Artifacts
{
    auto const model = read_json(dir / "model.json");
    Artifacts a {
        model_from_json(model),
        GaussianStats::from_json(read_json(dir / "stats.json")),
        NormalizationSpec::from_json(read_json(dir / "normalizer.json")),
        {},
        {},
    };
    try {
        a.class_names = model.value("class_names", std::vector<std::string> {});
        a.importance = model.value("importance", std::vector<double> {});
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, std::string("model.json: ") + e.what());
    }
    auto const d = num_features(a.model);
    if (a.stats.dim() != d || a.normalizer.size() != d) {
        throw DataError(DataErrorKind::ShapeMismatch, "model, stats and normalizer disagree on the feature count");
    }
    if (!a.importance.empty() && a.importance.size() != d) {
        throw DataError(DataErrorKind::ShapeMismatch, "importance weights do not match the feature count");
    }
    if (a.class_names.empty()) {
        for (int k = 0; k < num_classes(a.model); ++k) {
            a.class_names.push_back(std::to_string(k));
        }
    }
    return a;
}

} // namespace mindrel
