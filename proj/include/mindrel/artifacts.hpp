#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mindrel/dataset.hpp"
#include "mindrel/gaussian.hpp"
#include "mindrel/model.hpp"

namespace mindrel {

// Everything a deployed engine needs: model.json, stats.json, normalizer.json.
struct Artifacts {
    Model model;
    GaussianStats stats;
    NormalizationSpec normalizer;
    std::vector<std::string> class_names;
    std::vector<double> importance; // per-feature weights for the importance selector

    [[nodiscard]] auto feature_names() const -> std::vector<std::string> const& { return normalizer.names; }
};

void save_artifacts(Artifacts const& a, std::filesystem::path const& dir);
auto load_artifacts(std::filesystem::path const& dir) -> Artifacts;

auto read_json(std::filesystem::path const& path) -> nlohmann::ordered_json;
void write_json(std::filesystem::path const& path, nlohmann::ordered_json const& j);

} // namespace mindrel
