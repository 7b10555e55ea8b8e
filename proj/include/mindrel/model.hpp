#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "mindrel/dataset.hpp"

namespace mindrel {

struct TrainConfig {
    double lr = 0.01;
    int epochs = 300;
    int batch = 32;
    std::uint64_t seed = 0;
};

inline constexpr TrainConfig kLogisticDefaults { 0.01, 300, 32, 0 };
inline constexpr TrainConfig kMlpDefaults { 0.001, 300, 32, 0 };

// Binary: one output row, score = w.x + b, class 1 iff score >= 0.
// Multi-class: one row per class, argmax with lowest-index tie-break.
struct LinearModel {
    Eigen::MatrixXd weights; // outputs x d
    Eigen::VectorXd bias;    // outputs
    std::optional<TrainConfig> config;

    [[nodiscard]] auto num_features() const -> Index { return static_cast<Index>(weights.cols()); }
    [[nodiscard]] auto num_classes() const -> int { return weights.rows() == 1 ? 2 : static_cast<int>(weights.rows()); }
};

struct DenseLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;
};

// Two ReLU hidden layers followed by a linear output layer.
struct MlpModel {
    std::array<DenseLayer, 3> layers;
    std::optional<TrainConfig> config;

    [[nodiscard]] auto num_features() const -> Index { return static_cast<Index>(layers[0].weights.cols()); }
    [[nodiscard]] auto num_classes() const -> int
    {
        auto const out = layers[2].weights.rows();
        return out == 1 ? 2 : static_cast<int>(out);
    }
};

using Model = std::variant<LinearModel, MlpModel>;

auto num_features(Model const& m) -> Index;
auto num_classes(Model const& m) -> int;
auto is_linear(Model const& m) -> bool;
auto family_name(Model const& m) -> std::string;

auto train_logistic(Dataset const& train, TrainConfig const& config = kLogisticDefaults) -> LinearModel;
auto train_mlp(Dataset const& train, TrainConfig const& config = kMlpDefaults, Index hidden = 10) -> MlpModel;

// Scores: length 1 for binary models, length L otherwise.
auto soft_predict(Model const& m, Eigen::VectorXd const& x) -> Eigen::VectorXd;
// Binary: 1{score >= 0}; multi-class: argmax, lowest index wins ties.
auto label_from_scores(Eigen::VectorXd const& scores) -> int;
auto hard_predict(Model const& m, Eigen::VectorXd const& x) -> int;
// Hard predictions for every row of xs (rows are full feature vectors).
auto hard_predict_rows(Model const& m, Eigen::MatrixXd const& xs) -> std::vector<int>;

// Gradient of score component `output` with respect to x. ReLU units sitting
// exactly at zero pre-activation contribute a zero derivative.
auto input_gradient(Model const& m, Eigen::VectorXd const& x, Index output = 0) -> Eigen::VectorXd;

auto model_to_json(Model const& m) -> nlohmann::ordered_json;
auto model_from_json(nlohmann::ordered_json const& j) -> Model;

} // namespace mindrel
