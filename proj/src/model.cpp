#include "mindrel/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mindrel/errors.hpp"
#include "mindrel/random.hpp"

namespace mindrel {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

auto output_width(int num_classes) -> Eigen::Index
{
    return num_classes == 2 ? 1 : num_classes;
}

// d(loss)/d(scores) for a batch, averaged over rows. Returns the summed loss.
auto loss_gradient(Eigen::MatrixXd const& scores, std::span<int const> labels, Eigen::MatrixXd& grad) -> double
{
    auto const n = scores.rows();
    grad.resize(n, scores.cols());
    double loss = 0.0;
    if (scores.cols() == 1) {
        for (Eigen::Index r = 0; r < n; ++r) {
            double const s = scores(r, 0);
            double const y = labels[static_cast<Index>(r)] == 1 ? 1.0 : 0.0;
            double const p = 1.0 / (1.0 + std::exp(-s));
            // log(1 + e^s) - y s, computed stably
            loss += std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))) - y * s;
            grad(r, 0) = (p - y) / static_cast<double>(n);
        }
        return loss;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        double const m = scores.row(r).maxCoeff();
        Eigen::RowVectorXd e = (scores.row(r).array() - m).exp();
        double const z = e.sum();
        e /= z;
        auto const y = labels[static_cast<Index>(r)];
        loss += -(scores(r, y) - m - std::log(z));
        e(y) -= 1.0;
        grad.row(r) = e / static_cast<double>(n);
    }
    return loss;
}

auto batch_of(Dataset const& data, std::span<Index const> order, Index start, Index count, Eigen::MatrixXd& xs,
              std::vector<int>& ys)
{
    xs.resize(static_cast<Eigen::Index>(count), data.features.cols());
    ys.resize(count);
    for (Index i = 0; i < count; ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(order[start + i]));
        ys[i] = data.labels[order[start + i]];
    }
}

void check_trainable(Dataset const& train, TrainConfig const& config)
{
    if (train.rows() == 0) {
        throw DataError(DataErrorKind::EmptyDataset, "cannot train on an empty dataset");
    }
    if (config.batch < 1 || config.epochs < 0 || !(config.lr > 0.0)) {
        throw UsageError("training needs batch >= 1, epochs >= 0 and lr > 0");
    }
}

auto relu(Eigen::MatrixXd const& m) -> Eigen::MatrixXd
{
    return m.cwiseMax(0.0);
}

auto relu_mask(Eigen::MatrixXd const& pre) -> Eigen::MatrixXd
{
    return (pre.array() > 0.0).cast<double>().matrix();
}

// Row-wise forward pass through a dense layer.
auto affine_rows(DenseLayer const& layer, Eigen::MatrixXd const& in) -> Eigen::MatrixXd
{
    Eigen::MatrixXd out = in * layer.weights.transpose();
    out.rowwise() += layer.bias.transpose();
    return out;
}

auto mlp_scores_rows(MlpModel const& m, Eigen::MatrixXd const& xs) -> Eigen::MatrixXd
{
    Eigen::MatrixXd const a1 = relu(affine_rows(m.layers[0], xs));
    Eigen::MatrixXd const a2 = relu(affine_rows(m.layers[1], a1));
    return affine_rows(m.layers[2], a2);
}

void check_input(Index expected, Eigen::Index got)
{
    if (static_cast<Index>(got) != expected) {
        throw UsageError("model expects " + std::to_string(expected) + " features, got " + std::to_string(got));
    }
}

auto config_json(std::optional<TrainConfig> const& c) -> nlohmann::ordered_json
{
    if (!c) {
        return nullptr;
    }
    return { { "lr", c->lr }, { "epochs", c->epochs }, { "batch", c->batch }, { "seed", c->seed } };
}

auto config_from(nlohmann::ordered_json const& j) -> std::optional<TrainConfig>
{
    if (j.is_null()) {
        return std::nullopt;
    }
    return TrainConfig { j.at("lr").get<double>(), j.at("epochs").get<int>(), j.at("batch").get<int>(),
                         j.at("seed").get<std::uint64_t>() };
}

auto layer_json(Eigen::MatrixXd const& w, Eigen::VectorXd const& b) -> nlohmann::ordered_json
{
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        for (Eigen::Index c = 0; c < w.cols(); ++c) {
            flat.push_back(w(r, c));
        }
    }
    return { { "in", w.cols() }, { "out", w.rows() }, { "weights", flat },
             { "bias", std::vector<double>(b.data(), b.data() + b.size()) } };
}

auto layer_from(nlohmann::ordered_json const& j) -> DenseLayer
{
    auto const in = j.at("in").get<Eigen::Index>();
    auto const out = j.at("out").get<Eigen::Index>();
    auto const flat = j.at("weights").get<std::vector<double>>();
    auto const bias = j.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != in * out || static_cast<Eigen::Index>(bias.size()) != out) {
        throw DataError(DataErrorKind::Malformed, "model layer shape does not match its weights");
    }
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) {
            layer.weights(r, c) = flat[static_cast<std::size_t>(r * in + c)];
        }
    }
    layer.bias = Eigen::Map<Eigen::VectorXd const>(bias.data(), out);
    return layer;
}

} // namespace

auto num_features(Model const& m) -> Index
{
    return std::visit([](auto const& x) { return x.num_features(); }, m);
}

auto num_classes(Model const& m) -> int
{
    return std::visit([](auto const& x) { return x.num_classes(); }, m);
}

auto is_linear(Model const& m) -> bool
{
    return std::holds_alternative<LinearModel>(m);
}

auto family_name(Model const& m) -> std::string
{
    return is_linear(m) ? "logistic" : "mlp";
}

auto train_logistic(Dataset const& train, TrainConfig const& config) -> LinearModel
{
    check_trainable(train, config);
    auto const k = output_width(train.num_classes);
    LinearModel model;
    model.weights = Eigen::MatrixXd::Zero(k, train.features.cols());
    model.bias = Eigen::VectorXd::Zero(k);
    model.config = config;

    Rng rng(config.seed);
    std::vector<Index> order(train.rows());
    std::iota(order.begin(), order.end(), Index { 0 });
    Eigen::MatrixXd xs;
    Eigen::MatrixXd grad;
    std::vector<int> ys;
    auto const batch = static_cast<Index>(config.batch);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss = 0.0;
        for (Index start = 0; start < order.size(); start += batch) {
            auto const count = std::min(batch, order.size() - start);
            batch_of(train, order, start, count, xs, ys);
            Eigen::MatrixXd scores = xs * model.weights.transpose();
            scores.rowwise() += model.bias.transpose();
            loss += loss_gradient(scores, ys, grad);
            model.weights -= config.lr * (grad.transpose() * xs);
            model.bias -= config.lr * grad.colwise().sum().transpose();
        }
        if (!std::isfinite(loss)) {
            throw NumericalError("logistic regression loss became non-finite at epoch " + std::to_string(epoch));
        }
    }
    return model;
}

auto train_mlp(Dataset const& train, TrainConfig const& config, Index hidden) -> MlpModel
{
    check_trainable(train, config);
    if (hidden == 0) {
        throw UsageError("hidden width must be positive");
    }
    auto const d = train.features.cols();
    auto const h = static_cast<Eigen::Index>(hidden);
    auto const k = output_width(train.num_classes);

    Rng rng(config.seed);
    auto he_uniform = [&rng](Eigen::Index out, Eigen::Index in) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double const limit = std::sqrt(6.0 / static_cast<double>(in));
        Eigen::MatrixXd w(out, in);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) {
                w(r, c) = limit * u(rng);
            }
        }
        return w;
    };
    MlpModel model;
    model.layers[0] = { he_uniform(h, d), Eigen::VectorXd::Zero(h) };
    model.layers[1] = { he_uniform(h, h), Eigen::VectorXd::Zero(h) };
    model.layers[2] = { he_uniform(k, h), Eigen::VectorXd::Zero(k) };
    model.config = config;

    std::vector<Index> order(train.rows());
    std::iota(order.begin(), order.end(), Index { 0 });
    Eigen::MatrixXd xs;
    Eigen::MatrixXd d3;
    std::vector<int> ys;
    auto const batch = static_cast<Index>(config.batch);
    auto& [l1, l2, l3] = model.layers;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss = 0.0;
        for (Index start = 0; start < order.size(); start += batch) {
            auto const count = std::min(batch, order.size() - start);
            batch_of(train, order, start, count, xs, ys);
            Eigen::MatrixXd const z1 = affine_rows(l1, xs);
            Eigen::MatrixXd const a1 = relu(z1);
            Eigen::MatrixXd const z2 = affine_rows(l2, a1);
            Eigen::MatrixXd const a2 = relu(z2);
            Eigen::MatrixXd const z3 = affine_rows(l3, a2);
            loss += loss_gradient(z3, ys, d3);

            Eigen::MatrixXd const d2 = (d3 * l3.weights).cwiseProduct(relu_mask(z2));
            Eigen::MatrixXd const d1 = (d2 * l2.weights).cwiseProduct(relu_mask(z1));
            l3.weights -= config.lr * (d3.transpose() * a2);
            l3.bias -= config.lr * d3.colwise().sum().transpose();
            l2.weights -= config.lr * (d2.transpose() * a1);
            l2.bias -= config.lr * d2.colwise().sum().transpose();
            l1.weights -= config.lr * (d1.transpose() * xs);
            l1.bias -= config.lr * d1.colwise().sum().transpose();
        }
        if (!std::isfinite(loss)) {
            throw NumericalError("MLP loss became non-finite at epoch " + std::to_string(epoch));
        }
    }
    return model;
}

auto soft_predict(Model const& m, Eigen::VectorXd const& x) -> Eigen::VectorXd
{
    check_input(num_features(m), x.size());
    return std::visit(Overloaded {
                          [&](LinearModel const& lin) -> Eigen::VectorXd {
                              Eigen::VectorXd s(lin.weights.rows());
                              for (Eigen::Index k = 0; k < s.size(); ++k) {
                                  s(k) = lin.weights.row(k).dot(x) + lin.bias(k);
                              }
                              return s;
                          },
                          [&](MlpModel const& mlp) -> Eigen::VectorXd {
                              Eigen::VectorXd const a1 = (mlp.layers[0].weights * x + mlp.layers[0].bias).cwiseMax(0.0);
                              Eigen::VectorXd const a2 = (mlp.layers[1].weights * a1 + mlp.layers[1].bias).cwiseMax(0.0);
                              return mlp.layers[2].weights * a2 + mlp.layers[2].bias;
                          },
                      },
                      m);
}

auto label_from_scores(Eigen::VectorXd const& scores) -> int
{
    if (scores.size() == 1) {
        return scores(0) >= 0.0 ? 1 : 0;
    }
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k) {
        if (scores(k) > scores(best)) {
            best = k;
        }
    }
    return static_cast<int>(best);
}

auto hard_predict(Model const& m, Eigen::VectorXd const& x) -> int
{
    return label_from_scores(soft_predict(m, x));
}

auto hard_predict_rows(Model const& m, Eigen::MatrixXd const& xs) -> std::vector<int>
{
    check_input(num_features(m), xs.cols());
    Eigen::MatrixXd const scores = std::visit(Overloaded {
                                                  [&](LinearModel const& lin) -> Eigen::MatrixXd {
                                                      Eigen::MatrixXd s = xs * lin.weights.transpose();
                                                      s.rowwise() += lin.bias.transpose();
                                                      return s;
                                                  },
                                                  [&](MlpModel const& mlp) { return mlp_scores_rows(mlp, xs); },
                                              },
                                              m);
    std::vector<int> out(static_cast<std::size_t>(xs.rows()));
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        out[static_cast<std::size_t>(r)] = label_from_scores(scores.row(r).transpose());
    }
    return out;
}

auto input_gradient(Model const& m, Eigen::VectorXd const& x, Index output) -> Eigen::VectorXd
{
    check_input(num_features(m), x.size());
    return std::visit(Overloaded {
                          [&](LinearModel const& lin) -> Eigen::VectorXd {
                              if (static_cast<Eigen::Index>(output) >= lin.weights.rows()) {
                                  throw UsageError("score component out of range");
                              }
                              return lin.weights.row(static_cast<Eigen::Index>(output)).transpose();
                          },
                          [&](MlpModel const& mlp) -> Eigen::VectorXd {
                              auto const& [l1, l2, l3] = mlp.layers;
                              if (static_cast<Eigen::Index>(output) >= l3.weights.rows()) {
                                  throw UsageError("score component out of range");
                              }
                              Eigen::VectorXd const z1 = l1.weights * x + l1.bias;
                              Eigen::VectorXd const z2 = l2.weights * z1.cwiseMax(0.0) + l2.bias;
                              Eigen::VectorXd g2 = l3.weights.row(static_cast<Eigen::Index>(output)).transpose();
                              g2 = g2.cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
                              Eigen::VectorXd g1 = l2.weights.transpose() * g2;
                              g1 = g1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
                              return l1.weights.transpose() * g1;
                          },
                      },
                      m);
}

auto model_to_json(Model const& m) -> nlohmann::ordered_json
{
    nlohmann::ordered_json j;
    j["family"] = family_name(m);
    j["num_features"] = num_features(m);
    j["num_classes"] = num_classes(m);
    auto layers = nlohmann::ordered_json::array();
    std::visit(Overloaded {
                   [&](LinearModel const& lin) {
                       layers.push_back(layer_json(lin.weights, lin.bias));
                       j["config"] = config_json(lin.config);
                   },
                   [&](MlpModel const& mlp) {
                       for (auto const& layer : mlp.layers) {
                           layers.push_back(layer_json(layer.weights, layer.bias));
                       }
                       j["config"] = config_json(mlp.config);
                   },
               },
               m);
    j["layers"] = layers;
    return j;
}

auto model_from_json(nlohmann::ordered_json const& j) -> Model
{
    try {
        auto const family = j.at("family").get<std::string>();
        auto const& layers = j.at("layers");
        auto const config = config_from(j.value("config", nlohmann::ordered_json()));
        if (family == "logistic") {
            if (layers.size() != 1) {
                throw DataError(DataErrorKind::Malformed, "logistic model must have exactly one layer");
            }
            auto layer = layer_from(layers[0]);
            return LinearModel { std::move(layer.weights), std::move(layer.bias), config };
        }
        if (family == "mlp") {
            if (layers.size() != 3) {
                throw DataError(DataErrorKind::Malformed, "mlp model must have exactly three layers");
            }
            MlpModel mlp;
            for (std::size_t i = 0; i < 3; ++i) {
                mlp.layers[i] = layer_from(layers[i]);
            }
            for (std::size_t i = 1; i < 3; ++i) {
                if (mlp.layers[i].weights.cols() != mlp.layers[i - 1].weights.rows()) {
                    throw DataError(DataErrorKind::Malformed, "mlp layer shapes do not chain");
                }
            }
            mlp.config = config;
            return mlp;
        }
        throw DataError(DataErrorKind::Malformed, "unknown model family '" + family + "'");
    } catch (nlohmann::json::exception const& e) {
        throw DataError(DataErrorKind::Malformed, std::string("model: ") + e.what());
    }
}

} // namespace mindrel
