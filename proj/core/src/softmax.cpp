#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "limescope/classify.hpp"
#include "limescope/error.hpp"
#include "limescope/rng.hpp"

namespace limescope {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Row-wise softmax with max subtraction.
void softmax_rows(RowMatrix& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

RowMatrix feature_matrix(const SoftmaxPixelClassifier& model, std::span<const Image> images) {
  RowMatrix x(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(model.feature_count()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto f = model.features(images[i]);
    x.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }
  return x;
}

// Objective and gradient over the rows `rows` of a precomputed feature matrix.
double objective(const RowMatrix& weights, const RowMatrix& x, std::span<const int> targets,
                 std::span<const std::size_t> rows, double l2, RowMatrix* gradient) {
  const auto classes = weights.rows();
  const auto features = weights.cols();
  RowMatrix batch(static_cast<Eigen::Index>(rows.size()), features);
  for (std::size_t i = 0; i < rows.size(); ++i) batch.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));

  RowMatrix probs = batch * weights.transpose();
  softmax_rows(probs);

  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = probs(static_cast<Eigen::Index>(i), targets[rows[i]]);
    loss -= std::log(std::max(p, 1e-300));
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss *= inv;
  const auto penalized = weights.leftCols(features - 1);
  loss += 0.5 * l2 * penalized.squaredNorm();

  if (gradient != nullptr) {
    RowMatrix residual = probs;
    for (std::size_t i = 0; i < rows.size(); ++i) residual(static_cast<Eigen::Index>(i), targets[rows[i]]) -= 1.0;
    *gradient = residual.transpose() * batch * inv;
    gradient->leftCols(features - 1) += l2 * penalized;
  }
  (void)classes;
  return loss;
}

void check_targets(std::span<const Image> images, std::span<const int> targets, std::size_t classes) {
  if (images.size() != targets.size()) fail(ErrorKind::LengthMismatch, "images and targets differ in length");
  if (images.empty()) fail(ErrorKind::EmptyClass, "training set is empty");
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= classes) fail(ErrorKind::IndexOutOfRange, "target class out of range");
  }
}

}  // namespace

SoftmaxPixelClassifier::SoftmaxPixelClassifier(std::vector<std::string> labels, int input_width,
                                               int input_height, std::vector<double> weights)
    : labels_(std::move(labels)), input_width_(input_width), input_height_(input_height), weights_(std::move(weights)) {
  if (labels_.empty()) fail(ErrorKind::BadParameter, "softmax classifier needs at least one label");
  if (input_width_ < 1 || input_height_ < 1) fail(ErrorKind::BadParameter, "softmax input size must be positive");
  if (weights_.size() != labels_.size() * feature_count()) {
    fail(ErrorKind::ShapeError, "softmax weights must be classes x (w*h*3+1)");
  }
  for (double v : weights_) {
    if (!std::isfinite(v)) fail(ErrorKind::BadParameter, "softmax weights must be finite");
  }
}

SoftmaxPixelClassifier::SoftmaxPixelClassifier(std::vector<std::string> labels, int input_width, int input_height)
    : SoftmaxPixelClassifier(labels, input_width, input_height,
                             std::vector<double>(labels.size() *
                                                     (static_cast<std::size_t>(input_width) * static_cast<std::size_t>(input_height) * 3 + 1),
                                                 0.0)) {}

std::size_t SoftmaxPixelClassifier::feature_count() const noexcept {
  return static_cast<std::size_t>(input_width_) * static_cast<std::size_t>(input_height_) * 3 + 1;
}

std::vector<double> SoftmaxPixelClassifier::features(const Image& img) const {
  const Image scaled = resize(to_rgb(img), input_width_, input_height_);
  std::vector<double> f(scaled.data().begin(), scaled.data().end());
  f.push_back(1.0);
  return f;
}

std::vector<ProbabilityVector> SoftmaxPixelClassifier::predict(std::span<const Image> batch) const {
  if (batch.empty()) fail(ErrorKind::ShapeError, "predict needs a non-empty batch");
  const Eigen::Map<const RowMatrix> w(weights_.data(), static_cast<Eigen::Index>(labels_.size()),
                                      static_cast<Eigen::Index>(feature_count()));
  std::vector<ProbabilityVector> out;
  out.reserve(batch.size());
  for (const Image& img : batch) {
    const auto f = features(img);
    Eigen::VectorXd logits = w * Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    logits.array() -= logits.maxCoeff();
    logits = logits.array().exp().matrix();
    logits /= logits.sum();
    out.emplace_back(logits.data(), logits.data() + logits.size());
  }
  return out;
}

double softmax_objective(const SoftmaxPixelClassifier& model, std::span<const Image> images,
                         std::span<const int> targets, double l2, std::vector<double>* gradient) {
  check_targets(images, targets, model.labels().size());
  const RowMatrix x = feature_matrix(model, images);
  const Eigen::Map<const RowMatrix> w(model.weights().data(), static_cast<Eigen::Index>(model.labels().size()),
                                      static_cast<Eigen::Index>(model.feature_count()));
  std::vector<std::size_t> rows(images.size());
  std::iota(rows.begin(), rows.end(), 0);
  RowMatrix grad;
  const double loss = objective(w, x, targets, rows, l2, gradient != nullptr ? &grad : nullptr);
  if (gradient != nullptr) gradient->assign(grad.data(), grad.data() + grad.size());
  return loss;
}

TrainResult train_softmax(std::span<const Image> images, std::span<const int> targets,
                          std::vector<std::string> labels, const TrainConfig& config) {
  check_targets(images, targets, labels.size());
  std::vector<std::size_t> per_class(labels.size(), 0);
  for (int t : targets) ++per_class[static_cast<std::size_t>(t)];
  for (std::size_t c = 0; c < labels.size(); ++c) {
    if (per_class[c] == 0) fail(ErrorKind::EmptyClass, "no training samples for class '" + labels[c] + "'");
  }
  if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0) || config.l2 < 0.0) {
    fail(ErrorKind::BadParameter, "train config needs epochs >= 0, batch_size >= 1, lr > 0, l2 >= 0");
  }

  TrainResult result{SoftmaxPixelClassifier(labels, config.input_width, config.input_height), {}};
  SoftmaxPixelClassifier& model = result.model;
  const RowMatrix x = feature_matrix(model, images);
  Eigen::Map<RowMatrix> w(model.weights().data(), static_cast<Eigen::Index>(labels.size()),
                          static_cast<Eigen::Index>(model.feature_count()));

  std::vector<std::size_t> all(images.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> order = all;
  Rng rng(config.seed);
  RowMatrix grad;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      objective(w, x, targets, std::span(order).subspan(start, end - start), config.l2, &grad);
      w -= config.learning_rate * grad;
    }
    const double loss = objective(w, x, targets, all, config.l2, nullptr);
    if (!std::isfinite(loss)) {
      fail(ErrorKind::DivergedLoss, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(loss);
  }
  return result;
}

void to_json(nlohmann::json& j, const SoftmaxPixelClassifier& model) {
  const std::size_t features = model.feature_count();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < model.labels().size(); ++c) {
    const auto row = model.weights().subspan(c * features, features);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j = nlohmann::json{{"labels", model.labels()},
                     {"input_width", model.input_width()},
                     {"input_height", model.input_height()},
                     {"weights", rows}};
}

SoftmaxPixelClassifier softmax_from_json(const nlohmann::json& j) {
  std::vector<std::string> labels;
  int width = 0;
  int height = 0;
  std::vector<double> weights;
  try {
    labels = j.at("labels").get<std::vector<std::string>>();
    width = j.at("input_width").get<int>();
    height = j.at("input_height").get<int>();
    for (const auto& row : j.at("weights")) {
      const auto values = row.get<std::vector<double>>();
      weights.insert(weights.end(), values.begin(), values.end());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadParameter, std::string("invalid softmax model: ") + e.what());
  }
  return SoftmaxPixelClassifier(std::move(labels), width, height, std::move(weights));
}

SoftmaxPixelClassifier load_softmax(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open model file " + path.string());
  try {
    return softmax_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadParameter, "invalid model file " + path.string() + ": " + e.what());
  }
}

}  // namespace limescope
