#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limescope/image.hpp"

namespace limescope {

using ProbabilityVector = std::vector<double>;

/// The black box being explained. predict() is the only entry point and takes
/// a batch so implementations can amortize per-call overhead; output order
/// matches input order and every vector lies on the probability simplex.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual const std::vector<std::string>& labels() const = 0;
  virtual std::vector<ProbabilityVector> predict(std::span<const Image> batch) const = 0;
};

struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive
};

/// Logistic on the mean intensity inside a fixed rectangle. The evidence
/// region is known by construction, which makes it a ground-truth oracle for
/// explanation tests. Labels are {"negative", "positive"}.
class RegionBrightnessClassifier final : public Classifier {
 public:
  RegionBrightnessClassifier(Rect rect, double threshold = 0.5, double steepness = 20.0);

  const std::vector<std::string>& labels() const override { return labels_; }
  std::vector<ProbabilityVector> predict(std::span<const Image> batch) const override;

  const Rect& rect() const noexcept { return rect_; }

 private:
  Rect rect_;
  double threshold_;
  double steepness_;
  std::vector<std::string> labels_{"negative", "positive"};
};

/// Multinomial logistic regression on the image resampled to input_width x
/// input_height RGB. weights is row-major [classes x (input_width*input_height*3 + 1)],
/// the last column being the bias.
class SoftmaxPixelClassifier final : public Classifier {
 public:
  SoftmaxPixelClassifier(std::vector<std::string> labels, int input_width, int input_height,
                         std::vector<double> weights);
  /// All-zero weights.
  SoftmaxPixelClassifier(std::vector<std::string> labels, int input_width, int input_height);

  const std::vector<std::string>& labels() const override { return labels_; }
  std::vector<ProbabilityVector> predict(std::span<const Image> batch) const override;

  int input_width() const noexcept { return input_width_; }
  int input_height() const noexcept { return input_height_; }
  std::size_t feature_count() const noexcept;  // including the bias column
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> weights() noexcept { return weights_; }

  /// Input features for one image: resampled RGB samples followed by 1.
  std::vector<double> features(const Image& img) const;

 private:
  std::vector<std::string> labels_;
  int input_width_;
  int input_height_;
  std::vector<double> weights_;
};

void to_json(nlohmann::json& j, const SoftmaxPixelClassifier& model);
SoftmaxPixelClassifier softmax_from_json(const nlohmann::json& j);
SoftmaxPixelClassifier load_softmax(const std::filesystem::path& path);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 50;
  double l2 = 1e-4;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int input_width = 16;
  int input_height = 16;
};

struct TrainResult {
  SoftmaxPixelClassifier model;
  std::vector<double> loss_trace;  // full-set objective after each epoch
};

/// Mean cross-entropy plus (l2/2)*||W||^2 over the non-bias weights.
/// When `gradient` is non-null it receives d(objective)/d(weights) in the
/// model's weight layout.
double softmax_objective(const SoftmaxPixelClassifier& model, std::span<const Image> images,
                         std::span<const int> targets, double l2,
                         std::vector<double>* gradient = nullptr);

/// Mini-batch gradient descent from zero weights; deterministic given the seed.
TrainResult train_softmax(std::span<const Image> images, std::span<const int> targets,
                          std::vector<std::string> labels, const TrainConfig& config);

/// Client side of the line-delimited JSON protocol spoken over a child
/// process's stdin/stdout. Requests are serialized: one in flight at a time,
/// so replies come back in request order.
class ExternalClassifier final : public Classifier {
 public:
  ~ExternalClassifier() override;
  ExternalClassifier(const ExternalClassifier&) = delete;
  ExternalClassifier& operator=(const ExternalClassifier&) = delete;

  const std::vector<std::string>& labels() const override { return labels_; }
  std::vector<ProbabilityVector> predict(std::span<const Image> batch) const override;

  int pid() const noexcept { return pid_; }

 private:
  friend std::unique_ptr<ExternalClassifier> connect_external(const std::vector<std::string>&, int);
  ExternalClassifier(int pid, int fd, int timeout_ms);

  std::string read_line() const;
  void write_all(const std::string& text) const;

  int pid_;
  int fd_;
  int timeout_ms_;
  std::vector<std::string> labels_;
  mutable std::mutex mutex_;
  mutable std::string buffer_;
  mutable std::uint64_t next_id_ = 1;
};

/// Spawns `command` (argv[0] looked up on PATH) and completes the hello
/// handshake within timeout_ms.
std::unique_ptr<ExternalClassifier> connect_external(const std::vector<std::string>& command,
                                                     int timeout_ms = 10000);

/// Wire encoding of an image: base64 of little-endian float32 samples.
std::string encode_pixels(const Image& img);
std::vector<float> decode_pixels(std::string_view base64);

/// Builds a classifier from `region:x0,y0,x1,y1[,threshold[,steepness]]`,
/// `softmax:<weights.json>` (alias `file:`) or `external:<command line>`.
std::unique_ptr<Classifier> make_classifier(std::string_view spec, int timeout_ms = 10000);

}  // namespace limescope
