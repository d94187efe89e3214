#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limescope/classify.hpp"
#include "limescope/image.hpp"
#include "limescope/segment.hpp"

namespace limescope {

/// Presence (1) / absence (0) of each interpretable feature.
using Mask = std::vector<std::uint8_t>;

/// Sampled neighbourhood of one instance. Row 0 is the unperturbed instance.
struct PerturbationSet {
  int num_features = 0;
  std::vector<Mask> design;                      // N rows of length num_features
  std::vector<ProbabilityVector> responses;      // N rows of classifier output
  std::vector<double> weights;                   // N locality weights in (0,1]
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return design.size(); }
};

enum class DistanceMetric { Cosine, Euclidean };

struct KernelConfig {
  double sigma = 0.25;
  DistanceMetric metric = DistanceMetric::Cosine;
};

struct Fill {
  enum class Kind { SegmentMean, GlobalMean, Gray };
  Kind kind = Kind::SegmentMean;
  float gray = 0.5f;

  static Fill segment_mean() { return {}; }
  static Fill global_mean() { return {Kind::GlobalMean, 0.5f}; }
  static Fill gray_level(float v) { return {Kind::Gray, v}; }
};

struct PixelGridParams {
  int cell_size = 4;
};

using SegmentationMode = std::variant<QuickshiftParams, SlicParams, PixelGridParams>;

struct ExplainConfig {
  int num_features = 10;
  int num_samples = 300;
  KernelConfig kernel;
  double ridge_lambda = 1.0;
  Fill fill;
  SegmentationMode mode = QuickshiftParams{};
  std::uint64_t seed = 0;
};

struct Explanation {
  int target_class = 0;
  std::vector<double> coefficients;
  double intercept = 0.0;
  std::vector<int> selected;  // by |coefficient| descending, lower index on ties
  double r2 = 0.0;
  SuperpixelMap segmap;
  ExplainConfig config;
};

/// Row 0 is all ones; rows 1..n-1 are i.i.d. fair bits. When n >= 2^d every
/// mask is enumerated exactly once instead (all ones first, then by binary
/// value), so the result has 2^d rows.
std::vector<Mask> sample_perturbations(int num_features, int num_samples, std::uint64_t seed);

/// Keeps the pixels of segments with mask 1 and paints the rest with `fill`.
Image composite_image(const Image& img, const SuperpixelMap& map, const Mask& mask, const Fill& fill);

/// exp(-D(x,z)^2 / sigma^2). Euclidean D is sqrt(hamming)/sqrt(d); cosine D
/// is 1 - x.z/(|x||z|), taken as 1 when either mask is all zeros.
double kernel_weight(const Mask& x, const Mask& z, const KernelConfig& kernel);

/// Weighted ridge with an unpenalized intercept:
///   (A^T P A + lambda*J) [w; b] = A^T P y,  A = [Z 1], J = diag(1..1, 0)
/// followed by top-K selection. lambda = 0 with a rank-deficient design
/// throws SingularSystem. r2 is the weighted coefficient of determination
/// (0 when the target has no weighted variance).
Explanation fit_surrogate(const PerturbationSet& perturbations, int class_index, double lambda,
                          int num_features);

/// Segments `img` according to `mode`.
SuperpixelMap segment_image(const Image& img, const SegmentationMode& mode, int workers = 1);

/// Sample -> composite -> predict -> weight -> fit. `target` empty means the
/// arg-max class of the unperturbed image. Classifier calls are fanned out to
/// `workers` threads; results are combined by sample index, so the output
/// does not depend on the worker count.
Explanation explain_instance(const Image& img, const Classifier& classifier, const SuperpixelMap& map,
                             const ExplainConfig& config, std::optional<int> target = std::nullopt,
                             int workers = 1, PerturbationSet* perturbations_out = nullptr);

struct RenderOptions {
  int top_k = 10;
  bool positive_only = false;
  bool hide_rest = false;
};

/// Tints the first top_k selected segments (green for positive coefficients,
/// red for negative) and outlines them; hide_rest paints every other segment
/// gray 0.5. top_k = 0 returns the image unchanged.
Image render_explanation(const Image& img, const Explanation& explanation, const RenderOptions& options);

void to_json(nlohmann::json& j, const ExplainConfig& config);
void from_json(const nlohmann::json& j, ExplainConfig& config);
void to_json(nlohmann::json& j, const Explanation& explanation);
void from_json(const nlohmann::json& j, Explanation& explanation);

}  // namespace limescope
