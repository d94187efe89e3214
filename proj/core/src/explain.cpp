#include "limescope/explain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "limescope/error.hpp"
#include "limescope/rng.hpp"
#include "parallel.hpp"

namespace limescope {

namespace {

constexpr std::size_t kPredictBatch = 16;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Colour painted over each segment when it is switched off.
std::vector<float> fill_table(const Image& img, const SuperpixelMap& map, const Fill& fill) {
  const auto channels = static_cast<std::size_t>(img.channels());
  const auto segments = static_cast<std::size_t>(map.num_segments);
  std::vector<float> table(segments * channels);
  switch (fill.kind) {
    case Fill::Kind::Gray:
      std::fill(table.begin(), table.end(), fill.gray);
      break;
    case Fill::Kind::GlobalMean: {
      const auto mean = mean_color(img);
      for (std::size_t s = 0; s < segments; ++s) std::copy(mean.begin(), mean.end(), table.begin() + s * channels);
      break;
    }
    case Fill::Kind::SegmentMean: {
      std::vector<double> sums(segments * channels, 0.0);
      std::vector<std::size_t> counts(segments, 0);
      const auto data = img.data();
      for (std::size_t p = 0; p < map.labels.size(); ++p) {
        const auto s = static_cast<std::size_t>(map.labels[p]);
        ++counts[s];
        for (std::size_t c = 0; c < channels; ++c) sums[s * channels + c] += data[p * channels + c];
      }
      for (std::size_t s = 0; s < segments; ++s) {
        for (std::size_t c = 0; c < channels; ++c) {
          table[s * channels + c] =
              counts[s] == 0 ? 0.0f : static_cast<float>(sums[s * channels + c] / static_cast<double>(counts[s]));
        }
      }
      break;
    }
  }
  return table;
}

Image composite_with_table(const Image& img, const SuperpixelMap& map, const Mask& mask,
                           const std::vector<float>& table) {
  Image out = img;
  auto data = out.data();
  const auto channels = static_cast<std::size_t>(img.channels());
  for (std::size_t p = 0; p < map.labels.size(); ++p) {
    const auto s = static_cast<std::size_t>(map.labels[p]);
    if (mask[s] == 0) {
      std::copy_n(table.begin() + static_cast<std::ptrdiff_t>(s * channels), channels,
                  data.begin() + static_cast<std::ptrdiff_t>(p * channels));
    }
  }
  return out;
}

void check_map(const Image& img, const SuperpixelMap& map) {
  if (img.width() != map.width || img.height() != map.height) {
    fail(ErrorKind::DimensionMismatch, "segment map and image sizes differ");
  }
}

const char* metric_name(DistanceMetric m) { return m == DistanceMetric::Cosine ? "cosine" : "euclidean"; }

const char* fill_name(Fill::Kind k) {
  switch (k) {
    case Fill::Kind::SegmentMean: return "segment_mean";
    case Fill::Kind::GlobalMean: return "global_mean";
    case Fill::Kind::Gray: return "gray";
  }
  return "segment_mean";
}

}  // namespace

std::vector<Mask> sample_perturbations(int num_features, int num_samples, std::uint64_t seed) {
  if (num_features < 1 || num_samples < 1) {
    fail(ErrorKind::BadParameter, "perturbation sampling needs d >= 1 and n >= 1");
  }
  const auto d = static_cast<std::size_t>(num_features);
  std::vector<Mask> masks;
  if (num_features < 63 && static_cast<std::uint64_t>(num_samples) >= (std::uint64_t{1} << num_features)) {
    const std::uint64_t all = (std::uint64_t{1} << num_features) - 1;
    masks.reserve(static_cast<std::size_t>(all + 1));
    masks.emplace_back(d, std::uint8_t{1});
    for (std::uint64_t code = 0; code < all; ++code) {
      Mask m(d);
      for (std::size_t j = 0; j < d; ++j) m[j] = static_cast<std::uint8_t>((code >> j) & 1u);
      masks.push_back(std::move(m));
    }
    return masks;
  }
  Rng rng(seed);
  masks.reserve(static_cast<std::size_t>(num_samples));
  masks.emplace_back(d, std::uint8_t{1});
  for (int i = 1; i < num_samples; ++i) {
    Mask m(d);
    for (auto& bit : m) bit = rng.coin() ? 1 : 0;
    masks.push_back(std::move(m));
  }
  return masks;
}

Image composite_image(const Image& img, const SuperpixelMap& map, const Mask& mask, const Fill& fill) {
  check_map(img, map);
  if (mask.size() != static_cast<std::size_t>(map.num_segments)) {
    fail(ErrorKind::DimensionMismatch, "mask length differs from segment count");
  }
  return composite_with_table(img, map, mask, fill_table(img, map, fill));
}

double kernel_weight(const Mask& x, const Mask& z, const KernelConfig& kernel) {
  if (x.size() != z.size() || x.empty()) fail(ErrorKind::DimensionMismatch, "masks must have equal non-zero length");
  if (!(kernel.sigma > 0.0)) fail(ErrorKind::BadParameter, "kernel sigma must be positive");
  double distance = 0.0;
  if (kernel.metric == DistanceMetric::Euclidean) {
    std::size_t hamming = 0;
    for (std::size_t j = 0; j < x.size(); ++j) hamming += (x[j] != z[j]) ? 1 : 0;
    distance = std::sqrt(static_cast<double>(hamming)) / std::sqrt(static_cast<double>(x.size()));
  } else {
    std::size_t dot = 0;
    std::size_t nx = 0;
    std::size_t nz = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      dot += static_cast<std::size_t>(x[j] & z[j]);
      nx += x[j];
      nz += z[j];
    }
    distance = (nx == 0 || nz == 0)
                   ? 1.0
                   : 1.0 - static_cast<double>(dot) / (std::sqrt(static_cast<double>(nx)) * std::sqrt(static_cast<double>(nz)));
  }
  return std::exp(-(distance * distance) / (kernel.sigma * kernel.sigma));
}

SuperpixelMap segment_image(const Image& img, const SegmentationMode& mode, int workers) {
  return std::visit(overloaded{
                        [&](const QuickshiftParams& p) { return quickshift(to_rgb(img), p, workers); },
                        [&](const SlicParams& p) { return slic(to_rgb(img), p); },
                        [&](const PixelGridParams& p) { return grid_segmentation(img.width(), img.height(), p.cell_size); },
                    },
                    mode);
}

Explanation explain_instance(const Image& img, const Classifier& classifier, const SuperpixelMap& map,
                             const ExplainConfig& config, std::optional<int> target, int workers,
                             PerturbationSet* perturbations_out) {
  check_map(img, map);
  if (config.num_samples < 2) fail(ErrorKind::BadParameter, "explanations need at least 2 samples");
  if (config.num_features < 1) fail(ErrorKind::BadParameter, "explanations need at least 1 feature");
  if (config.ridge_lambda < 0.0) fail(ErrorKind::BadParameter, "ridge lambda must be >= 0");

  PerturbationSet set;
  set.num_features = map.num_segments;
  set.seed = config.seed;
  set.design = sample_perturbations(map.num_segments, config.num_samples, config.seed);
  const std::size_t n = set.design.size();

  const auto table = fill_table(img, map, config.fill);
  set.responses.resize(n);
  const std::size_t batches = (n + kPredictBatch - 1) / kPredictBatch;
  detail::parallel_for(batches, workers, [&](std::size_t first, std::size_t last) {
    for (std::size_t b = first; b < last; ++b) {
      const std::size_t begin = b * kPredictBatch;
      const std::size_t end = std::min(n, begin + kPredictBatch);
      std::vector<Image> composites;
      composites.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) composites.push_back(composite_with_table(img, map, set.design[i], table));
      auto probs = classifier.predict(composites);
      if (probs.size() != composites.size()) fail(ErrorKind::ShapeError, "classifier returned the wrong batch size");
      for (std::size_t i = begin; i < end; ++i) set.responses[i] = std::move(probs[i - begin]);
    }
  });

  set.weights.reserve(n);
  for (const Mask& m : set.design) set.weights.push_back(kernel_weight(set.design.front(), m, config.kernel));

  int target_class = 0;
  if (target) {
    target_class = *target;
  } else {
    const auto& base = set.responses.front();
    target_class = static_cast<int>(std::max_element(base.begin(), base.end()) - base.begin());
  }

  Explanation e = fit_surrogate(set, target_class, config.ridge_lambda, config.num_features);
  e.segmap = map;
  e.config = config;
  if (perturbations_out != nullptr) *perturbations_out = std::move(set);
  return e;
}

void to_json(nlohmann::json& j, const ExplainConfig& config) {
  nlohmann::json mode = std::visit(
      overloaded{
          [](const QuickshiftParams& p) {
            return nlohmann::json{{"algo", "quickshift"}, {"kernel_size", p.kernel_size}, {"max_dist", p.max_dist}, {"ratio", p.ratio}};
          },
          [](const SlicParams& p) {
            return nlohmann::json{{"algo", "slic"},
                                  {"k", p.k},
                                  {"compactness", p.compactness},
                                  {"max_iters", p.max_iters},
                                  {"enforce_connectivity", p.enforce_connectivity}};
          },
          [](const PixelGridParams& p) { return nlohmann::json{{"algo", "grid"}, {"cell_size", p.cell_size}}; },
      },
      config.mode);
  j = nlohmann::json{{"num_features", config.num_features},
                     {"num_samples", config.num_samples},
                     {"kernel", {{"sigma", config.kernel.sigma}, {"metric", metric_name(config.kernel.metric)}}},
                     {"ridge_lambda", config.ridge_lambda},
                     {"fill", {{"kind", fill_name(config.fill.kind)}, {"value", config.fill.gray}}},
                     {"mode", mode},
                     {"seed", config.seed}};
}

void from_json(const nlohmann::json& j, ExplainConfig& config) {
  config.num_features = j.at("num_features").get<int>();
  config.num_samples = j.at("num_samples").get<int>();
  config.kernel.sigma = j.at("kernel").at("sigma").get<double>();
  config.kernel.metric =
      j.at("kernel").at("metric").get<std::string>() == "euclidean" ? DistanceMetric::Euclidean : DistanceMetric::Cosine;
  config.ridge_lambda = j.at("ridge_lambda").get<double>();
  const auto fill = j.at("fill").at("kind").get<std::string>();
  config.fill.kind = fill == "gray" ? Fill::Kind::Gray : fill == "global_mean" ? Fill::Kind::GlobalMean : Fill::Kind::SegmentMean;
  config.fill.gray = j.at("fill").at("value").get<float>();
  const auto& mode = j.at("mode");
  const auto algo = mode.at("algo").get<std::string>();
  if (algo == "quickshift") {
    config.mode = QuickshiftParams{mode.at("kernel_size").get<double>(), mode.at("max_dist").get<double>(),
                                   mode.at("ratio").get<double>()};
  } else if (algo == "slic") {
    config.mode = SlicParams{mode.at("k").get<int>(), mode.at("compactness").get<double>(), mode.at("max_iters").get<int>(),
                             mode.at("enforce_connectivity").get<bool>()};
  } else {
    config.mode = PixelGridParams{mode.at("cell_size").get<int>()};
  }
  config.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const Explanation& e) {
  j = nlohmann::json{{"target_class", e.target_class}, {"coefficients", e.coefficients},
                     {"intercept", e.intercept},       {"selected", e.selected},
                     {"r2", e.r2},                     {"config", e.config},
                     {"segmap", e.segmap}};
}

void from_json(const nlohmann::json& j, Explanation& e) {
  e.target_class = j.at("target_class").get<int>();
  e.coefficients = j.at("coefficients").get<std::vector<double>>();
  e.intercept = j.at("intercept").get<double>();
  e.selected = j.at("selected").get<std::vector<int>>();
  e.r2 = j.at("r2").get<double>();
  if (j.contains("config")) e.config = j.at("config").get<ExplainConfig>();
  if (j.contains("segmap")) e.segmap = j.at("segmap").get<SuperpixelMap>();
}

}  // namespace limescope
