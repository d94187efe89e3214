#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "limescope/image.hpp"

namespace limescope {

/// Per-pixel segment ids. Labels are dense (exactly 0..num_segments-1) and
/// numbered in row-major order of first occurrence.
struct SuperpixelMap {
  int width = 0;
  int height = 0;
  int num_segments = 0;
  std::vector<int> labels;  // row-major

  int at(int x, int y) const noexcept {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }

  /// Pixel count per segment.
  std::vector<std::size_t> segment_sizes() const;

  bool operator==(const SuperpixelMap&) const = default;
};

/// Renumbers arbitrary non-negative ids densely in row-major first-occurrence order.
SuperpixelMap relabel_dense(int width, int height, const std::vector<int>& ids);

struct QuickshiftParams {
  double kernel_size = 2.0;  // Gaussian bandwidth of the Parzen density, pixels
  double max_dist = 100.0;   // longest parent link in the joint feature space
  double ratio = 0.1;        // weight of Lab colour against (x, y)
};

struct SlicParams {
  int k = 100;
  double compactness = 10.0;
  int max_iters = 10;
  bool enforce_connectivity = true;
};

/// Mode seeking over the joint (ratio*L, ratio*a, ratio*b, x, y) space.
///
/// Density at each pixel is a truncated Parzen sum over the in-image pixels of
/// a (2W+1)^2 window, W = ceil(3*kernel_size). Each pixel links to the nearest
/// pixel in the same window with strictly higher density whose feature
/// distance is at most max_dist (equal distances go to the lower row-major
/// index); pixels without
/// such a neighbour are roots and each root's tree is one segment. The output
/// is identical for every `workers` value.
SuperpixelMap quickshift(const Image& img, const QuickshiftParams& params, int workers = 1);

/// Simple linear iterative clustering in (L, a, b, x, y) with
/// d = sqrt(d_lab^2 + (m/S)^2 d_xy^2), S = sqrt(w*h/k).
SuperpixelMap slic(const Image& img, const SlicParams& params);

/// Splits every label into its 4-connected components, then absorbs components
/// smaller than (w*h/num_segments)/4 into their largest 4-adjacent neighbour.
SuperpixelMap enforce_connectivity(const SuperpixelMap& map);

/// Square cells of `cell_size` pixels (the last row/column may be narrower).
SuperpixelMap grid_segmentation(int width, int height, int cell_size);

/// Deterministic colour per label, for visual inspection.
Image render_segments(const SuperpixelMap& map);

/// Same map with 1-pixel label-transition boundaries drawn over `img`.
Image draw_boundaries(const Image& img, const SuperpixelMap& map, const float (&color)[3]);

void to_json(nlohmann::json& j, const SuperpixelMap& map);
void from_json(const nlohmann::json& j, SuperpixelMap& map);

}  // namespace limescope
