#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "limescope/error.hpp"
#include "limescope/segment.hpp"
#include "parallel.hpp"

namespace limescope {

namespace {

using Feature = std::array<double, 5>;

// Squared distance, summed in a fixed component order so that every caller
// (including reference implementations) sees bitwise-identical values.
inline double squared_distance(const Feature& p, const Feature& q) {
  const double d0 = p[0] - q[0];
  const double d1 = p[1] - q[1];
  const double d2 = p[2] - q[2];
  const double d3 = p[3] - q[3];
  const double d4 = p[4] - q[4];
  return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4;
}

}  // namespace

SuperpixelMap quickshift(const Image& img, const QuickshiftParams& params, int workers) {
  if (img.channels() != 3) fail(ErrorKind::ChannelMismatch, "quickshift requires a 3-channel image");
  if (!(params.kernel_size > 0.0) || !(params.max_dist > 0.0) || !(params.ratio > 0.0) ||
      params.ratio > 1.0) {
    fail(ErrorKind::BadParameter, "quickshift needs kernel_size > 0, max_dist > 0, ratio in (0,1]");
  }

  const int w = img.width();
  const int h = img.height();
  const auto n = img.pixel_count();
  const LabImage lab = rgb_to_lab(img);

  std::vector<Feature> features(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& c = lab.at(x, y);
      features[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = {
          params.ratio * c.L, params.ratio * c.a, params.ratio * c.b, static_cast<double>(x),
          static_cast<double>(y)};
    }
  }

  const int window = static_cast<int>(std::ceil(3.0 * params.kernel_size));
  const double inv_two_sigma2 = 1.0 / (2.0 * params.kernel_size * params.kernel_size);
  std::vector<double> density(n, 0.0);
  detail::parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row_begin, std::size_t row_end) {
    for (auto y = static_cast<int>(row_begin); y < static_cast<int>(row_end); ++y) {
      for (int x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        double sum = 0.0;
        for (int yy = std::max(0, y - window); yy <= std::min(h - 1, y + window); ++yy) {
          for (int xx = std::max(0, x - window); xx <= std::min(w - 1, x + window); ++xx) {
            const auto j = static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx);
            sum += std::exp(-squared_distance(features[i], features[j]) * inv_two_sigma2);
          }
        }
        density[i] = sum;
      }
    }
  });

  // Parent search covers the density window, walking Chebyshev rings outward.
  // Every pixel on ring r is at least r away in feature space, so the walk
  // stops once r^2 exceeds the best squared distance found (or max_dist^2).
  const double max2 = params.max_dist * params.max_dist;
  const int max_ring = std::min(static_cast<int>(std::floor(params.max_dist)), window);
  std::vector<int> parent(n);
  detail::parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row_begin, std::size_t row_end) {
    for (auto y = static_cast<int>(row_begin); y < static_cast<int>(row_end); ++y) {
      for (int x = 0; x < w; ++x) {
        const auto i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        int best = -1;
        double best_d2 = max2;
        auto consider = [&](int xx, int yy) {
          const auto j = static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(xx);
          if (!(density[j] > density[i])) return;
          const double d2 = squared_distance(features[i], features[j]);
          if (d2 > max2) return;
          if (best < 0 || d2 < best_d2 || (d2 == best_d2 && static_cast<int>(j) < best)) {
            best = static_cast<int>(j);
            best_d2 = d2;
          }
        };
        for (int r = 1; r <= max_ring; ++r) {
          if (static_cast<double>(r) * r > best_d2) break;
          const int y0 = y - r;
          const int y1 = y + r;
          for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
            if (y0 >= 0) consider(xx, y0);
            if (y1 < h) consider(xx, y1);
          }
          for (int yy = std::max(0, y - r + 1); yy <= std::min(h - 1, y + r - 1); ++yy) {
            if (x - r >= 0) consider(x - r, yy);
            if (x + r < w) consider(x + r, yy);
          }
        }
        parent[i] = best < 0 ? static_cast<int>(i) : best;
      }
    }
  });

  // Density strictly increases along parent links, so every chain ends at a root.
  std::vector<int> root(n, -1);
  std::vector<int> chain;
  for (std::size_t i = 0; i < n; ++i) {
    if (root[i] >= 0) continue;
    chain.clear();
    auto p = static_cast<int>(i);
    while (root[static_cast<std::size_t>(p)] < 0 && parent[static_cast<std::size_t>(p)] != p) {
      chain.push_back(p);
      p = parent[static_cast<std::size_t>(p)];
    }
    const int r = root[static_cast<std::size_t>(p)] >= 0 ? root[static_cast<std::size_t>(p)] : p;
    root[static_cast<std::size_t>(p)] = r;
    for (int q : chain) root[static_cast<std::size_t>(q)] = r;
  }
  return relabel_dense(w, h, root);
}

}  // namespace limescope
