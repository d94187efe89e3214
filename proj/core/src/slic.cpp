#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "limescope/error.hpp"
#include "limescope/segment.hpp"

namespace limescope {

namespace {

struct Center {
  double L, a, b, x, y;
};

double lab_distance2(const LabPixel& p, const LabPixel& q) {
  const double dl = p.L - q.L;
  const double da = p.a - q.a;
  const double db = p.b - q.b;
  return dl * dl + da * da + db * db;
}

double gradient(const LabImage& lab, int x, int y) {
  const int xl = std::max(0, x - 1);
  const int xr = std::min(lab.width - 1, x + 1);
  const int yu = std::max(0, y - 1);
  const int yd = std::min(lab.height - 1, y + 1);
  return lab_distance2(lab.at(xr, y), lab.at(xl, y)) + lab_distance2(lab.at(x, yd), lab.at(x, yu));
}

}  // namespace

SuperpixelMap slic(const Image& img, const SlicParams& params) {
  if (img.channels() != 3) fail(ErrorKind::ChannelMismatch, "slic requires a 3-channel image");
  const int w = img.width();
  const int h = img.height();
  const auto n = img.pixel_count();
  if (params.k < 1 || static_cast<std::size_t>(params.k) > n) {
    fail(ErrorKind::BadParameter, "slic k must be in [1, pixel count]");
  }
  if (params.max_iters < 1 || !(params.compactness > 0.0)) {
    fail(ErrorKind::BadParameter, "slic needs max_iters >= 1 and compactness > 0");
  }

  const LabImage lab = rgb_to_lab(img);
  const double step = std::sqrt(static_cast<double>(n) / params.k);
  const double spatial_weight = (params.compactness / step) * (params.compactness / step);

  // Grid with roughly k cells shaped after the image aspect ratio.
  const int nx = std::clamp(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(params.k) * w / h))), 1, w);
  const int ny = std::clamp(static_cast<int>(std::lround(static_cast<double>(params.k) / nx)), 1, h);

  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int cx = std::min(w - 1, static_cast<int>(std::floor((i + 0.5) * w / nx)));
      int cy = std::min(h - 1, static_cast<int>(std::floor((j + 0.5) * h / ny)));
      // Move off edges: lowest gradient in the 3x3 neighbourhood, current pixel on ties.
      double best = gradient(lab, cx, cy);
      const int ox = cx;
      const int oy = cy;
      for (int yy = std::max(0, oy - 1); yy <= std::min(h - 1, oy + 1); ++yy) {
        for (int xx = std::max(0, ox - 1); xx <= std::min(w - 1, ox + 1); ++xx) {
          const double g = gradient(lab, xx, yy);
          if (g < best) {
            best = g;
            cx = xx;
            cy = yy;
          }
        }
      }
      const auto& c = lab.at(cx, cy);
      centers.push_back({c.L, c.a, c.b, static_cast<double>(cx), static_cast<double>(cy)});
    }
  }

  std::vector<int> label(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      label[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          (y * ny / h) * nx + x * nx / w;
    }
  }

  std::vector<double> distance(n);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::fill(distance.begin(), distance.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - step)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + step)));
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - step)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + step)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
          const auto& px = lab.at(x, y);
          const double dl = px.L - c.L;
          const double da = px.a - c.a;
          const double db = px.b - c.b;
          const double dx = x - c.x;
          const double dy = y - c.y;
          const double d = dl * dl + da * da + db * db + spatial_weight * (dx * dx + dy * dy);
          if (d < distance[p]) {
            distance[p] = d;
            label[p] = static_cast<int>(k);
          }
        }
      }
    }

    std::vector<Center> sums(centers.size(), Center{0, 0, 0, 0, 0});
    std::vector<std::size_t> counts(centers.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
        const auto k = static_cast<std::size_t>(label[p]);
        const auto& px = lab.at(x, y);
        sums[k].L += px.L;
        sums[k].a += px.a;
        sums[k].b += px.b;
        sums[k].x += x;
        sums[k].y += y;
        ++counts[k];
      }
    }
    double movement = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (counts[k] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[k]);
      const Center next{sums[k].L * inv, sums[k].a * inv, sums[k].b * inv, sums[k].x * inv, sums[k].y * inv};
      movement = std::max(movement, std::hypot(next.x - centers[k].x, next.y - centers[k].y));
      centers[k] = next;
    }
    if (movement < 0.25) break;
  }

  SuperpixelMap map = relabel_dense(w, h, label);
  if (params.enforce_connectivity) map = enforce_connectivity(map);
  return map;
}

}  // namespace limescope
