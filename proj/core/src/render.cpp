#include <algorithm>

#include "limescope/error.hpp"
#include "limescope/explain.hpp"

namespace limescope {

namespace {

enum Mark : std::uint8_t { kNone = 0, kPositive = 1, kNegative = 2 };

}  // namespace

Image render_explanation(const Image& img, const Explanation& explanation, const RenderOptions& options) {
  const SuperpixelMap& map = explanation.segmap;
  if (img.width() != map.width || img.height() != map.height) {
    fail(ErrorKind::DimensionMismatch, "explanation segment map and image sizes differ");
  }
  if (options.top_k <= 0) return img;

  std::vector<std::uint8_t> mark(static_cast<std::size_t>(map.num_segments), kNone);
  const auto count = std::min(explanation.selected.size(), static_cast<std::size_t>(options.top_k));
  for (std::size_t i = 0; i < count; ++i) {
    const int s = explanation.selected[i];
    const double coef = explanation.coefficients.at(static_cast<std::size_t>(s));
    if (coef < 0.0 && options.positive_only) continue;
    mark.at(static_cast<std::size_t>(s)) = coef < 0.0 ? kNegative : kPositive;
  }

  Image out = to_rgb(img);
  constexpr float kGreen[3] = {0.0f, 1.0f, 0.0f};
  constexpr float kRed[3] = {1.0f, 0.0f, 0.0f};
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const int label = map.at(x, y);
      const auto m = mark[static_cast<std::size_t>(label)];
      auto px = out.pixel(x, y);
      if (m == kNone) {
        if (options.hide_rest) std::fill(px.begin(), px.end(), 0.5f);
        continue;
      }
      const float* tint = m == kPositive ? kGreen : kRed;
      const bool boundary = (x > 0 && map.at(x - 1, y) != label) || (x + 1 < map.width && map.at(x + 1, y) != label) ||
                            (y > 0 && map.at(x, y - 1) != label) || (y + 1 < map.height && map.at(x, y + 1) != label);
      for (std::size_t c = 0; c < 3; ++c) px[c] = boundary ? tint[c] : 0.5f * px[c] + 0.5f * tint[c];
    }
  }
  return out;
}

}  // namespace limescope
