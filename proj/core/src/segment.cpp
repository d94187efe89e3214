#include "limescope/segment.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "limescope/error.hpp"
#include "limescope/rng.hpp"

namespace limescope {

std::vector<std::size_t> SuperpixelMap::segment_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(num_segments), 0);
  for (int label : labels) ++sizes[static_cast<std::size_t>(label)];
  return sizes;
}

SuperpixelMap relabel_dense(int width, int height, const std::vector<int>& ids) {
  if (width < 1 || height < 1 ||
      ids.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorKind::DimensionMismatch, "label buffer does not match map dimensions");
  }
  const int max_id = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end());
  std::vector<int> remap(static_cast<std::size_t>(max_id) + 1, -1);
  SuperpixelMap map{width, height, 0, std::vector<int>(ids.size())};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0) fail(ErrorKind::BadParameter, "segment ids must be non-negative");
    int& slot = remap[static_cast<std::size_t>(ids[i])];
    if (slot < 0) slot = map.num_segments++;
    map.labels[i] = slot;
  }
  return map;
}

SuperpixelMap enforce_connectivity(const SuperpixelMap& map) {
  const int w = map.width;
  const int h = map.height;
  const std::size_t n = map.labels.size();

  // 4-connected components, numbered in row-major order of first pixel.
  std::vector<int> component(n, -1);
  std::vector<std::size_t> size;
  std::vector<int> queue;
  queue.reserve(n);
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(size.size());
    const int label = map.labels[start];
    component[start] = id;
    queue.clear();
    queue.push_back(static_cast<int>(start));
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int p = queue[head];
      const int x = p % w;
      const int y = p / w;
      const int neighbours[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& nb : neighbours) {
        if (nb[0] < 0 || nb[1] < 0 || nb[0] >= w || nb[1] >= h) continue;
        const auto q = static_cast<std::size_t>(nb[1]) * static_cast<std::size_t>(w) +
                       static_cast<std::size_t>(nb[0]);
        if (component[q] < 0 && map.labels[q] == label) {
          component[q] = id;
          queue.push_back(static_cast<int>(q));
        }
      }
    }
    size.push_back(queue.size());
  }

  const std::size_t count = size.size();
  std::vector<std::set<int>> adjacent(count);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto p = static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x);
      if (x + 1 < w && component[p + 1] != component[p]) {
        adjacent[static_cast<std::size_t>(component[p])].insert(component[p + 1]);
        adjacent[static_cast<std::size_t>(component[p + 1])].insert(component[p]);
      }
      if (y + 1 < h && component[p + static_cast<std::size_t>(w)] != component[p]) {
        const int below = component[p + static_cast<std::size_t>(w)];
        adjacent[static_cast<std::size_t>(component[p])].insert(below);
        adjacent[static_cast<std::size_t>(below)].insert(component[p]);
      }
    }
  }

  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int c) {
    while (parent[static_cast<std::size_t>(c)] != c) {
      parent[static_cast<std::size_t>(c)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(c)])];
      c = parent[static_cast<std::size_t>(c)];
    }
    return c;
  };

  const double threshold =
      static_cast<double>(n) / static_cast<double>(std::max(1, map.num_segments)) / 4.0;
  for (std::size_t c = 0; c < count; ++c) {
    const int root = find(static_cast<int>(c));
    if (static_cast<double>(size[static_cast<std::size_t>(root)]) >= threshold) continue;
    int best = -1;
    for (int nb : adjacent[static_cast<std::size_t>(root)]) {
      const int other = find(nb);
      if (other == root) continue;
      if (best < 0 || size[static_cast<std::size_t>(other)] > size[static_cast<std::size_t>(best)] ||
          (size[static_cast<std::size_t>(other)] == size[static_cast<std::size_t>(best)] && other < best)) {
        best = other;
      }
    }
    if (best < 0) continue;
    parent[static_cast<std::size_t>(root)] = best;
    size[static_cast<std::size_t>(best)] += size[static_cast<std::size_t>(root)];
    auto& into = adjacent[static_cast<std::size_t>(best)];
    into.insert(adjacent[static_cast<std::size_t>(root)].begin(), adjacent[static_cast<std::size_t>(root)].end());
    adjacent[static_cast<std::size_t>(root)].clear();
  }

  std::vector<int> ids(n);
  for (std::size_t p = 0; p < n; ++p) ids[p] = find(component[p]);
  return relabel_dense(w, h, ids);
}

SuperpixelMap grid_segmentation(int width, int height, int cell_size) {
  if (cell_size < 1) fail(ErrorKind::BadParameter, "grid cell size must be at least 1");
  const int columns = (width + cell_size - 1) / cell_size;
  std::vector<int> ids(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      ids[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
          (y / cell_size) * columns + x / cell_size;
    }
  }
  return relabel_dense(width, height, ids);
}

Image render_segments(const SuperpixelMap& map) {
  Image out(map.width, map.height, 3);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::uint64_t hash = derive_seed(0x5e9, static_cast<std::uint64_t>(map.at(x, y)));
      auto px = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        px[static_cast<std::size_t>(c)] = static_cast<float>((hash >> (8 * c)) & 0xff) / 255.0f;
      }
    }
  }
  return out;
}

Image draw_boundaries(const Image& img, const SuperpixelMap& map, const float (&color)[3]) {
  if (img.width() != map.width || img.height() != map.height) {
    fail(ErrorKind::DimensionMismatch, "segment map and image sizes differ");
  }
  Image out = to_rgb(img);
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const int label = map.at(x, y);
      const bool edge = (x + 1 < map.width && map.at(x + 1, y) != label) ||
                        (y + 1 < map.height && map.at(x, y + 1) != label);
      if (edge) std::copy(std::begin(color), std::end(color), out.pixel(x, y).begin());
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const SuperpixelMap& map) {
  j = nlohmann::json{{"width", map.width},
                     {"height", map.height},
                     {"num_segments", map.num_segments},
                     {"labels", map.labels}};
}

void from_json(const nlohmann::json& j, SuperpixelMap& map) {
  const int width = j.at("width").get<int>();
  const int height = j.at("height").get<int>();
  const auto ids = j.at("labels").get<std::vector<int>>();
  map = relabel_dense(width, height, ids);
  if (map.num_segments != j.at("num_segments").get<int>() || map.labels != ids) {
    fail(ErrorKind::BadParameter, "segment map labels are not dense first-occurrence ids");
  }
}

}  // namespace limescope
