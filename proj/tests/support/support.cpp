#include "support.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

#include "limescope/rng.hpp"

namespace limescope::test {

Image constant_image(int w, int h, float r, float g, float b) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto px = img.pixel(x, y);
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
  }
  return img;
}

Image halves_image(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = w / 2; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0f;
    }
  }
  return img;
}

Image random_image(int w, int h, std::uint64_t seed, int channels) {
  Rng rng(seed);
  Image img(w, h, channels);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

Image gradient_image(int w, int h) {
  Image img(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float t = static_cast<float>(x + y) / static_cast<float>(std::max(1, w + h - 2));
      img.at(x, y, 0) = t;
      img.at(x, y, 1) = 1.0f - t;
      img.at(x, y, 2) = 0.5f * t + 0.25f;
    }
  }
  return img;
}

TempDir::TempDir() {
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    auto candidate = base / ("limescope-test-" + std::to_string(rd()));
    if (std::filesystem::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string fake_classifier() { return LIMESCOPE_FAKE_CLASSIFIER; }

namespace {

struct JpegError {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

}  // namespace

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
  jpeg_compress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = [](j_common_ptr info) { std::longjmp(reinterpret_cast<JpegError*>(info->err)->jump, 1); };
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw std::runtime_error("jpeg encode failed");
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  const Image rgb = to_rgb(img);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(img.width()) * 3);
  while (cinfo.next_scanline < cinfo.image_height) {
    const int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        row[static_cast<std::size_t>(x) * 3 + static_cast<std::size_t>(c)] =
            static_cast<JSAMPLE>(std::lround(rgb.at(x, y, c) * 255.0f));
      }
    }
    JSAMPROW ptr = row.data();
    jpeg_write_scanlines(&cinfo, &ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

std::vector<std::uint8_t> encode_gray_png(int w, int h, const std::vector<std::uint8_t>& samples) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, samples.data(), 0, nullptr)) {
    throw std::runtime_error("png size query failed");
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, samples.data(), 0, nullptr)) {
    throw std::runtime_error("png encode failed");
  }
  out.resize(size);
  return out;
}

SuperpixelMap brute_quickshift(const Image& img, const QuickshiftParams& params) {
  const int w = img.width();
  const int h = img.height();
  const auto n = static_cast<int>(img.pixel_count());
  const LabImage lab = rgb_to_lab(img);
  std::vector<std::array<double, 5>> f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& c = lab.pixels[static_cast<std::size_t>(i)];
    f[static_cast<std::size_t>(i)] = {params.ratio * c.L, params.ratio * c.a, params.ratio * c.b,
                                      static_cast<double>(i % w), static_cast<double>(i / w)};
  }
  auto d2 = [&](int i, int j) {
    const auto& p = f[static_cast<std::size_t>(i)];
    const auto& q = f[static_cast<std::size_t>(j)];
    const double d0 = p[0] - q[0], d1 = p[1] - q[1], dd2 = p[2] - q[2], d3 = p[3] - q[3], d4 = p[4] - q[4];
    return d0 * d0 + d1 * d1 + dd2 * dd2 + d3 * d3 + d4 * d4;
  };
  const int window = static_cast<int>(std::ceil(3.0 * params.kernel_size));
  const double inv = 1.0 / (2.0 * params.kernel_size * params.kernel_size);
  std::vector<double> density(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (std::abs(i % w - j % w) <= window && std::abs(i / w - j / w) <= window) {
        density[static_cast<std::size_t>(i)] += std::exp(-d2(i, j) * inv);
      }
    }
  }
  const double max2 = params.max_dist * params.max_dist;
  std::vector<int> parent(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int best = i;
    double best_d = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!(density[static_cast<std::size_t>(j)] > density[static_cast<std::size_t>(i)])) continue;
      if (std::abs(i % w - j % w) > window || std::abs(i / w - j / w) > window) continue;
      const double d = d2(i, j);
      if (d > max2) continue;
      if (best == i || d < best_d) {
        best = j;
        best_d = d;
      }
    }
    parent[static_cast<std::size_t>(i)] = best;
  }
  std::vector<int> root(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int p = i;
    while (parent[static_cast<std::size_t>(p)] != p) p = parent[static_cast<std::size_t>(p)];
    root[static_cast<std::size_t>(i)] = p;
  }
  return relabel_dense(w, h, root);
}

bool same_partition(const SuperpixelMap& a, const SuperpixelMap& b) {
  if (a.width != b.width || a.height != b.height || a.labels.size() != b.labels.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const auto [it1, new1] = ab.emplace(a.labels[i], b.labels[i]);
    const auto [it2, new2] = ba.emplace(b.labels[i], a.labels[i]);
    if (it1->second != b.labels[i] || it2->second != a.labels[i]) return false;
  }
  return true;
}

int count_components(const SuperpixelMap& map) {
  const int w = map.width;
  const int h = map.height;
  std::vector<bool> seen(map.labels.size(), false);
  int components = 0;
  for (int start = 0; start < w * h; ++start) {
    if (seen[static_cast<std::size_t>(start)]) continue;
    ++components;
    const int label = map.labels[static_cast<std::size_t>(start)];
    std::queue<int> q;
    q.push(start);
    seen[static_cast<std::size_t>(start)] = true;
    while (!q.empty()) {
      const int p = q.front();
      q.pop();
      const int x = p % w;
      const int y = p / w;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const int q2 = ny[k] * w + nx[k];
        if (seen[static_cast<std::size_t>(q2)] || map.labels[static_cast<std::size_t>(q2)] != label) continue;
        seen[static_cast<std::size_t>(q2)] = true;
        q.push(q2);
      }
    }
  }
  return components;
}

bool dense_and_covering(const SuperpixelMap& map) {
  if (map.labels.size() != static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height)) return false;
  if (map.num_segments < 1) return false;
  std::vector<bool> used(static_cast<std::size_t>(map.num_segments), false);
  for (int l : map.labels) {
    if (l < 0 || l >= map.num_segments) return false;
    used[static_cast<std::size_t>(l)] = true;
  }
  return std::all_of(used.begin(), used.end(), [](bool u) { return u; });
}

std::vector<long double> normal_equation_solve(const std::vector<Mask>& z, const std::vector<double>& y,
                                               const std::vector<double>& weights, double lambda) {
  const std::size_t d = z.front().size();
  const std::size_t m = d + 1;
  std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0.0L));
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::vector<long double> row(z[i].begin(), z[i].end());
    row.push_back(1.0L);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < m; ++c) a[r][c] += weights[i] * row[r] * row[c];
      a[r][m] += weights[i] * row[r] * y[i];
    }
  }
  for (std::size_t r = 0; r < d; ++r) a[r][r] += lambda;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < m; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col) continue;
      const long double factor = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  std::vector<long double> x(m);
  for (std::size_t r = 0; r < m; ++r) x[r] = a[r][m] / a[r][r];
  return x;
}

double exhaustive_coverage(const ExplanationMatrix& w, std::size_t budget) {
  const auto importance = feature_importance(w);
  double best = 0.0;
  const std::size_t n = w.rows;
  for (std::uint32_t subset = 0; subset < (1u << n); ++subset) {
    if (static_cast<std::size_t>(std::popcount(subset)) > budget) continue;
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < n; ++i) {
      if (subset & (1u << i)) chosen.push_back(i);
    }
    best = std::max(best, coverage(w, importance, chosen));
  }
  return best;
}

DatasetManifest synthetic_manifest(const std::vector<std::size_t>& counts) {
  DatasetManifest m;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::string name = "class" + std::to_string(c);
    m.classes.push_back(name);
    for (std::size_t i = 0; i < counts[c]; ++i) m.items.push_back({name + "/" + std::to_string(i) + ".png", name, {}});
  }
  return m;
}

}  // namespace limescope::test
