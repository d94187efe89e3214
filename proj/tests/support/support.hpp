#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "limescope/datakit.hpp"
#include "limescope/explain.hpp"
#include "limescope/image.hpp"
#include "limescope/pick.hpp"
#include "limescope/segment.hpp"

namespace limescope::test {

Image constant_image(int w, int h, float r, float g, float b);
/// Left half black, right half white (split at w/2).
Image halves_image(int w, int h);
Image random_image(int w, int h, std::uint64_t seed, int channels = 3);
/// Smooth diagonal ramp in every channel.
Image gradient_image(int w, int h);

/// Self-removing scratch directory.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Path of the protocol test server binary.
std::string fake_classifier();

std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality);
std::vector<std::uint8_t> encode_gray_png(int w, int h, const std::vector<std::uint8_t>& samples);

// --- Oracles ---------------------------------------------------------------

/// O(n^2) quickshift: density over the same truncated window, parent chosen
/// by scanning every pixel.
SuperpixelMap brute_quickshift(const Image& img, const QuickshiftParams& params);

/// True when both maps induce the same partition of pixels.
bool same_partition(const SuperpixelMap& a, const SuperpixelMap& b);

/// Number of 4-connected components, by flood fill.
int count_components(const SuperpixelMap& map);
/// Labels are exactly 0..num_segments-1 and the map covers every pixel.
bool dense_and_covering(const SuperpixelMap& map);

/// Solves the augmented weighted ridge normal equations in long double by
/// Gaussian elimination with partial pivoting. Returns [w..., b].
std::vector<long double> normal_equation_solve(const std::vector<Mask>& z, const std::vector<double>& y,
                                               const std::vector<double>& weights, double lambda);

/// Best coverage over every subset of size <= budget.
double exhaustive_coverage(const ExplanationMatrix& w, std::size_t budget);

/// Manifest with `counts[c]` items named "<class>/<i>.png", no files on disk.
DatasetManifest synthetic_manifest(const std::vector<std::size_t>& counts);

}  // namespace limescope::test
