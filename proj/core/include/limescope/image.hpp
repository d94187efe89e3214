#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace limescope {

/// Dense raster of samples in [0,1], row-major and channel-interleaved.
/// Channels is 1 (gray) or 3 (RGB). Width and height are at least 1.
class Image {
 public:
  Image(int width, int height, int channels, float fill = 0.0f);
  /// Takes ownership of `data`; throws BadParameter when the length does not
  /// match the shape or any sample is non-finite or outside [0,1].
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t size() const noexcept { return data_.size(); }

  float at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }
  float& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }

  std::span<const float> pixel(int x, int y) const noexcept {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<float> pixel(int x, int y) noexcept {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  /// Clamps every sample into [0,1] and replaces NaN with 0.
  void clamp() noexcept;

  bool operator==(const Image& other) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_;
  int height_;
  int channels_;
  std::vector<float> data_;
};

struct LabPixel {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<LabPixel> pixels;  // row-major

  const LabPixel& at(int x, int y) const noexcept {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

// Codec. Decoding always yields 3 channels; gray sources are replicated.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);
/// 8-bit RGB PNG; samples quantized with round-half-up.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const std::filesystem::path& path, const Image& img);

/// Bilinear, align-corners convention: source corners land on target corners.
Image resize(const Image& img, int width, int height);

/// Replicates a gray image into 3 channels; RGB images are returned as-is.
Image to_rgb(const Image& img);

/// sRGB (gamma-encoded, [0,1]) to CIELAB under D65.
LabPixel srgb_to_lab(double r, double g, double b) noexcept;
LabImage rgb_to_lab(const Image& img);

/// Per-channel mean over all pixels.
std::vector<float> mean_color(const Image& img);

}  // namespace limescope
