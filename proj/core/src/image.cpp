#include "limescope/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "limescope/error.hpp"

namespace limescope {

namespace {

void check_shape(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    fail(ErrorKind::BadParameter, "image dimensions must be at least 1x1, got " +
                                      std::to_string(width) + "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    fail(ErrorKind::BadParameter, "image channels must be 1 or 3, got " + std::to_string(channels));
  }
}

// D65 reference white.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.00000;
constexpr double kZn = 1.08883;

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  if (!std::isfinite(fill) || fill < 0.0f || fill > 1.0f) {
    fail(ErrorKind::BadParameter, "fill value must be in [0,1]");
  }
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_shape(width, height, channels);
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    fail(ErrorKind::BadParameter, "image data length " + std::to_string(data_.size()) +
                                      " does not match " + std::to_string(width) + "x" +
                                      std::to_string(height) + "x" + std::to_string(channels));
  }
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      fail(ErrorKind::BadParameter, "image samples must be finite and in [0,1]");
    }
  }
}

void Image::clamp() noexcept {
  for (float& v : data_) {
    v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  }
}

Image resize(const Image& img, int width, int height) {
  if (width < 1 || height < 1) {
    fail(ErrorKind::BadParameter, "resize target must be at least 1x1");
  }
  if (width == img.width() && height == img.height()) return img;

  const int channels = img.channels();
  Image out(width, height, channels);
  const double sx = width > 1 ? static_cast<double>(img.width() - 1) / (width - 1) : 0.0;
  const double sy = height > 1 ? static_cast<double>(img.height() - 1) / (height - 1) : 0.0;

  for (int y = 0; y < height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(std::floor(fy)), img.height() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(std::floor(fx)), img.width() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      for (int c = 0; c < channels; ++c) {
        const double top = (1.0 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
        const double bottom = (1.0 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
        out.at(x, y, c) = static_cast<float>((1.0 - ty) * top + ty * bottom);
      }
    }
  }
  out.clamp();
  return out;
}

Image to_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float v = img.at(x, y, 0);
      auto px = out.pixel(x, y);
      px[0] = px[1] = px[2] = v;
    }
  }
  return out;
}

LabPixel srgb_to_lab(double r, double g, double b) noexcept {
  const double rl = srgb_to_linear(r);
  const double gl = srgb_to_linear(g);
  const double bl = srgb_to_linear(b);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage rgb_to_lab(const Image& img) {
  if (img.channels() != 3) {
    fail(ErrorKind::ChannelMismatch, "rgb_to_lab requires a 3-channel image");
  }
  LabImage out{img.width(), img.height(), {}};
  out.pixels.reserve(img.pixel_count());
  const auto data = img.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    out.pixels.push_back(srgb_to_lab(data[3 * i], data[3 * i + 1], data[3 * i + 2]));
  }
  return out;
}

std::vector<float> mean_color(const Image& img) {
  std::vector<double> sums(static_cast<std::size_t>(img.channels()), 0.0);
  const auto data = img.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    sums[i % sums.size()] += data[i];
  }
  std::vector<float> out;
  out.reserve(sums.size());
  for (double s : sums) out.push_back(static_cast<float>(s / static_cast<double>(img.pixel_count())));
  return out;
}

}  // namespace limescope
