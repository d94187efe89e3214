#include "limescope/augment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

#include "limescope/error.hpp"
#include "limescope/rng.hpp"

namespace limescope {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorKind::BadParameter, what);
}

Image flip(const Image& img, bool horizontal) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int sx = horizontal ? img.width() - 1 - x : x;
      const int sy = horizontal ? y : img.height() - 1 - y;
      std::copy_n(img.pixel(sx, sy).begin(), img.channels(), out.pixel(x, y).begin());
    }
  }
  return out;
}

double sample_bilinear(const Image& img, double fx, double fy, int c) {
  const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width() - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  const double top = (1 - tx) * img.at(x0, y0, c) + tx * img.at(x1, y0, c);
  const double bottom = (1 - tx) * img.at(x0, y1, c) + tx * img.at(x1, y1, c);
  return (1 - ty) * top + ty * bottom;
}

Image rotate(const Image& img, double degrees) {
  if (degrees == 0.0) return img;
  const auto fill = mean_color(img);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  constexpr double eps = 1e-9;

  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      // inverse rotation back into the source
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      const bool inside = sx >= -eps && sy >= -eps && sx <= max_x + eps && sy <= max_y + eps;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = inside ? static_cast<float>(sample_bilinear(
                                       img, std::clamp(sx, 0.0, max_x), std::clamp(sy, 0.0, max_y), c))
                                 : fill[static_cast<std::size_t>(c)];
      }
    }
  }
  return out;
}

Image crop(const Image& img, double fraction, Rng& rng) {
  const int cw = std::clamp(static_cast<int>(std::lround(fraction * img.width())), 1, img.width());
  const int ch = std::clamp(static_cast<int>(std::lround(fraction * img.height())), 1, img.height());
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width() - cw + 1)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height() - ch + 1)));
  Image window(cw, ch, img.channels());
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      std::copy_n(img.pixel(x0 + x, y0 + y).begin(), img.channels(), window.pixel(x, y).begin());
    }
  }
  return resize(window, img.width(), img.height());
}

Image contrast(const Image& img, double gamma) {
  const auto mean = mean_color(img);
  Image out = img;
  auto data = out.data();
  const auto channels = static_cast<std::size_t>(img.channels());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double m = mean[i % channels];
    data[i] = static_cast<float>((data[i] - m) * gamma + m);
  }
  return out;
}

Image random_erase(const Image& img, double fraction, Rng& rng) {
  if (fraction == 0.0) return img;
  const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  const int ew = std::clamp(static_cast<int>(std::lround(img.width() * std::sqrt(fraction * aspect))),
                            1, img.width());
  const int eh = std::clamp(static_cast<int>(std::lround(img.height() * std::sqrt(fraction / aspect))),
                            1, img.height());
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.width() - ew + 1)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(img.height() - eh + 1)));
  std::vector<float> color(static_cast<std::size_t>(img.channels()));
  for (float& c : color) c = static_cast<float>(rng.uniform());

  Image out = img;
  for (int y = y0; y < y0 + eh; ++y) {
    for (int x = x0; x < x0 + ew; ++x) {
      std::copy(color.begin(), color.end(), out.pixel(x, y).begin());
    }
  }
  return out;
}

Image add_noise(const Image& img, double sigma, Rng& rng) {
  Image out = img;
  for (float& v : out.data()) v = static_cast<float>(v + sigma * rng.normal());
  return out;
}

Image mix(const Image& img, const Image& partner, double alpha) {
  Image other = partner.channels() == img.channels() ? partner : to_rgb(partner);
  if (other.width() != img.width() || other.height() != img.height()) {
    other = resize(other, img.width(), img.height());
  }
  if (other.channels() != img.channels()) {
    fail(ErrorKind::ChannelMismatch, "mix partner channel count differs");
  }
  Image out = img;
  auto data = out.data();
  const auto src = other.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>((1.0 - alpha) * data[i] + alpha * src[i]);
  }
  return out;
}

// Separable Gaussian, edges clamped.
Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-(k * k) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;

  const int width = img.width();
  const int height = img.height();
  const int channels = img.channels();
  std::vector<double> horizontal(img.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += taps[static_cast<std::size_t>(k + radius)] * img.at(std::clamp(x + k, 0, width - 1), y, c);
        }
        horizontal[(static_cast<std::size_t>(y) * width + x) * channels + c] = acc;
      }
    }
  }
  Image out(width, height, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int yy = std::clamp(y + k, 0, height - 1);
          acc += taps[static_cast<std::size_t>(k + radius)] *
                 horizontal[(static_cast<std::size_t>(yy) * width + x) * channels + c];
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  out.clamp();
  return out;
}

Image sharpen(const Image& img, double amount) {
  if (amount == 0.0) return img;
  const Image soft = gaussian_blur(img, 1.0);
  Image out = img;
  auto data = out.data();
  const auto blurred = soft.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(data[i] + amount * (data[i] - blurred[i]));
  }
  return out;
}

std::array<double, 3> rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  double h = 0.0;
  if (delta > 0.0) {
    if (mx == r) {
      h = std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
  }
  const double s = mx > 0.0 ? delta / mx : 0.0;
  return {h, s, mx};
}

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
  const double hh = h * 6.0;
  const int sector = static_cast<int>(std::floor(hh)) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Image color_jitter(const Image& img, const aug::ColorJitter& jitter) {
  Image out = img;
  if (img.channels() == 1) {
    for (float& v : out.data()) v = static_cast<float>(v * (1.0 + jitter.value));
    return out;
  }
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      auto px = out.pixel(x, y);
      auto [h, s, v] = rgb_to_hsv(px[0], px[1], px[2]);
      h = std::fmod(h + jitter.hue, 1.0);
      if (h < 0.0) h += 1.0;
      s = std::clamp(s * (1.0 + jitter.saturation), 0.0, 1.0);
      v = std::clamp(v * (1.0 + jitter.value), 0.0, 1.0);
      const auto rgb = hsv_to_rgb(h, s, v);
      for (int c = 0; c < 3; ++c) px[static_cast<std::size_t>(c)] = static_cast<float>(rgb[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    fail(ErrorKind::BadParameter, "bad number in augmentation: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<double> parse_doubles(std::string_view text, std::size_t expected) {
  std::vector<double> values;
  while (true) {
    const auto comma = text.find(',');
    values.push_back(parse_double(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (values.size() != expected) {
    fail(ErrorKind::BadParameter, "augmentation expects " + std::to_string(expected) + " parameters");
  }
  return values;
}

}  // namespace

std::string_view op_name(const AugmentationParams& params) {
  return std::visit(overloaded{
                        [](const aug::FlipH&) { return std::string_view("flip_h"); },
                        [](const aug::FlipV&) { return std::string_view("flip_v"); },
                        [](const aug::Rotate&) { return std::string_view("rotate"); },
                        [](const aug::Crop&) { return std::string_view("crop"); },
                        [](const aug::Brightness&) { return std::string_view("brightness"); },
                        [](const aug::Contrast&) { return std::string_view("contrast"); },
                        [](const aug::RandomErase&) { return std::string_view("random_erase"); },
                        [](const aug::Noise&) { return std::string_view("noise"); },
                        [](const aug::Mix&) { return std::string_view("mix"); },
                        [](const aug::Blur&) { return std::string_view("blur"); },
                        [](const aug::Sharpen&) { return std::string_view("sharpen"); },
                        [](const aug::ColorJitter&) { return std::string_view("color_jitter"); },
                    },
                    params);
}

void validate(const AugmentationOp& op) {
  std::visit(overloaded{
                 [](const aug::FlipH&) {},
                 [](const aug::FlipV&) {},
                 [](const aug::Rotate& p) { require(std::isfinite(p.degrees), "rotate angle must be finite"); },
                 [](const aug::Crop& p) { require(p.fraction > 0.0 && p.fraction <= 1.0, "crop fraction must be in (0,1]"); },
                 [](const aug::Brightness& p) { require(std::isfinite(p.delta), "brightness delta must be finite"); },
                 [](const aug::Contrast& p) { require(std::isfinite(p.gamma) && p.gamma >= 0.0, "contrast gamma must be >= 0"); },
                 [](const aug::RandomErase& p) { require(p.fraction >= 0.0 && p.fraction < 1.0, "erase fraction must be in [0,1)"); },
                 [](const aug::Noise& p) { require(std::isfinite(p.sigma) && p.sigma >= 0.0, "noise sigma must be >= 0"); },
                 [](const aug::Mix& p) { require(p.alpha >= 0.0 && p.alpha <= 1.0, "mix alpha must be in [0,1]"); },
                 [](const aug::Blur& p) { require(std::isfinite(p.radius) && p.radius >= 0.0, "blur radius must be >= 0"); },
                 [](const aug::Sharpen& p) { require(std::isfinite(p.amount) && p.amount >= 0.0, "sharpen amount must be >= 0"); },
                 [](const aug::ColorJitter& p) {
                   require(std::isfinite(p.hue) && p.saturation >= -1.0 && p.value >= -1.0,
                           "color jitter parameters out of range");
                 },
             },
             op.params);
}

Image apply_augmentation(const Image& img, const AugmentationOp& op, const Image* partner) {
  validate(op);
  Rng rng(op.seed);
  Image out = std::visit(
      overloaded{
          [&](const aug::FlipH&) { return flip(img, true); },
          [&](const aug::FlipV&) { return flip(img, false); },
          [&](const aug::Rotate& p) { return rotate(img, p.degrees); },
          [&](const aug::Crop& p) { return crop(img, p.fraction, rng); },
          [&](const aug::Brightness& p) {
            Image o = img;
            for (float& v : o.data()) v = static_cast<float>(v + p.delta);
            return o;
          },
          [&](const aug::Contrast& p) { return contrast(img, p.gamma); },
          [&](const aug::RandomErase& p) { return random_erase(img, p.fraction, rng); },
          [&](const aug::Noise& p) { return add_noise(img, p.sigma, rng); },
          [&](const aug::Mix& p) {
            if (partner == nullptr) fail(ErrorKind::BadParameter, "mix requires a partner image");
            return mix(img, *partner, p.alpha);
          },
          [&](const aug::Blur& p) { return gaussian_blur(img, p.radius); },
          [&](const aug::Sharpen& p) { return sharpen(img, p.amount); },
          [&](const aug::ColorJitter& p) { return color_jitter(img, p); },
      },
      op.params);
  out.clamp();
  return out;
}

std::string to_string(const AugmentationOp& op) {
  std::string args = std::visit(
      overloaded{
          [](const aug::FlipH&) { return std::string(); },
          [](const aug::FlipV&) { return std::string(); },
          [](const aug::Rotate& p) { return format_double(p.degrees); },
          [](const aug::Crop& p) { return format_double(p.fraction); },
          [](const aug::Brightness& p) { return format_double(p.delta); },
          [](const aug::Contrast& p) { return format_double(p.gamma); },
          [](const aug::RandomErase& p) { return format_double(p.fraction); },
          [](const aug::Noise& p) { return format_double(p.sigma); },
          [](const aug::Mix& p) { return format_double(p.alpha) + "," + p.partner_id; },
          [](const aug::Blur& p) { return format_double(p.radius); },
          [](const aug::Sharpen& p) { return format_double(p.amount); },
          [](const aug::ColorJitter& p) {
            return format_double(p.hue) + "," + format_double(p.saturation) + "," + format_double(p.value);
          },
      },
      op.params);
  std::string out(op_name(op.params));
  if (!args.empty()) out += ":" + args;
  out += "@" + std::to_string(op.seed);
  return out;
}

AugmentationOp parse_augmentation(std::string_view text) {
  const auto at = text.rfind('@');
  if (at == std::string_view::npos) fail(ErrorKind::BadParameter, "augmentation missing '@seed'");
  AugmentationOp op;
  const auto seed_text = text.substr(at + 1);
  const auto res = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), op.seed);
  if (res.ec != std::errc{} || res.ptr != seed_text.data() + seed_text.size()) {
    fail(ErrorKind::BadParameter, "bad augmentation seed");
  }
  text = text.substr(0, at);
  const auto colon = text.find(':');
  const auto name = text.substr(0, colon);
  const auto args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  auto one = [&] { return parse_doubles(args, 1)[0]; };
  if (name == "flip_h") {
    op.params = aug::FlipH{};
  } else if (name == "flip_v") {
    op.params = aug::FlipV{};
  } else if (name == "rotate") {
    op.params = aug::Rotate{one()};
  } else if (name == "crop") {
    op.params = aug::Crop{one()};
  } else if (name == "brightness") {
    op.params = aug::Brightness{one()};
  } else if (name == "contrast") {
    op.params = aug::Contrast{one()};
  } else if (name == "random_erase") {
    op.params = aug::RandomErase{one()};
  } else if (name == "noise") {
    op.params = aug::Noise{one()};
  } else if (name == "mix") {
    const auto comma = args.find(',');
    if (comma == std::string_view::npos) fail(ErrorKind::BadParameter, "mix needs alpha,partner");
    op.params = aug::Mix{parse_double(args.substr(0, comma)), std::string(args.substr(comma + 1))};
  } else if (name == "blur") {
    op.params = aug::Blur{one()};
  } else if (name == "sharpen") {
    op.params = aug::Sharpen{one()};
  } else if (name == "color_jitter") {
    const auto v = parse_doubles(args, 3);
    op.params = aug::ColorJitter{v[0], v[1], v[2]};
  } else {
    fail(ErrorKind::BadParameter, "unknown augmentation '" + std::string(name) + "'");
  }
  validate(op);
  return op;
}

AugmentationOp random_augmentation(int family, std::uint64_t seed, const std::string& mix_partner) {
  Rng rng(derive_seed(seed, 0xa11ce));
  AugmentationOp op;
  op.seed = seed;
  switch (family) {
    case 0:
      if (rng.coin()) {
        op.params = aug::FlipH{};
      } else {
        op.params = aug::FlipV{};
      }
      break;
    case 1: op.params = aug::Rotate{rng.uniform(-30.0, 30.0)}; break;
    case 2: op.params = aug::Crop{rng.uniform(0.7, 1.0)}; break;
    case 3: op.params = aug::Brightness{rng.uniform(-0.15, 0.15)}; break;
    case 4: op.params = aug::Contrast{rng.uniform(0.7, 1.3)}; break;
    case 5: op.params = aug::RandomErase{rng.uniform(0.05, 0.2)}; break;
    case 6: op.params = aug::Noise{rng.uniform(0.01, 0.05)}; break;
    case 7: op.params = aug::Mix{rng.uniform(0.3, 0.7), mix_partner}; break;
    case 8: op.params = aug::Blur{rng.uniform(0.5, 1.5)}; break;
    case 9: op.params = aug::Sharpen{rng.uniform(0.3, 1.0)}; break;
    case 10:
      op.params = aug::ColorJitter{rng.uniform(-0.05, 0.05), rng.uniform(-0.15, 0.15),
                                   rng.uniform(-0.15, 0.15)};
      break;
    default: fail(ErrorKind::BadParameter, "augmentation family must be in [0,10]");
  }
  return op;
}

}  // namespace limescope
