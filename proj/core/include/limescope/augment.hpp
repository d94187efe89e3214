#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "limescope/image.hpp"

namespace limescope {

namespace aug {
struct FlipH {};
struct FlipV {};
struct Rotate { double degrees = 0.0; };
/// Side fraction of the crop window; the crop is resized back to full size.
struct Crop { double fraction = 1.0; };
struct Brightness { double delta = 0.0; };
/// Scales deviations from the per-channel mean; 1 is identity.
struct Contrast { double gamma = 1.0; };
/// Area fraction of the erased rectangle, in [0,1).
struct RandomErase { double fraction = 0.0; };
struct Noise { double sigma = 0.0; };
/// Per-sample (1-alpha)*self + alpha*partner.
struct Mix {
  double alpha = 0.5;
  std::string partner_id;
};
struct Blur { double radius = 0.0; };
struct Sharpen { double amount = 0.0; };
/// Hue shift in turns, relative saturation and value changes.
struct ColorJitter {
  double hue = 0.0;
  double saturation = 0.0;
  double value = 0.0;
};
}  // namespace aug

using AugmentationParams =
    std::variant<aug::FlipH, aug::FlipV, aug::Rotate, aug::Crop, aug::Brightness,
                 aug::Contrast, aug::RandomErase, aug::Noise, aug::Mix, aug::Blur,
                 aug::Sharpen, aug::ColorJitter>;

struct AugmentationOp {
  AugmentationParams params;
  std::uint64_t seed = 0;
};

/// Throws BadParameter when a parameter is outside its declared range.
void validate(const AugmentationOp& op);

/// Deterministic in (img, op, partner). Output has the input's dimensions and
/// channel count with every sample clamped to [0,1]. `partner` is required by
/// Mix and ignored otherwise; it is resized to the input shape when needed.
Image apply_augmentation(const Image& img, const AugmentationOp& op,
                         const Image* partner = nullptr);

/// Canonical text form, e.g. "rotate:12.5@7" or "mix:0.5,fish/a.png@3".
std::string to_string(const AugmentationOp& op);
AugmentationOp parse_augmentation(std::string_view text);

std::string_view op_name(const AugmentationParams& params);

/// The eleven augmentation families drawn by the class balancer
/// (flip counts once; its direction comes from the seed).
inline constexpr int kAugmentationFamilies = 11;

/// Draws family `family` (0..10) with randomized parameters. Mix needs a
/// partner id supplied by the caller.
AugmentationOp random_augmentation(int family, std::uint64_t seed,
                                   const std::string& mix_partner);

}  // namespace limescope
