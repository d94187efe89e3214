#include <gtest/gtest.h>

#include <cmath>

#include "limescope/augment.hpp"
#include "limescope/error.hpp"
#include "support.hpp"

namespace limescope {
namespace {

AugmentationOp op(AugmentationParams p, std::uint64_t seed = 0) { return {std::move(p), seed}; }

TEST(AugmentTest, FlipsAreInvolutions) {
  const Image img = test::random_image(7, 5, 1);
  EXPECT_EQ(apply_augmentation(apply_augmentation(img, op(aug::FlipH{})), op(aug::FlipH{})), img);
  EXPECT_EQ(apply_augmentation(apply_augmentation(img, op(aug::FlipV{})), op(aug::FlipV{})), img);
  const Image flipped = apply_augmentation(img, op(aug::FlipH{}));
  EXPECT_EQ(flipped.at(0, 2, 1), img.at(6, 2, 1));
}

TEST(AugmentTest, IdentityParameters) {
  const Image img = test::random_image(6, 6, 2);
  EXPECT_EQ(apply_augmentation(img, op(aug::Brightness{0.0})), img);
  EXPECT_EQ(apply_augmentation(img, op(aug::Contrast{1.0})), img);
  EXPECT_EQ(apply_augmentation(img, op(aug::Noise{0.0}, 3)), img);
  EXPECT_EQ(apply_augmentation(img, op(aug::RandomErase{0.0}, 3)), img);
}

TEST(AugmentTest, NoiseIsSeeded) {
  const Image img = test::random_image(8, 8, 3);
  const Image a = apply_augmentation(img, op(aug::Noise{0.1}, 7));
  const Image b = apply_augmentation(img, op(aug::Noise{0.1}, 7));
  const Image c = apply_augmentation(img, op(aug::Noise{0.1}, 8));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(AugmentTest, MixMatchesElementwiseBlend) {
  const Image a = test::random_image(5, 4, 10);
  const Image b = test::random_image(5, 4, 11);
  const Image out = apply_augmentation(a, op(aug::Mix{0.5, "b"}), &b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(out.data()[i], 0.5 * a.data()[i] + 0.5 * b.data()[i], 1e-6);
  }
  EXPECT_THROW(apply_augmentation(a, op(aug::Mix{0.5, "b"})), Error);
}

TEST(AugmentTest, EveryFamilyStaysInRange) {
  const Image img = test::random_image(16, 12, 4);
  const Image partner = test::random_image(16, 12, 5);
  for (int family = 0; family < kAugmentationFamilies; ++family) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto o = random_augmentation(family, seed, "p.png");
      const Image out = apply_augmentation(img, o, &partner);
      ASSERT_EQ(out.width(), img.width());
      ASSERT_EQ(out.height(), img.height());
      ASSERT_EQ(out.channels(), img.channels());
      for (float v : out.data()) {
        ASSERT_TRUE(std::isfinite(v));
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
      EXPECT_EQ(apply_augmentation(img, o, &partner), out) << to_string(o);
    }
  }
  EXPECT_THROW(random_augmentation(11, 0, ""), Error);
}

TEST(AugmentTest, ExtremeParametersAreClamped) {
  const Image img = test::random_image(6, 6, 6);
  const Image bright = apply_augmentation(img, op(aug::Brightness{5.0}));
  for (float v : bright.data()) EXPECT_EQ(v, 1.0f);
  const Image dark = apply_augmentation(img, op(aug::Brightness{-5.0}));
  for (float v : dark.data()) EXPECT_EQ(v, 0.0f);
  const Image contrast = apply_augmentation(img, op(aug::Contrast{40.0}));
  for (float v : contrast.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}

TEST(AugmentTest, GrayImagesKeepOneChannel) {
  const Image gray = test::random_image(8, 8, 9, 1);
  for (int family = 0; family < kAugmentationFamilies; ++family) {
    const Image out = apply_augmentation(gray, random_augmentation(family, 1, "p"), &gray);
    EXPECT_EQ(out.channels(), 1) << family;
  }
}

TEST(AugmentTest, RotateFullTurnIsNearIdentity) {
  const Image img = test::gradient_image(11, 11);
  const Image out = apply_augmentation(img, op(aug::Rotate{360.0}));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i], 1e-4);
}

TEST(AugmentTest, ValidateRejectsOutOfRange) {
  EXPECT_THROW(validate(op(aug::Crop{0.0})), Error);
  EXPECT_THROW(validate(op(aug::Crop{1.2})), Error);
  EXPECT_THROW(validate(op(aug::RandomErase{1.0})), Error);
  EXPECT_THROW(validate(op(aug::Mix{1.5, "x"})), Error);
  EXPECT_THROW(validate(op(aug::Noise{-0.1})), Error);
  EXPECT_NO_THROW(validate(op(aug::Crop{1.0})));
  EXPECT_NO_THROW(validate(op(aug::Mix{0.0, "x"})));
}

TEST(AugmentTest, TextFormRoundTrips) {
  for (int family = 0; family < kAugmentationFamilies; ++family) {
    const auto o = random_augmentation(family, 12345 + static_cast<std::uint64_t>(family), "fish/a b.png");
    const auto text = to_string(o);
    const auto back = parse_augmentation(text);
    EXPECT_EQ(to_string(back), text);
    EXPECT_EQ(op_name(back.params), op_name(o.params));
    EXPECT_EQ(back.seed, o.seed);
  }
  const auto mix = parse_augmentation("mix:0.5,fish/a.png@3");
  ASSERT_TRUE(std::holds_alternative<aug::Mix>(mix.params));
  EXPECT_EQ(std::get<aug::Mix>(mix.params).partner_id, "fish/a.png");
  EXPECT_EQ(mix.seed, 3u);
  EXPECT_THROW(parse_augmentation("rotate:12"), Error);
  EXPECT_THROW(parse_augmentation("warp:1@0"), Error);
  EXPECT_THROW(parse_augmentation("crop:0@0"), Error);
}

}  // namespace
}  // namespace limescope
