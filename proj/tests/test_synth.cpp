#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "vpseg/synth.hpp"

using namespace vpseg;

TEST(Synth, NoiselessCircleHasTwoPopulations) {
  const auto s = make_synthetic(SynthKind::circle, 64, 0.0, 1);
  for (std::size_t j = 0; j < s.image.pixels(); ++j) {
    if (s.truth.labels[j] == 0) {
      EXPECT_EQ(s.image.data[j], 0.0);
    } else {
      EXPECT_GE(s.image.data[j], 0.55);
      EXPECT_LE(s.image.data[j], 1.0);
    }
  }
  // The disc is inhomogeneous: more than one foreground level.
  std::set<double> levels;
  for (std::size_t j = 0; j < s.image.pixels(); ++j) {
    if (s.truth.labels[j] == 1) levels.insert(s.image.data[j]);
  }
  EXPECT_GT(levels.size(), 10u);
}

TEST(Synth, NoiseIsReproducibleAndSeeded) {
  const auto a = make_synthetic(SynthKind::circle, 32, 0.01, 5);
  const auto b = make_synthetic(SynthKind::circle, 32, 0.01, 5);
  const auto c = make_synthetic(SynthKind::circle, 32, 0.01, 6);
  EXPECT_EQ(a.image.data, b.image.data);
  EXPECT_NE(a.image.data, c.image.data);
  for (double v : a.image.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Synth, DiscAreaWithinRasterizationBound) {
  for (std::size_t n : {32u, 100u, 256u}) {
    const auto s = make_synthetic(SynthKind::circle, n, 0.0, 1);
    std::size_t count = 0;
    for (int l : s.truth.labels) count += static_cast<std::size_t>(l);
    const double r = circle_radius(n);
    // Pixels whose centers fall inside differ from the area by at most the
    // number of pixels the boundary crosses, bounded by the perimeter band.
    EXPECT_LE(std::abs(static_cast<double>(count) - std::numbers::pi * r * r),
              2.0 * std::numbers::pi * r * std::sqrt(2.0) / 2.0 + 4.0);
    EXPECT_NEAR(static_cast<double>(count) / static_cast<double>(n * n), 0.65, 0.02);
  }
}

TEST(Synth, KindsAndValidation) {
  EXPECT_EQ(make_synthetic(SynthKind::three_level, 20, 0.0, 1).phases, 3u);
  const auto horse = make_synthetic(SynthKind::horse, 64, 0.0, 1);
  std::size_t fg = 0;
  for (int l : horse.truth.labels) fg += static_cast<std::size_t>(l);
  EXPECT_GT(fg, 64u * 64u / 10);
  EXPECT_LT(fg, 64u * 64u / 2);
  EXPECT_EQ(parse_synth_kind("two-region"), SynthKind::two_region);
  EXPECT_THROW(parse_synth_kind("square"), std::invalid_argument);
  EXPECT_THROW(make_synthetic(SynthKind::circle, 8, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_synthetic(SynthKind::circle, 32, -0.1, 1), std::invalid_argument);
}

TEST(Synth, Fig1Instance) {
  const OtInstance p = fig1_instance();
  EXPECT_EQ(p.a, (std::vector<double>{2.0, 5.0, 3.0}));
  EXPECT_EQ(p.b.size(), 10u);
  EXPECT_EQ(p.c(0, 0), 1.0);   // (2 - 1)^2
  EXPECT_EQ(p.c(2, 9), 16.0);  // (6 - 10)^2
}
