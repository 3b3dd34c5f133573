#include <gtest/gtest.h>

#include <set>

#include "saif/prompt_family.hpp"

using saif::box_prompt;
using saif::saif_config;

namespace {

void expect_box_near(const box_prompt& a, const box_prompt& b, double tol = 1e-12) {
  EXPECT_NEAR(a.x1, b.x1, tol);
  EXPECT_NEAR(a.y1, b.y1, tol);
  EXPECT_NEAR(a.x2, b.x2, tol);
  EXPECT_NEAR(a.y2, b.y2, tol);
}

}  // namespace

TEST(ScaleBox, ShrinksAroundCenter) {
  expect_box_near(saif::scale_box({10, 10, 30, 50}, 0.9), {11, 12, 29, 48});
}

TEST(ScaleBox, GrowsPastImageOrigin) {
  expect_box_near(saif::scale_box({0, 0, 20, 20}, 1.1), {-1, -1, 21, 21});
}

TEST(ScaleBox, IdentityAndRejectsNonPositive) {
  const box_prompt b{3.5, 4.25, 17, 40};
  EXPECT_EQ(saif::scale_box(b, 1.0), b);
  EXPECT_THROW(saif::scale_box(b, 0.0), saif::invalid_argument);
  EXPECT_THROW(saif::scale_box(b, -1.0), saif::invalid_argument);
}

TEST(JitterBox, ZeroDeltaIsIdentity) {
  saif::random_stream rng(1, 2, 3, saif::stream_level::inner);
  for (int i = 0; i < 100; ++i) {
    const box_prompt b{double(i), 2.0 * i, i + 10.5, 3.0 * i + 7};
    EXPECT_EQ(saif::jitter_box(b, 0.0, rng), b);
  }
}

TEST(JitterBox, ShiftsStayWithinDeltaTimesExtent) {
  const box_prompt b{0, 0, 10, 100};
  const double delta = 0.1;
  saif::random_stream rng(7, 0, 1, saif::stream_level::outer);
  double max_dx = 0.0, max_dy = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto j = saif::jitter_box(b, delta, rng);
    for (double d : {j.x1 - b.x1, j.x2 - b.x2}) {
      ASSERT_LE(std::abs(d), delta * 10 + 1e-12);
      max_dx = std::max(max_dx, std::abs(d));
    }
    for (double d : {j.y1 - b.y1, j.y2 - b.y2}) {
      ASSERT_LE(std::abs(d), delta * 100 + 1e-12);
      max_dy = std::max(max_dy, std::abs(d));
    }
  }
  // The draws actually span the allowed range.
  EXPECT_GT(max_dx, 0.95);
  EXPECT_GT(max_dy, 9.5);
}

TEST(ClampAndValidate, Examples) {
  EXPECT_EQ(saif::clamp_and_validate({-5, -5, 10, 10}, 20, 20, 2), (box_prompt{0, 0, 10, 10}));
  EXPECT_FALSE(saif::clamp_and_validate({18, 18, 19, 19}, 20, 20, 2).has_value());
  EXPECT_EQ(saif::clamp_and_validate({0, 0, 25, 25}, 20, 20, 2), (box_prompt{0, 0, 20, 20}));
  EXPECT_FALSE(saif::clamp_and_validate({30, 30, 40, 40}, 20, 20, 2).has_value());
  EXPECT_FALSE(saif::clamp_and_validate({5, 5, 4, 9}, 20, 20, 0).has_value());
}

TEST(ClampAndValidate, NonFiniteRejected) {
  EXPECT_FALSE(saif::clamp_and_validate({0, 0, std::nan(""), 5}, 20, 20, 2).has_value());
}

TEST(RandomStream, SameKeySameDrawsDifferentKeyDifferentDraws) {
  saif::random_stream a(5, 9, 2, saif::stream_level::inner);
  saif::random_stream b(5, 9, 2, saif::stream_level::inner);
  saif::random_stream c(5, 9, 3, saif::stream_level::inner);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    same += va == c.next_u64();
  }
  EXPECT_EQ(same, 0);
}

TEST(RandomStream, UnitDrawsInRange) {
  saif::random_stream r(0, 0, 0, saif::stream_level::scene);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.next_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, 0.99);
}

TEST(CandidateScale, IdentityFirstThenCycles) {
  saif_config cfg;
  EXPECT_EQ(saif::candidate_scale(cfg, 1), 1.0);
  const double expected[] = {0.9, 1.0, 1.1, 0.9, 1.0, 1.1};
  for (int i = 2; i <= 7; ++i) EXPECT_EQ(saif::candidate_scale(cfg, i), expected[i - 2]);
}

TEST(BuildFamily, SingleBoxWhenBudgetIsOne) {
  saif_config cfg;
  cfg.n = 1;
  cfg.k = 1;
  cfg.top_n = 1;
  const box_prompt b{40.25, 50.5, 120, 160.75};
  const auto f = saif::build_family(b, cfg, 224, 224, 17);
  ASSERT_EQ(f.outer.size(), 1u);
  ASSERT_EQ(f.outer[0].inner.size(), 1u);
  EXPECT_EQ(f.outer[0].inner[0], b);
  EXPECT_EQ(f.original, b);
  EXPECT_EQ(f.box_count(), 1u);
}

TEST(BuildFamily, FullBudgetForCentralBox) {
  saif_config cfg;
  const auto f = saif::build_family({62, 62, 162, 162}, cfg, 224, 224, 3);
  ASSERT_EQ(f.outer.size(), 12u);
  EXPECT_EQ(f.box_count(), 96u);
  EXPECT_EQ(f.outer[0].box, f.original);
  for (std::size_t j = 0; j < f.outer.size(); ++j) {
    const auto& c = f.outer[j];
    EXPECT_EQ(c.index, static_cast<int>(j) + 1);
    EXPECT_EQ(c.alpha, saif::candidate_scale(cfg, c.index));
    EXPECT_EQ(c.inner.front(), c.box);
    // Outer boxes stay within the scaled box plus the outer jitter range.
    const auto scaled = saif::scale_box(f.original, c.alpha);
    EXPECT_LE(std::abs(c.box.x1 - scaled.x1), cfg.delta_out * scaled.width() + 1e-9);
    EXPECT_LE(std::abs(c.box.y2 - scaled.y2), cfg.delta_out * scaled.height() + 1e-9);
    for (const auto& b : c.inner) {
      EXPECT_LE(std::abs(b.x1 - c.box.x1), cfg.delta_in * c.box.width() + 1e-9);
      EXPECT_LE(std::abs(b.y2 - c.box.y2), cfg.delta_in * c.box.height() + 1e-9);
    }
  }
}

TEST(BuildFamily, CornerBoxLosesRejectedCandidates) {
  saif_config cfg;
  cfg.delta_out = 0.5;
  cfg.delta_in = 0.5;
  const auto f = saif::build_family({0, 0, 3, 3}, cfg, 224, 224, 11);
  EXPECT_LT(f.box_count(), 96u);
  EXPECT_GE(f.outer.size(), 1u);
  EXPECT_EQ(f.outer[0].index, 1);
  for (const auto& c : f.outer) {
    for (const auto& b : c.inner) {
      EXPECT_GE(b.x1, 0.0);
      EXPECT_GE(b.y1, 0.0);
      EXPECT_LE(b.x2, 224.0);
      EXPECT_LE(b.y2, 224.0);
      EXPECT_GE(b.width(), cfg.min_box_px);
      EXPECT_GE(b.height(), cfg.min_box_px);
    }
  }
}

TEST(BuildFamily, DeterministicAndKeyedByImageAndSeed) {
  saif_config cfg;
  const box_prompt b{30, 40, 150, 170};
  const auto a1 = saif::build_family(b, cfg, 224, 224, 5);
  const auto a2 = saif::build_family(b, cfg, 224, 224, 5);
  EXPECT_EQ(a1, a2);
  EXPECT_NE(a1, saif::build_family(b, cfg, 224, 224, 6));
  cfg.seed = 1;
  EXPECT_NE(a1, saif::build_family(b, cfg, 224, 224, 5));
}

TEST(BuildFamily, PrefixStableWhenNGrows) {
  saif_config small;
  small.n = 4;
  saif_config large;
  large.n = 12;
  const box_prompt b{30, 40, 150, 170};
  const auto fs = saif::build_family(b, small, 224, 224, 2);
  const auto fl = saif::build_family(b, large, 224, 224, 2);
  ASSERT_EQ(fs.outer.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(fs.outer[j], fl.outer[j]);
}

TEST(BuildFamily, AllBoxesDistinctUnderJitter) {
  saif_config cfg;
  const auto f = saif::build_family({30, 40, 150, 170}, cfg, 224, 224, 9);
  std::set<std::tuple<double, double, double, double>> seen;
  for (const auto& c : f.outer) {
    for (std::size_t k = 1; k < c.inner.size(); ++k) {
      const auto& b = c.inner[k];
      seen.emplace(b.x1, b.y1, b.x2, b.y2);
    }
  }
  EXPECT_EQ(seen.size(), 12u * 7u);
}

TEST(BuildFamily, DegenerateInputThrows) {
  saif_config cfg;
  EXPECT_THROW(saif::build_family({300, 300, 400, 400}, cfg, 224, 224), saif::degenerate_family);
  EXPECT_THROW(saif::build_family({10, 10, 11, 50}, cfg, 224, 224), saif::degenerate_family);
}

TEST(Config, RejectsInvalidValues) {
  saif_config cfg;
  cfg.n = 0;
  EXPECT_THROW(cfg.validate(), saif::invalid_argument);
  cfg = {};
  cfg.top_n = 13;
  EXPECT_THROW(cfg.validate(), saif::invalid_argument);
  cfg = {};
  cfg.tau_min = 0.9;
  cfg.tau_max = 0.1;
  EXPECT_THROW(cfg.validate(), saif::invalid_argument);
  cfg = {};
  cfg.scales.clear();
  EXPECT_THROW(cfg.validate(), saif::invalid_argument);
}

TEST(Config, ParseAndFormatRoundTrip) {
  const auto cfg = saif::parse_config("# comment\nscales = 0.8, 1.0,1.2\nn=6\nk=4\nlambda=0.25\nseed=42\n");
  EXPECT_EQ(cfg.scales, (std::vector<double>{0.8, 1.0, 1.2}));
  EXPECT_EQ(cfg.n, 6);
  EXPECT_EQ(cfg.k, 4);
  EXPECT_EQ(cfg.lambda, 0.25);
  EXPECT_EQ(cfg.seed, 42u);
  const auto again = saif::parse_config(saif::format_config(cfg));
  EXPECT_EQ(saif::format_config(again), saif::format_config(cfg));
  EXPECT_THROW(saif::parse_config("bogus=1\n"), saif::invalid_argument);
  EXPECT_THROW(saif::parse_config("n=abc\n"), saif::invalid_argument);
}
