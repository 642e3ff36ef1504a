#include <gtest/gtest.h>

#include <random>

#include "subtorus_gen.hpp"
#include "rfm/fm_absolute.hpp"

using namespace rfm;

namespace {

Torus t2() { return Torus(2); }

TorusPoint pt(std::initializer_list<Rat> c) { return TorusPoint(RatVector(c)); }

}  // namespace

TEST(Skyscraper, OriginGivesTrivialSystem) {
  Skyscraper m{t2(), {}};
  m.add(pt({Rat(0), Rat(0)}));
  auto e = transform_skyscraper(m);
  EXPECT_EQ(e.rank(), 1u);
  EXPECT_EQ(e.summands.begin()->first, pt({Rat(0), Rat(0)}));
  EXPECT_EQ(e.summands.begin()->second, 1);
}

TEST(Skyscraper, PointGoesToNegative) {
  Skyscraper m{t2(), {}};
  m.add(pt({Rat(1, 3), Rat(3, 4)}));
  auto e = transform_skyscraper(m);
  EXPECT_EQ(e.summands.begin()->first, pt({Rat(2, 3), Rat(1, 4)}));
}

TEST(Skyscraper, Additivity) {
  Skyscraper m{t2(), {}};
  m.add(pt({Rat(1, 2), Rat(0)}));
  m.add(pt({Rat(1, 2), Rat(0)}));
  auto e = transform_skyscraper(m);
  EXPECT_EQ(e.rank(), 2u);
  EXPECT_EQ(e.summands.size(), 1u);
  EXPECT_EQ(e.summands.begin()->second, 2);
  EXPECT_THROW(m.add(pt({Rat(0), Rat(0)}), 0), Error);
}

TEST(LocalSystem, TrivialGivesOriginAndRoundTrips) {
  FlatLocalSystem e{t2().dual(), {}};
  e.add(pt({Rat(0), Rat(0)}));
  auto m = transform_local_system(e);
  EXPECT_EQ(m.length(), 1u);
  EXPECT_EQ(m.points.begin()->first, pt({Rat(0), Rat(0)}));

  Skyscraper s{t2(), {}};
  s.add(pt({Rat(1, 5), Rat(2, 3)}), 3);
  s.add(pt({Rat(0), Rat(1, 2)}));
  EXPECT_EQ(transform_local_system(transform_skyscraper(s)), s);
  FlatLocalSystem f{t2().dual(), {}};
  f.add(pt({Rat(-1, 5), Rat(1, 3)}));
  EXPECT_EQ(transform_skyscraper(transform_local_system(f)), f);
}

TEST(SubtorusSystem, AxisThroughOrigin) {
  auto s = subtorus_from_equations(t2(), IntMatrix{{0, 1}}, {Rat(0)});
  auto out = transform_subtorus_system(make_subtorus_system(s, {Rat(0)}));
  EXPECT_EQ(out.system.support, subtorus_from_equations(t2(), IntMatrix{{1, 0}}, {Rat(0)}));
  EXPECT_EQ(out.system.holonomy, (RatVector{Rat(0)}));
  EXPECT_EQ(out.wit_index, 1);
  EXPECT_TRUE(contains(out.system.support, pt({Rat(0), Rat(0)})));
}

TEST(SubtorusSystem, CoprimeLineHolonomyFromOffset) {
  for (int p = 1; p <= 5; ++p)
    for (int q = 1; q <= 5; ++q) {
      if (std::gcd(p, q) != 1) continue;
      Rat b(2, 7), xi(1, 4);
      auto s = subtorus_from_equations(t2(), IntMatrix{{-q, p}}, {b});
      auto out = transform_subtorus_system(make_subtorus_system(s, {xi})).system;
      EXPECT_EQ(out.support, subtorus_from_equations(t2(), IntMatrix{{p, q}}, {xi}));
      // canonical equation is (q, -p) with offset -b
      EXPECT_EQ(out.holonomy, (RatVector{frac_mod1(-b)}));
    }
}

TEST(SubtorusSystem, PointAgreesWithSkyscraper) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 50; ++t) {
    std::size_t g = 1 + rng() % 4;
    TorusPoint x(gen::random_fractions(rng, g));
    auto out = transform_subtorus_system(make_subtorus_system(point_subtorus(Torus(g), x), {}));
    EXPECT_EQ(out.system.support.dim(), g);
    EXPECT_EQ(out.wit_index, 0);
    Skyscraper m{Torus(g), {}};
    m.add(x);
    auto flat = transform_skyscraper(m);
    EXPECT_EQ(TorusPoint(out.system.holonomy), flat.summands.begin()->first);
  }
}

TEST(SubtorusSystem, ExtremeDimensions) {
  Torus t(3);
  auto whole = make_subtorus_system(whole_torus(t), RatVector(3, Rat(0)));
  auto out = transform_subtorus_system(whole).system;
  EXPECT_EQ(out.support, point_subtorus(t.dual(), TorusPoint(RatVector(3, Rat(0)))));
  EXPECT_EQ(inverse_transform_subtorus_system(out).system, whole);
}

TEST(SubtorusSystem, RoundTripsAndInvariants) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 500; ++t) {
    std::size_t g = 1 + rng() % 6, k = rng() % (g + 1);
    Torus tor(g, rng() % 3 == 0 ? gen::random_metric(rng, g) : RatMatrix::identity(g));
    auto l = gen::random_system(rng, tor, k);
    auto fwd = transform_subtorus_system(l);
    EXPECT_EQ(fwd.system.support.dim(), g - k);
    EXPECT_EQ(fwd.wit_index, static_cast<int>(k));
    EXPECT_TRUE(is_normal_to(l.support, fwd.system.support));
    EXPECT_EQ(inverse_transform_subtorus_system(fwd.system).system, l);
    EXPECT_EQ(transform_subtorus_system(inverse_transform_subtorus_system(l).system).system, l);
  }
}

TEST(SubtorusSystem, HolonomyDimensionMismatch) {
  auto s = subtorus_from_equations(t2(), IntMatrix{{0, 1}}, {Rat(0)});
  EXPECT_THROW(make_subtorus_system(s, {}), PreconditionError);
}

TEST(SubtorusSystem, TranslationEquivariance) {
  std::mt19937_64 rng(63);
  for (int t = 0; t < 200; ++t) {
    std::size_t g = 1 + rng() % 5, k = rng() % (g + 1);
    auto l = gen::random_system(rng, Torus(g), k);
    RatVector delta = gen::random_fractions(rng, g);
    auto base = transform_subtorus_system(l).system;
    auto moved = transform_subtorus_system(translate(l, delta)).system;
    EXPECT_EQ(moved.support, base.support);
    // tensoring with the flat system at -delta shifts holonomy by -<h, delta>
    const IntMatrix& d = base.support.direction_basis();
    for (std::size_t i = 0; i < d.rows(); ++i) {
      Rat pairing = 0;
      for (std::size_t j = 0; j < g; ++j) pairing += Rat(d(i, j)) * delta[j];
      EXPECT_EQ(moved.holonomy[i], frac_mod1(base.holonomy[i] - pairing));
    }
  }
}

TEST(Morphisms, Examples) {
  auto a = make_subtorus_system(subtorus_from_equations(t2(), IntMatrix{{0, 1}}, {Rat(0)}), {Rat(1, 3)});
  EXPECT_EQ(morphism_space_dim(a, a), 1u);
  auto b = make_subtorus_system(subtorus_from_equations(t2(), IntMatrix{{1, 0}}, {Rat(0)}), {Rat(0)});
  auto a0 = make_subtorus_system(a.support, {Rat(0)});
  EXPECT_EQ(morphism_space_dim(a0, b), 1u);
  auto c = make_subtorus_system(subtorus_from_equations(t2(), IntMatrix{{0, 1}}, {Rat(1, 2)}), {Rat(0)});
  EXPECT_EQ(morphism_space_dim(a0, c), 0u);
  // same support, different holonomy: no compatible morphism
  EXPECT_EQ(morphism_space_dim(a, a0), 0u);
  auto a2 = make_subtorus_system(a.support, {Rat(1, 3)}, 2);
  EXPECT_EQ(morphism_space_dim(a2, a2), 4u);
}

TEST(Morphisms, SymmetricForTrivialHolonomy) {
  std::mt19937_64 rng(64);
  for (int t = 0; t < 100; ++t) {
    std::size_t g = 2 + rng() % 2;
    Torus tor(g);
    auto a = gen::random_system(rng, tor, rng() % (g + 1), true);
    auto b = gen::random_system(rng, tor, rng() % (g + 1), true);
    EXPECT_EQ(morphism_space_dim(a, b), morphism_space_dim(b, a));
  }
}
