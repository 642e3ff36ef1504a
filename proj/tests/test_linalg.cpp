#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rfm/matrix.hpp"
#include "rfm/normal_form.hpp"

using namespace rfm;

namespace {

void expect_valid_hnf(const IntMatrix& m) {
  auto hf = hnf(m);
  EXPECT_EQ(hf.h, hf.u * m);
  EXPECT_TRUE(is_unimodular(hf.u));
  EXPECT_TRUE(is_hermite_form(hf.h));
  EXPECT_EQ(hf.rank, oracle::rank_by_minors(m));
}

void expect_valid_snf(const IntMatrix& m) {
  auto sf = snf(m);
  EXPECT_EQ(sf.d, sf.u * m * sf.v);
  EXPECT_TRUE(is_unimodular(sf.u));
  EXPECT_TRUE(is_unimodular(sf.v));
  auto inv = oracle::smith_invariants(m);
  for (std::size_t i = 0; i < sf.d.rows(); ++i)
    for (std::size_t j = 0; j < sf.d.cols(); ++j) {
      if (i != j) {
        EXPECT_EQ(sf.d(i, j), 0);
      } else if (i < inv.size()) {
        EXPECT_EQ(sf.d(i, i), inv[i]);
      } else {
        EXPECT_EQ(sf.d(i, i), 0);
      }
    }
}

}  // namespace

TEST(Hnf, Identity) {
  auto hf = hnf(IntMatrix::identity(3));
  EXPECT_EQ(hf.h, IntMatrix::identity(3));
  EXPECT_EQ(hf.u, IntMatrix::identity(3));
}

TEST(Hnf, TwoByTwo) {
  IntMatrix m{{2, 4}, {6, 8}};
  expect_valid_hnf(m);
  EXPECT_EQ(hnf(m).h, (IntMatrix{{2, 0}, {0, 4}}));
}

TEST(Hnf, ZeroMatrix) {
  auto hf = hnf(IntMatrix::zero(2, 3));
  EXPECT_EQ(hf.h, IntMatrix::zero(2, 3));
  EXPECT_EQ(hf.u, IntMatrix::identity(2));
  EXPECT_EQ(hf.rank, 0u);
}

TEST(Hnf, RandomFactorizations) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    std::size_t r = 1 + rng() % 5, c = 1 + rng() % 5;
    expect_valid_hnf(oracle::random_int_matrix(rng, r, c, -5, 5));
  }
}

TEST(Hnf, UniqueUnderUnimodularRowChange) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 200; ++t) {
    std::size_t r = 1 + rng() % 4, c = 1 + rng() % 5;
    IntMatrix m = oracle::random_int_matrix(rng, r, c, -4, 4);
    IntMatrix u = oracle::random_unimodular(rng, r);
    EXPECT_EQ(hnf(m).h, hnf(u * m).h);
  }
}

TEST(Snf, DiagonalThreeFive) {
  auto sf = snf(IntMatrix{{3, 0}, {0, 5}});
  EXPECT_EQ(sf.d, (IntMatrix{{1, 0}, {0, 15}}));
}

TEST(Snf, TwoByTwo) {
  IntMatrix m{{2, 4}, {6, 8}};
  auto sf = snf(m);
  EXPECT_EQ(sf.d, (IntMatrix{{2, 0}, {0, 4}}));
  EXPECT_EQ(sf.d, sf.u * m * sf.v);
}

TEST(Snf, Identity) {
  auto sf = snf(IntMatrix::identity(3));
  EXPECT_EQ(sf.d, IntMatrix::identity(3));
}

TEST(Snf, RandomAgainstDeterminantalDivisors) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 300; ++t) {
    std::size_t r = 1 + rng() % 4, c = 1 + rng() % 4;
    expect_valid_snf(oracle::random_int_matrix(rng, r, c, -5, 5));
  }
}

TEST(Kernel, CoordinateAxis) {
  EXPECT_EQ(kernel_basis(IntMatrix{{1, 0}}), (IntMatrix{{0, 1}}));
}

TEST(Kernel, CoprimeLine) {
  for (int p = 1; p <= 6; ++p)
    for (int q = 1; q <= 6; ++q) {
      if (std::gcd(p, q) != 1) continue;
      IntMatrix k = kernel_basis(IntMatrix{{q, -p}});
      ASSERT_EQ(k.rows(), 1u);
      EXPECT_EQ(k, (IntMatrix{{p, q}}));
      oracle::for_each_box_vector(2, 8, [&](const IntVector& v) {
        if (q * v[0] - p * v[1] == 0) {
          EXPECT_TRUE(oracle::lattice_contains(k, v));
        }
      });
    }
}

TEST(Kernel, FullRankSquare) {
  EXPECT_EQ(kernel_basis(IntMatrix{{2, 1}, {1, 1}}).rows(), 0u);
}

TEST(Kernel, RandomAgainstBoxEnumeration) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 120; ++t) {
    std::size_t r = 1 + rng() % 3, c = 2 + rng() % 3;
    IntMatrix m = oracle::random_int_matrix(rng, r, c, -3, 3);
    IntMatrix k = kernel_basis(m);
    EXPECT_EQ(k.rows(), c - oracle::rank_by_minors(m));
    EXPECT_TRUE((m * k.transpose()).is_zero());
    EXPECT_TRUE(oracle::is_primitive_basis(k));
    oracle::for_each_box_vector(c, 3, [&](const IntVector& v) {
      if (std::all_of(v.begin(), v.end(), [](const Int& e) { return e == 0; })) return;
      bool in_kernel = true;
      auto mv = m * v;
      for (const auto& e : mv)
        if (e != 0) in_kernel = false;
      EXPECT_EQ(in_kernel, oracle::lattice_contains(k, v));
    });
  }
}

TEST(Saturate, Examples) {
  EXPECT_EQ(saturate(IntMatrix{{2, 0}}), (IntMatrix{{1, 0}}));
  EXPECT_EQ(saturate(IntMatrix{{1, 1}}), (IntMatrix{{1, 1}}));
  EXPECT_EQ(saturate(IntMatrix{{2, 4}, {6, 8}}), IntMatrix::identity(2));
}

TEST(Saturate, RankDeficientThrows) {
  try {
    saturate(IntMatrix{{1, 2}, {2, 4}});
    FAIL() << "expected rank deficient";
  } catch (const PreconditionError& e) {
    EXPECT_EQ(e.condition(), "rank deficient");
  }
}

TEST(Saturate, IdempotentAndContainsInput) {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 200; ++t) {
    std::size_t c = 2 + rng() % 4, r = 1 + rng() % (c - 1);
    IntMatrix m = oracle::random_int_matrix(rng, r, c, -5, 5);
    if (oracle::rank_by_minors(m) != r) continue;
    IntMatrix s = saturate(m);
    EXPECT_EQ(saturate(s), s);
    EXPECT_TRUE(oracle::is_primitive_basis(s));
    for (std::size_t i = 0; i < r; ++i) EXPECT_TRUE(oracle::lattice_contains(s, m.row_vector(i)));
    EXPECT_EQ(saturate(kernel_basis(m)), kernel_basis(m));
  }
}

TEST(Int64Instantiation, MatchesMpz) {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 200; ++t) {
    std::size_t r = 1 + rng() % 3, c = 1 + rng() % 3;
    IntMatrix m = oracle::random_int_matrix(rng, r, c, -3, 3);
    Matrix<std::int64_t> m64(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m64(i, j) = m(i, j).get_si();
    auto h = hnf(m).h;
    auto h64 = hnf(m64).h;
    auto d = snf(m).d;
    auto d64 = snf(m64).d;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        EXPECT_EQ(h(i, j).get_si(), h64(i, j));
        EXPECT_EQ(d(i, j).get_si(), d64(i, j));
      }
  }
}

TEST(Rational, RrefInverseSolve) {
  RatMatrix a{{Rat(1), Rat(2)}, {Rat(3), Rat(4)}};
  RatMatrix inv = inverse(a);
  EXPECT_EQ(a * inv, RatMatrix::identity(2));
  EXPECT_EQ(determinant(a), Rat(-2));
  RatVector x = solve_particular(a, {Rat(5), Rat(6)});
  EXPECT_EQ(a * x, (RatVector{Rat(5), Rat(6)}));
  EXPECT_THROW(inverse(RatMatrix{{Rat(1), Rat(2)}, {Rat(2), Rat(4)}}), PreconditionError);
}

TEST(Rational, ParseAndReduce) {
  EXPECT_EQ(parse_rational("6/4"), Rat(3, 2));
  EXPECT_EQ(to_string(parse_rational("-6/4")), "-3/2");
  EXPECT_EQ(frac_mod1(Rat(-1, 3)), Rat(2, 3));
  EXPECT_THROW(parse_rational("1/0"), ParseError);
  EXPECT_THROW(parse_rational("abc"), ParseError);
}
