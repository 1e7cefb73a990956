#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectral/types.hpp"

using namespace spectral;
using Crd = Complex<double>;

TEST_CASE("pairing is conjugate-linear in the first slot") {
  VecC<double> x(2), y(2);
  x << Crd(1, 2), Crd(0, -1);
  y << Crd(3, 0), Crd(1, 1);
  const Crd c(0.5, -2);
  CHECK(std::abs(pairing<double>(c * x, y) - std::conj(c) * pairing<double>(x, y)) < 1e-14);
  CHECK(std::abs(pairing<double>(x, c * y) - c * pairing<double>(x, y)) < 1e-14);
  CHECK(std::abs(pairing<double>(x, y) - std::conj(pairing<double>(y, x))) < 1e-14);
}

TEST_CASE("pairing of a vector with itself is its squared length") {
  VecC<double> x(3);
  x << Crd(1, 0), Crd(0, 2), Crd(-1, 1);
  const Crd p = pairing<double>(x, x);
  CHECK(p.imag() == doctest::Approx(0.0));
  CHECK(p.real() == doctest::Approx(x.squaredNorm()));
}

TEST_CASE("polynomial term accumulation and degree") {
  Polynomial<double> p;
  p.add(1, 0, Crd(1, 0)).add(0, 1, Crd(1, 0));
  CHECK(p.degree() == 1);
  p.add(2, 1, Crd(0.5, 0));
  CHECK(p.degree() == 2);
  p.add(2, 1, Crd(-0.5, 0));  // cancels back out
  CHECK(p.degree() == 1);
  CHECK(p.coeff.size() == 2);
}

TEST_CASE("negative exponents are rejected") {
  Polynomial<double> p;
  CHECK_THROWS_AS(p.add(-1, 0, Crd(1, 0)), Error);
  try {
    p.add(0, -2, Crd(1, 0));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
  }
}

TEST_CASE("scalar realization substitutes z and its conjugate") {
  const Crd z(0.3, -1.2);
  CHECK(std::abs(Polynomial<double>::one().eval_at(z) - Crd(1, 0)) < 1e-15);
  CHECK(std::abs(Polynomial<double>::x().eval_at(z) - z) < 1e-15);
  CHECK(std::abs(Polynomial<double>::y().eval_at(z) - std::conj(z)) < 1e-15);
  CHECK(std::abs(Polynomial<double>::xy().eval_at(z) - Crd(std::norm(z), 0)) < 1e-14);

  Polynomial<double> p;
  p.add(2, 0, Crd(1, 0)).add(0, 0, Crd(0, 1));
  CHECK(std::abs(p.eval_at(z) - (z * z + Crd(0, 1))) < 1e-14);
}

TEST_CASE("seeded generators reproduce the same draws") {
  auto r1 = seeded_rng(42);
  auto r2 = seeded_rng(42);
  for (int k = 0; k < 8; ++k) CHECK(r1() == r2());

  auto r3 = seeded_rng(42);
  auto r4 = seeded_rng(42);
  const auto p1 = random_polynomial<double>(r3, 3);
  const auto p2 = random_polynomial<double>(r4, 3);
  REQUIRE(p1.coeff.size() == p2.coeff.size());
  const Crd z(0.7, 0.1);
  CHECK(std::abs(p1.eval_at(z) - p2.eval_at(z)) == 0.0);
}

TEST_CASE("random polynomials respect the degree bound") {
  auto rng = seeded_rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_polynomial<double>(rng, 4);
    CHECK(p.degree() <= 4);
    for (const auto& [ij, c] : p.coeff) {
      CHECK(std::abs(c.real()) <= 1.0);
      CHECK(std::abs(c.imag()) <= 1.0);
    }
  }
}

TEST_CASE("error text carries its category") {
  const Error e(ErrorKind::truncation, "off the end");
  CHECK(std::string(e.what()).find("truncation") != std::string::npos);
  CHECK(e.kind() == ErrorKind::truncation);
}
