#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectral/embedding.hpp"
#include "scenarios.hpp"

using namespace spectral;
using Crd = Complex<double>;

namespace {

struct Fixture {
  OperatorModel<double> model;
  CompressionSpaces<double> cs;
  SpectralData<double> sd;
  explicit Fixture(const OperatorModel<double>& m, int N)
      : model(m), cs(build_compression(m, N)), sd(spectral_data(cs)) {}
};

}  // namespace

TEST_CASE("embedding weights coefficients by the seed") {
  const Fixture fx(scenarios::diag3<double>(), 1);
  const FunctionOnSquare<double> f = [](Crd z) { return z; };
  const auto v = embed_function(f, fx.sd);
  REQUIRE(v.a.size() == 3);
  for (Index n = 0; n < 3; ++n)
    CHECK(std::abs(v.a[n] - Crd(fx.sd.xi[n], 0) * fx.sd.lambda[n]) < 1e-14);
}

TEST_CASE("constant function has unit 2-norm and 0-norm") {
  const Fixture fx(scenarios::diag3<double>(), 2);
  const auto v = embed_function<double>([](Crd) { return Crd(1, 0); }, fx.sd);
  CHECK(norm2(v) == doctest::Approx(1.0).epsilon(1e-12));
  // norm0 of the constant is sum xi_n^2 = 1 as well.
  CHECK(norm0(v) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sup-norm cancels the seed weights") {
  const Fixture fx(scenarios::diag3<double>(), 1);
  const FunctionOnSquare<double> f = [](Crd z) { return z * z + Crd(0.5, 0); };
  const auto v = embed_function(f, fx.sd);
  const auto whole = whole_square<double>(double(fx.sd.M));
  double expect = 0;
  for (Index n = 0; n < fx.sd.D_N; ++n) expect = std::max(expect, std::abs(f(fx.sd.lambda[n])));
  CHECK(norm_inf(v, whole) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sup-norm conventions on zero weights") {
  SpectralData<double> sd;
  sd.N = 0;
  sd.D_N = 2;
  sd.M = 2;
  sd.lambda = VecC<double>(2);
  sd.lambda << Crd(1, 0), Crd(-1, 0);
  sd.xi = VecR<double>(2);
  sd.xi << 1.0, 0.0;
  const auto whole = whole_square<double>(2.0);

  HNVector<double> v;
  v.sd = &sd;
  v.a = VecC<double>(2);
  v.a << Crd(0.5, 0), Crd(0, 0);
  CHECK(norm_inf(v, whole) == doctest::Approx(0.5));  // 0/0 counts as 0

  v.a[1] = Crd(0.1, 0);
  CHECK(std::isinf(norm_inf(v, whole)));  // nonzero over zero weight
}

TEST_CASE("norms nest like weighted Hoelder bounds") {
  const Fixture fx(scenarios::shift_for_stage<double>(6), 6);
  auto rng = seeded_rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto whole = whole_square<double>(double(fx.sd.M));
  for (int trial = 0; trial < 10; ++trial) {
    HNVector<double> v;
    v.sd = &fx.sd;
    v.a = VecC<double>(fx.sd.D_N);
    for (Index n = 0; n < fx.sd.D_N; ++n) v.a[n] = Crd(u(rng), u(rng)) * fx.sd.xi[n];
    CHECK(norm0(v) <= norm2(v) + 1e-12);
    CHECK(norm2(v) <= norm_inf(v, whole) + 1e-12);
  }
}

TEST_CASE("shrinking-neighborhood sup-norm schedule is monotone") {
  const Fixture fx(scenarios::diag3<double>(), 1);
  const auto v = embed_function<double>([](Crd z) { return z; }, fx.sd);
  Region<double> spot;
  spot.rects.push_back({0.9, 1.1, -0.1, 0.1});  // around the atom at 1
  const auto rows = norm_inf_schedule(v, fx.sd, spot, 4);
  REQUIRE(rows.size() == 5);
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    CHECK(rows[k].first == doctest::Approx(2.0 * rows[k + 1].first));
    CHECK(rows[k].second >= rows[k + 1].second - 1e-12);
  }
  CHECK(rows.back().second == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("embedding is an isometry against the reference measure") {
  const Fixture fx(scenarios::diag3<double>(), 2);
  const auto ref = measure_from_atoms(*fx.model.reference_spectral_measure);
  auto rng = seeded_rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto P = random_polynomial<double>(rng, 3);
    const FunctionOnSquare<double> f = [&P](Crd z) { return P.eval_at(z); };
    CHECK(isometry_defect(f, fx.sd, ref) < 1e-12);
  }
}

TEST_CASE("shift embedding is exactly isometric for low-degree products") {
  for (int N : {1, 2, 3, 5, 8}) {
    const Fixture fx(scenarios::shift_for_stage<double>(N), N);
    const auto v = embed_function<double>([](Crd z) { return z + std::conj(z); }, fx.sd);
    // Against the circle average, ||z + conj(z)||^2 = 2.
    CHECK(std::abs(norm2(v) * norm2(v) - 2.0) < 1e-9);
  }
}

TEST_CASE("embedded polynomials match the operator calculus") {
  const Fixture shift(scenarios::shift_for_stage<double>(5), 5);
  const Fixture diag(scenarios::diag3<double>(), 1);
  auto rng = seeded_rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto P5 = random_polynomial<double>(rng, 5);
    CHECK(polynomial_consistency(shift.model, shift.cs, shift.sd, P5) < 1e-8);
    const auto P1 = random_polynomial<double>(rng, 1);
    CHECK(polynomial_consistency(diag.model, diag.cs, diag.sd, P1) < 1e-8);
  }
}

TEST_CASE("a degree beyond the stage yields a defect, not an error") {
  const Fixture fx(scenarios::shift_for_stage<double>(1), 1);
  Polynomial<double> deep;
  deep.add(2, 0, Crd(1, 0));  // completion wraps where the function does not
  CHECK_NOTHROW(polynomial_consistency(fx.model, fx.cs, fx.sd, deep));
}

TEST_CASE("coefficients die off outside the charged boxes") {
  const Fixture fx(scenarios::diag3<double>(), 2);
  const auto am = counting_measure(fx.sd);
  const auto g = build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const auto est = estimate_spectrum({box_masses(am, g, 0.0)}, 1e-6);
  const auto region = region_from_boxes(g, est.boxes);
  const auto v = embed_function<double>([](Crd z) { return z * z; }, fx.sd);
  CHECK(zero_good_defect(v, fx.sd, region) < 1e-12);

  // A region missing one atom picks up exactly that atom's contribution.
  Region<double> partial = region;
  partial.rects.erase(partial.rects.begin());
  CHECK(zero_good_defect(v, fx.sd, partial) > 0.1);
}

TEST_CASE("box indicator vectors normalize to the box mass") {
  const Fixture fx(scenarios::diag3<double>(), 1);
  const auto am = counting_measure(fx.sd);
  const auto g = build_grid<double>(2.0, 0, {-1.0, 0.0, 1.0});
  const auto bm = box_masses(am, g, 0.0);
  const auto ij = g.find_box(Crd(1, 0));
  REQUIRE(ij.has_value());
  const double mu = bm.mass(ij->first, ij->second);
  // Indicator of the box, embedded: a_n = xi_n for members, 0 elsewhere.
  HNVector<double> v;
  v.sd = &fx.sd;
  v.a = VecC<double>::Zero(fx.sd.D_N);
  for (Index n = 0; n < fx.sd.D_N; ++n)
    if (g.find_box(fx.sd.lambda[n]) == ij) v.a[n] = Crd(fx.sd.xi[n] / mu, 0);
  CHECK(norm2(v) == doctest::Approx(1.0 / std::sqrt(mu)).epsilon(1e-10));
}
