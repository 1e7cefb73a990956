#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectral/distributions.hpp"
#include "scenarios.hpp"

using namespace spectral;
using Crd = Complex<double>;

namespace {

ErrorKind kind_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an Error");
}

struct Fixture {
  OperatorModel<double> model = scenarios::diag3<double>();
  SpectralData<double> sd;
  AtomicMeasure<double> ref;
  BoxGrid<double> grid;
  Fixture()
      : sd(spectral_data(build_compression(model, 1))),
        ref(measure_from_atoms(*model.reference_spectral_measure)),
        grid(build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0})) {}
};

}  // namespace

TEST_CASE("point evaluation is antilinear") {
  const auto d = dirac<double>(Crd(0, 1));
  CHECK(d.bound_K == 1.0);
  CHECK(std::abs(d.eval([](Crd z) { return z; }) - Crd(0, -1)) < 1e-15);
  CHECK(std::abs(d.eval([](Crd z) { return Crd(std::abs(z), 0); }) - Crd(1, 0)) < 1e-15);

  const auto g = build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const auto home = g.find_box(Crd(0, 1));
  REQUIRE(home.has_value());
  CHECK(std::abs(d.box_coeff(g, home->first, home->second) - Crd(1, 0)) == 0.0);
  CHECK(std::abs(d.box_coeff(g, 0, 0)) == 0.0);

  CHECK(d.region_bound(whole_square<double>(2.0)) == 1.0);
  Region<double> corner;
  corner.rects.push_back({1.5, 2.0, 1.5, 2.0});
  CHECK(d.region_bound(corner) == 0.0);
}

TEST_CASE("integration against a reference measure") {
  const Fixture fx;
  const auto mean = from_function<double>([](Crd) { return Crd(1, 0); }, fx.ref);
  CHECK(mean.bound_K == doctest::Approx(1.0));
  const FunctionOnSquare<double> f = [](Crd z) { return z * z; };
  Crd expect(0, 0);
  for (Index k = 0; k < fx.ref.points.size(); ++k)
    expect += std::conj(f(fx.ref.points[k])) * fx.ref.masses[k];
  CHECK(std::abs(mean.eval(f) - expect) < 1e-14);

  // Box coefficients resum to the full integral of g.
  Crd total(0, 0);
  for (Index i = 0; i < fx.grid.boxes_per_side(); ++i)
    for (Index j = 0; j < fx.grid.boxes_per_side(); ++j) total += mean.box_coeff(fx.grid, i, j);
  CHECK(std::abs(total - Crd(1, 0)) < 1e-14);

  const auto zero = from_function<double>([](Crd) { return Crd(0, 0); }, fx.ref);
  CHECK(zero.bound_K == 0.0);
  CHECK(std::abs(zero.eval(f)) == 0.0);
}

TEST_CASE("linear combinations mix evaluations and bounds") {
  const auto d1 = dirac<double>(Crd(1, 0));
  const auto d2 = dirac<double>(Crd(0, 1));
  const Crd a(2, 0), b(0, -1);
  const auto mix = lin_comb(a, d1, b, d2);
  CHECK(mix.bound_K == doctest::Approx(3.0));
  const FunctionOnSquare<double> f = [](Crd z) { return z + Crd(1, 0); };
  CHECK(std::abs(mix.eval(f) - (a * std::conj(f(Crd(1, 0))) + b * std::conj(f(Crd(0, 1))))) <
        1e-14);

  const auto g = build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const auto h1 = g.find_box(Crd(1, 0));
  REQUIRE(h1.has_value());
  CHECK(std::abs(mix.box_coeff(g, h1->first, h1->second) - a) < 1e-15);
}

TEST_CASE("stage/grid schedule on the three-atom model") {
  const Fixture fx;
  std::vector<SpectralData<double>> sds;
  for (int N : {1, 2, 3}) sds.push_back(spectral_data(build_compression(fx.model, N)));
  const auto grids = grid_family<double>(2.0, 2, {-1.0, 0.0, 1.0});
  const auto sched = good_pair_schedule(dirac<double>(Crd(0, 1)), sds, grids, 2, fx.ref);
  REQUIRE(sched.entries.size() == 3);
  for (const auto& e : sched.entries) {
    CHECK(e.valid);
    CHECK(e.n == 2);
    CHECK(e.eps > 0.0);
    CHECK(e.delta_prime == doctest::Approx(1.0 / 3).epsilon(1e-9));
    CHECK(e.delta == doctest::Approx(e.delta_prime / 4096).epsilon(1e-9));
  }
  // Levels never decrease along the schedule.
  for (std::size_t k = 0; k + 1 < sched.entries.size(); ++k)
    CHECK(sched.entries[k].n <= sched.entries[k + 1].n);
}

TEST_CASE("a distribution with zero bound is always schedulable") {
  const Fixture fx;
  const auto zero = from_function<double>([](Crd) { return Crd(0, 0); }, fx.ref);
  std::vector<SpectralData<double>> sds = {fx.sd};
  const auto grids = grid_family<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const auto sched = good_pair_schedule(zero, sds, grids, 1, fx.ref);
  REQUIRE(sched.entries.size() == 1);
  CHECK(sched.entries[0].valid);
}

TEST_CASE("mass sitting on a cut line defeats every strip width") {
  const Fixture fx;
  const auto grids = grid_family<double>(2.0, 1, {-1.0, 0.0, 1.0});
  // A point mass exactly on a vertical cut of the coarsest grid.
  const auto on_cut = dirac<double>(Crd(grids[0].x_cuts[1], 0.3));
  std::vector<SpectralData<double>> sds = {fx.sd};
  const auto sched = good_pair_schedule(on_cut, sds, {grids[0]}, 0, fx.ref);
  REQUIRE(sched.entries.size() == 1);
  CHECK_FALSE(sched.entries[0].valid);
  CHECK(sched.entries[0].n == 0);
  CHECK(sched.entries[0].eps == 0.0);
}

TEST_CASE("coefficient vector of a point mass") {
  const Fixture fx;
  const auto v = theta_vector(dirac<double>(Crd(0, 1)), fx.sd, fx.grid, fx.ref);
  // Exactly one coefficient, sqrt(3), at the eigenvalue i.
  int nonzero = 0;
  for (Index k = 0; k < fx.sd.D_N; ++k) {
    if (std::abs(v.a[k]) == 0.0) continue;
    ++nonzero;
    CHECK(std::abs(fx.sd.lambda[k] - Crd(0, 1)) < 1e-10);
    CHECK(std::abs(v.a[k] - Crd(std::sqrt(3.0), 0)) < 1e-9);
  }
  CHECK(nonzero == 1);
  CHECK(norm0(v) == doctest::Approx(1.0).epsilon(1e-9));

  const auto zero = from_function<double>([](Crd) { return Crd(0, 0); }, fx.ref);
  CHECK(norm2(theta_vector(zero, fx.sd, fx.grid, fx.ref)) == 0.0);
}

TEST_CASE("coefficient vectors are linear in the distribution") {
  const Fixture fx;
  const auto d1 = dirac<double>(Crd(1, 0));
  const auto d2 = dirac<double>(Crd(0, 1));
  const Crd a(0.5, 1), b(-2, 0.25);
  const auto direct = theta_vector(lin_comb(a, d1, b, d2), fx.sd, fx.grid, fx.ref);
  const auto v1 = theta_vector(d1, fx.sd, fx.grid, fx.ref);
  const auto v2 = theta_vector(d2, fx.sd, fx.grid, fx.ref);
  CHECK((direct.a - (a * v1.a + b * v2.a)).norm() < 1e-12);
}

TEST_CASE("a reference atom in a box no stage can see") {
  const Fixture fx;
  std::vector<std::pair<Crd, double>> atoms = {{Crd(1, 0), 0.5}, {Crd(1.9, 1.9), 0.5}};
  const auto stray_ref = measure_from_atoms(atoms);
  CHECK(kind_of([&] { theta_vector(dirac<double>(Crd(1, 0)), fx.sd, fx.grid, stray_ref); }) ==
        ErrorKind::insufficient_n);
}

TEST_CASE("pairing the embedding against the coefficient vector") {
  const Fixture fx;
  const FunctionOnSquare<double> g = [](Crd z) { return z + Crd(0, 0.5); };
  const auto theta = from_function<double>(g, fx.ref);
  const auto v = theta_vector(theta, fx.sd, fx.grid, fx.ref);
  const FunctionOnSquare<double> f = [](Crd z) { return z * z - Crd(0.25, 0); };
  const auto emb = embed_function(f, fx.sd);
  CHECK(std::abs(pairing(emb, v) - theta.eval(f)) < 1e-12);

  // Self-pairing is the squared 2-norm.
  CHECK(std::abs(pairing(emb, emb) - Crd(norm2(emb) * norm2(emb), 0)) < 1e-13);

  // Point masses at different atoms produce orthogonal vectors.
  const auto va = theta_vector(dirac<double>(Crd(1, 0)), fx.sd, fx.grid, fx.ref);
  const auto vb = theta_vector(dirac<double>(Crd(0, 1)), fx.sd, fx.grid, fx.ref);
  CHECK(std::abs(pairing(va, vb)) < 1e-14);
}

TEST_CASE("pairing report splits the bound around the spectrum") {
  const Fixture fx;
  const auto am = counting_measure(fx.sd);
  const auto est = estimate_spectrum({box_masses(am, fx.grid, 0.0)}, 1e-6);
  const auto region = region_from_boxes(fx.grid, est.boxes);
  const auto v = theta_vector(dirac<double>(Crd(0, 1)), fx.sd, fx.grid, fx.ref);
  const auto emb = embed_function<double>([](Crd z) { return z; }, fx.sd);
  const auto rep = pairing_report(emb, v, fx.sd, region, fx.grid.min_gap() / 4);
  CHECK(std::abs(rep.value - pairing(emb, v)) == 0.0);
  CHECK(std::abs(rep.value) <= rep.near_bound + rep.far_bound + 1e-12);
  CHECK(rep.far_bound == 0.0);  // every eigenvalue sits in a charged box
}

TEST_CASE("representation defect and its budget") {
  const Fixture fx;
  const auto theta = dirac<double>(Crd(0, 1));
  const SampledFunction<double> sq{[](Crd z) { return z * z; },
                                   2.0 * std::sqrt(2.0) * fx.sd.M};
  const auto [defect, budget] = representation_defect(theta, sq, fx.sd, fx.grid, fx.ref);
  CHECK(defect <= 1e-10);
  CHECK(defect <= budget);

  const SampledFunction<double> flat{[](Crd) { return Crd(1, 0); }, 0.0};
  const auto [d2, b2] = representation_defect(theta, flat, fx.sd, fx.grid, fx.ref);
  CHECK(d2 <= 1e-12);

  const auto zero = from_function<double>([](Crd) { return Crd(0, 0); }, fx.ref);
  const auto [d3, b3] = representation_defect(zero, sq, fx.sd, fx.grid, fx.ref);
  CHECK(d3 == 0.0);
  CHECK(b3 == 0.0);
}

TEST_CASE("empirical budget without a smoothness hint still covers the defect") {
  const Fixture fx;
  const auto theta = from_function<double>([](Crd z) { return std::conj(z); }, fx.ref);
  const SampledFunction<double> rough{[](Crd z) { return z * z * z; }};  // no hint
  const auto [defect, budget] = representation_defect(theta, rough, fx.sd, fx.grid, fx.ref);
  CHECK(defect <= budget + 1e-12);
}

TEST_CASE("total box coefficient mass respects the stated bound") {
  const Fixture fx;
  const auto [total, limit] = norm0_bound_check(dirac<double>(Crd(0, 1)), fx.sd, fx.grid);
  CHECK(total == doctest::Approx(1.0));
  CHECK(limit == doctest::Approx(16.0));

  const auto zero = from_function<double>([](Crd) { return Crd(0, 0); }, fx.ref);
  const auto [t0, l0] = norm0_bound_check(zero, fx.sd, fx.grid);
  CHECK(t0 == 0.0);
  CHECK(l0 == 0.0);

  const auto mean = from_function<double>([](Crd) { return Crd(1, 0); }, fx.ref);
  const auto [tm, lm] = norm0_bound_check(mean, fx.sd, fx.grid);
  CHECK(tm == doctest::Approx(1.0));
  CHECK(lm == doctest::Approx(16.0));
  CHECK(tm <= lm);
}
