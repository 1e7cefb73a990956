#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectral/measure.hpp"
#include "scenarios.hpp"

#include <set>

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

AtomicMeasure<double> diag3_measure() {
  const auto model = scenarios::diag3<double>();
  return counting_measure(spectral_data(build_compression(model, 1)));
}

AtomicMeasure<double> shift_measure(int N) {
  const auto model = scenarios::shift_for_stage<double>(N);
  return counting_measure(spectral_data(build_compression(model, N)));
}

}  // namespace

TEST_CASE("counting measure carries the squared seed weights") {
  const auto am = diag3_measure();
  REQUIRE(am.points.size() == 3);
  CHECK(am.total == doctest::Approx(1.0).epsilon(1e-12));
  for (Index k = 0; k < 3; ++k) CHECK(am.masses[k] == doctest::Approx(1.0 / 3).epsilon(1e-10));
  CHECK(std::abs(am.points[0] - Crd(-1, 0)) < 1e-10);
}

TEST_CASE("atom lists convert to measures") {
  const auto model = scenarios::diag3<double>();
  const auto am = measure_from_atoms(*model.reference_spectral_measure);
  CHECK(am.points.size() == 3);
  CHECK(am.total == doctest::Approx(1.0));
}

TEST_CASE("grid cut layout") {
  const auto g0 = build_grid<double>(2.0, 0);
  CHECK(g0.x_cuts.size() == 5);
  CHECK(g0.x_cuts[0] == -2.0);
  CHECK(g0.x_cuts[4] == 2.0);
  for (Index k = 0; k + 1 < g0.x_cuts.size(); ++k) CHECK(g0.x_cuts[k] < g0.x_cuts[k + 1]);
  CHECK(g0.boxes_per_side() == 4);
  CHECK(g0.min_gap() > 0.0);

  const auto g3 = build_grid<double>(2.0, 3);
  CHECK(g3.x_cuts.size() == 33);

  CHECK(kind_of([] { build_grid<double>(2.0, -1); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { build_grid<double>(0.0, 0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("grid jitter steers cuts away from atomic lines") {
  // Ask for a grid whose default interior cuts would all be disallowed.
  const auto plain = build_grid<double>(2.0, 1);
  std::vector<double> lines(plain.x_cuts.data() + 1, plain.x_cuts.data() + plain.x_cuts.size() - 1);
  const auto dodged = build_grid<double>(2.0, 1, lines);
  for (double line : lines)
    for (Index k = 0; k < dodged.x_cuts.size(); ++k)
      CHECK(std::abs(dodged.x_cuts[k] - line) >= 1e-9);
}

TEST_CASE("refinement keeps every coarse cut") {
  const auto g0 = build_grid<double>(2.0, 0);
  const auto g1 = refine(g0);
  CHECK(g1.level == 1);
  CHECK(g1.x_cuts.size() == 2 * g0.x_cuts.size() - 1);
  for (Index k = 0; k < g0.x_cuts.size(); ++k) CHECK(g1.x_cuts[2 * k] == g0.x_cuts[k]);
  // Conservation: total box mass is the same on both grids.
  const auto am = diag3_measure();
  const auto b0 = box_masses(am, g0, 0.0);
  const auto b1 = box_masses(am, g1, 0.0);
  CHECK(b0.mass.sum() == doctest::Approx(b1.mass.sum()).epsilon(1e-12));
}

TEST_CASE("box lookup is open-box and rejects cut points") {
  const auto g = build_grid<double>(2.0, 0);
  CHECK(g.find_box(Crd(g.x_cuts[1], 0.1)) == std::nullopt);  // on a vertical cut
  CHECK(g.find_box(Crd(2.5, 0)) == std::nullopt);            // outside
  const auto ij = g.find_box(Crd(0.0, 0.0));
  REQUIRE(ij.has_value());
  CHECK(g.x_cuts[ij->first] < 0.0);
  CHECK(0.0 < g.x_cuts[ij->first + 1]);
}

TEST_CASE("box masses: three atoms in three boxes") {
  const auto am = diag3_measure();
  const auto g = build_grid<double>(2.0, 0, {-1.0, 0.0, 1.0});
  const auto bm = box_masses(am, g, 0.0);
  CHECK(bm.boundary_mass == 0.0);
  CHECK(bm.strip_mass == 0.0);
  int charged = 0;
  for (Index i = 0; i < bm.mass.rows(); ++i)
    for (Index j = 0; j < bm.mass.cols(); ++j)
      if (bm.mass(i, j) > 0) {
        ++charged;
        CHECK(bm.mass(i, j) == doctest::Approx(1.0 / 3).epsilon(1e-10));
      }
  CHECK(charged == 3);
  CHECK(bm.mass.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("box masses: empty measure, strip accounting, input checks") {
  AtomicMeasure<double> empty;
  empty.points = VecC<double>(0);
  empty.masses = VecR<double>(0);
  const auto g = build_grid<double>(2.0, 1);
  const auto bm = box_masses(empty, g, 0.0);
  CHECK(bm.mass.sum() == 0.0);
  CHECK(bm.boundary_mass == 0.0);

  // An atom close to a cut line shows up in the strip tally.
  AtomicMeasure<double> near;
  near.points = VecC<double>(1);
  near.points[0] = Crd(g.x_cuts[2] + 1e-6, 0.3);
  near.masses = VecR<double>::Ones(1);
  near.total = 1.0;
  CHECK(box_masses(near, g, 1e-5).strip_mass == 1.0);
  CHECK(box_masses(near, g, 1e-8).strip_mass == 0.0);

  CHECK(kind_of([&] { box_masses(near, g, g.min_gap()); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { box_masses(near, g, -0.1); }) == ErrorKind::invalid_argument);
}

TEST_CASE("shift atoms separate into their own boxes at level two") {
  const auto am = shift_measure(2);  // five equispaced unit-circle atoms
  const auto g = build_grid<double>(2.0, 2);
  const auto bm = box_masses(am, g, 0.0);
  int charged = 0;
  for (Index i = 0; i < bm.mass.rows(); ++i)
    for (Index j = 0; j < bm.mass.cols(); ++j)
      if (bm.mass(i, j) > 0) {
        ++charged;
        CHECK(bm.mass(i, j) == doctest::Approx(0.2).epsilon(1e-9));
      }
  CHECK(charged == 5);
}

TEST_CASE("atomic line detection on the three-atom model") {
  const std::vector<AtomicMeasure<double>> ms = {diag3_measure(), diag3_measure()};
  const auto lines = detect_atomic_lines(ms, 0.2);
  REQUIRE(lines.first.size() == 3);
  CHECK(lines.first[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(lines.first[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(lines.first[2] == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(lines.second.size() == 2);  // imaginary parts 0 (twice) and 1
  CHECK(lines.second[0] == doctest::Approx(0.0));
  CHECK(lines.second[1] == doctest::Approx(1.0));

  const auto picky = detect_atomic_lines(ms, 0.4);
  CHECK(picky.first.empty());
  REQUIRE(picky.second.size() == 1);  // only im = 0 carries 2/3

  CHECK(detect_atomic_lines(ms, 1.5).first.empty());
  CHECK(detect_atomic_lines(ms, 1.5).second.empty());
  CHECK(kind_of([&] { detect_atomic_lines(ms, 0.0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("spectrum estimate keeps boxes above the floor") {
  const auto am = diag3_measure();
  const auto g = build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const std::vector<BoxMasses<double>> seq = {box_masses(am, g, 0.0), box_masses(am, g, 0.0)};
  const auto est = estimate_spectrum(seq, 1e-3);
  CHECK(est.boxes.size() == 3);
  for (bool s : est.stable) CHECK(s);
  for (double m : est.last_mass) CHECK(m == doctest::Approx(1.0 / 3));

  CHECK(estimate_spectrum(seq, 1.5).boxes.empty());
  CHECK(kind_of([] { estimate_spectrum<double>({}, 0.1); }) == ErrorKind::invalid_argument);
}

TEST_CASE("charged boxes at a deep stage trace the unit circle") {
  const auto am = shift_measure(50);  // 101 equispaced unit-circle atoms
  const auto g = build_grid<double>(2.0, 2);
  const auto est = estimate_spectrum({box_masses(am, g, 0.0)}, 1e-3);

  std::set<std::pair<Index, Index>> charged(est.boxes.begin(), est.boxes.end());
  std::set<std::pair<Index, Index>> circle;
  for (Index i = 0; i < g.boxes_per_side(); ++i)
    for (Index j = 0; j < g.boxes_per_side(); ++j) {
      const double x0 = g.x_cuts[i], x1 = g.x_cuts[i + 1];
      const double y0 = g.y_cuts[j], y1 = g.y_cuts[j + 1];
      const double cx = std::max({x0, std::min(x1, 0.0)});
      const double cy = std::max({y0, std::min(y1, 0.0)});
      const double dmin = std::hypot(cx, cy);
      double dmax = 0;
      for (double xc : {x0, x1})
        for (double yc : {y0, y1}) dmax = std::max(dmax, std::hypot(xc, yc));
      if (dmin <= 1.0 && 1.0 <= dmax) circle.insert({i, j});
    }
  CHECK(charged == circle);
}

TEST_CASE("discrepancy between mass tables") {
  const auto g = build_grid<double>(2.0, 1, {-1.0, 0.0, 1.0});
  const auto am = diag3_measure();
  const auto bm = box_masses(am, g, 0.0);
  CHECK(measure_discrepancy(bm, bm) <= 1e-12);
  CHECK(measure_discrepancy(bm, am) <= 1e-12);  // same atoms, rebinned

  AtomicMeasure<double> left, right;
  left.points = VecC<double>(1);
  left.points[0] = Crd(1, 0);
  left.masses = VecR<double>::Ones(1);
  right.points = VecC<double>(1);
  right.points[0] = Crd(-1, 0);
  right.masses = VecR<double>::Ones(1);
  CHECK(measure_discrepancy(box_masses(left, g, 0.0), box_masses(right, g, 0.0)) ==
        doctest::Approx(1.0));

  const auto finer = build_grid<double>(2.0, 2);
  CHECK(kind_of([&] { measure_discrepancy(bm, box_masses(am, finer, 0.0)); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("successive shift stages agree box by box") {
  const auto g = build_grid<double>(2.0, 2);
  const auto b50 = box_masses(shift_measure(50), g, 0.0);
  const auto b100 = box_masses(shift_measure(100), g, 0.0);
  CHECK(measure_discrepancy(b50, b100) <= 2.0 / 101);
}

TEST_CASE("reference measure prefers the model's analytic atoms") {
  const auto diag = scenarios::diag3<double>();
  const auto sd = spectral_data(build_compression(diag, 1));
  const auto ref = reference_measure(diag, sd);
  CHECK(ref.points.size() == 3);

  const auto shift = scenarios::shift_for_stage<double>(3);
  const auto ssd = spectral_data(build_compression(shift, 3));
  const auto sref = reference_measure(shift, ssd);
  CHECK(sref.points.size() == ssd.D_N);  // falls back to the counting measure
}

TEST_CASE("finest level with massive boxes around every target") {
  const auto grids = grid_family<double>(2.0, 3, {-1.0, 0.0, 1.0});
  const auto am = diag3_measure();
  std::vector<Crd> targets = {Crd(1, 0), Crd(0, 1), Crd(-1, 0)};
  CHECK(max_usable_level(grids, am, targets) == 3);

  targets.push_back(Crd(1.9, 1.9));
  CHECK(kind_of([&] { max_usable_level(grids, am, targets); }) == ErrorKind::insufficient_n);
}

TEST_CASE("regions contain points up to fattening") {
  const auto g = build_grid<double>(2.0, 0);
  auto r = region_from_boxes(g, {{1, 1}});
  const double x_mid = (g.x_cuts[1] + g.x_cuts[2]) / 2;
  const double y_mid = (g.y_cuts[1] + g.y_cuts[2]) / 2;
  CHECK(r.contains(Crd(x_mid, y_mid)));
  CHECK_FALSE(r.contains(Crd(x_mid + 2.5, y_mid)));
  r.fatten = 3.0;
  CHECK(r.contains(Crd(x_mid + 2.5, y_mid)));

  const auto whole = whole_square<double>(2.0);
  CHECK(whole.contains(Crd(1.99, -1.99)));
  CHECK_FALSE(whole.contains(Crd(2.01, 0)));

  const auto lines = line_region(g, 0.01);
  CHECK(lines.contains(Crd(g.x_cuts[2] + 0.005, 0.3)));
  CHECK_FALSE(lines.contains(Crd(x_mid, y_mid)));
}
