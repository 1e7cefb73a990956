#pragma once

// Counting measures on eigenvalue data, jittered dyadic box grids over the
// working square, box-mass tables, atomic-line detection, spectrum estimation
// and convergence diagnostics.

#include "spectral/compression.hpp"
#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace spectral {

template <typename Real>
struct AtomicMeasure {
  VecC<Real> points;
  VecR<Real> masses;
  Real total = Real(0);
};

template <typename Real>
AtomicMeasure<Real> counting_measure(const SpectralData<Real>& sd) {
  AtomicMeasure<Real> am;
  am.points = sd.lambda;
  am.masses = sd.xi.cwiseProduct(sd.xi);
  am.total = am.masses.sum();
  return am;
}

template <typename Real>
AtomicMeasure<Real> measure_from_atoms(const std::vector<std::pair<Complex<Real>, Real>>& atoms) {
  AtomicMeasure<Real> am;
  am.points = VecC<Real>(static_cast<Index>(atoms.size()));
  am.masses = VecR<Real>(static_cast<Index>(atoms.size()));
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    am.points[static_cast<Index>(k)] = atoms[k].first;
    am.masses[static_cast<Index>(k)] = atoms[k].second;
  }
  am.total = am.masses.sum();
  return am;
}

template <typename Real>
struct BoxGrid {
  Real M = Real(2);
  int level = 0;
  VecR<Real> x_cuts;  // strictly increasing, first = -M, last = M
  VecR<Real> y_cuts;
  Real eta = Real(0.5);

  Index boxes_per_side() const { return x_cuts.size() - 1; }

  Real min_gap() const {
    Real g = std::numeric_limits<Real>::max();
    for (Index k = 0; k + 1 < x_cuts.size(); ++k) g = std::min(g, x_cuts[k + 1] - x_cuts[k]);
    for (Index k = 0; k + 1 < y_cuts.size(); ++k) g = std::min(g, y_cuts[k + 1] - y_cuts[k]);
    return g;
  }

  // Open-box lookup: index pair of the box strictly containing z, or nothing
  // when z lies on a cut line or outside the square.
  std::optional<std::pair<Index, Index>> find_box(Complex<Real> z) const {
    auto locate = [](const VecR<Real>& cuts, Real v) -> Index {
      const Real* begin = cuts.data();
      const Real* end = begin + cuts.size();
      const Real* it = std::upper_bound(begin, end, v);
      if (it == begin || it == end) return -1;
      Index i = static_cast<Index>(it - begin) - 1;
      if (v == cuts[i]) return -1;  // exactly on a cut
      return i;
    };
    Index i = locate(x_cuts, z.real());
    if (i < 0) return std::nullopt;
    Index j = locate(y_cuts, z.imag());
    if (j < 0) return std::nullopt;
    return std::make_pair(i, j);
  }

  Real box_diameter(Index i, Index j) const {
    const Real dx = x_cuts[i + 1] - x_cuts[i];
    const Real dy = y_cuts[j + 1] - y_cuts[j];
    return std::sqrt(dx * dx + dy * dy);
  }
};

// Dyadic cuts over [-M, M], 2^(level+2)+1 per axis, interior cuts shifted by
// eta times the step so that they avoid the supplied atomic coordinate lines;
// endpoints stay pinned. The jitter is retried (halved, plus a nudge) until
// every cut clears every atom line by 1e-9.
template <typename Real>
BoxGrid<Real> build_grid(Real M, int level, const std::vector<Real>& atom_lines = {},
                         Real eta = Real(0.5)) {
  if (level < 0) throw Error(ErrorKind::invalid_argument, "grid level must be nonnegative");
  if (!(M > Real(0))) throw Error(ErrorKind::invalid_argument, "square half-side must be positive");
  const Index segments = Index(1) << (level + 2);
  const Real step = Real(2) * M / Real(segments);
  const Real clearance = Real(1e-9);

  Real jitter = eta;
  for (int attempt = 0; attempt <= 50; ++attempt) {
    VecR<Real> cuts(segments + 1);
    cuts[0] = -M;
    cuts[segments] = M;
    for (Index k = 1; k < segments; ++k) cuts[k] = -M + (Real(k) + jitter) * step;
    bool clear = true;
    for (Real line : atom_lines) {
      for (Index k = 0; k <= segments && clear; ++k)
        if (std::abs(cuts[k] - line) < clearance) clear = false;
      if (!clear) break;
    }
    if (clear) {
      BoxGrid<Real> g;
      g.M = M;
      g.level = level;
      g.x_cuts = cuts;
      g.y_cuts = cuts;
      g.eta = jitter;
      return g;
    }
    jitter = jitter / Real(2) + Real(0.001);
  }
  throw Error(ErrorKind::grid_construction, "no jitter clears the supplied atomic lines");
}

// Midpoint refinement: keeps every existing cut, halves every gap.
template <typename Real>
BoxGrid<Real> refine(const BoxGrid<Real>& grid) {
  auto split = [](const VecR<Real>& cuts) {
    VecR<Real> out(2 * cuts.size() - 1);
    for (Index k = 0; k + 1 < cuts.size(); ++k) {
      out[2 * k] = cuts[k];
      out[2 * k + 1] = (cuts[k] + cuts[k + 1]) / Real(2);
    }
    out[out.size() - 1] = cuts[cuts.size() - 1];
    return out;
  };
  BoxGrid<Real> g;
  g.M = grid.M;
  g.level = grid.level + 1;
  g.x_cuts = split(grid.x_cuts);
  g.y_cuts = split(grid.y_cuts);
  g.eta = grid.eta;
  return g;
}

// One grid per level 0..max_level, each built directly at its own scale with
// the same jitter policy. (refine() is the nesting-preserving alternative.)
template <typename Real>
std::vector<BoxGrid<Real>> grid_family(Real M, int max_level, const std::vector<Real>& atom_lines = {},
                                       Real eta = Real(0.5)) {
  std::vector<BoxGrid<Real>> out;
  for (int n = 0; n <= max_level; ++n) out.push_back(build_grid<Real>(M, n, atom_lines, eta));
  return out;
}

template <typename Real>
struct BoxMasses {
  BoxGrid<Real> grid;
  MatR<Real> mass;          // mass[i][j] over open boxes
  Real boundary_mass = 0;   // mass sitting exactly on cut lines (or outside the square)
  Real strip_mass = 0;      // mass within eps of the union of cut lines
  Real eps = 0;
};

template <typename Real>
BoxMasses<Real> box_masses(const AtomicMeasure<Real>& am, const BoxGrid<Real>& grid, Real eps) {
  if (!(eps < grid.min_gap() / Real(2)))
    throw Error(ErrorKind::invalid_argument, "strip width must be below half the minimal cut gap");
  if (eps < Real(0)) throw Error(ErrorKind::invalid_argument, "strip width must be nonnegative");
  BoxMasses<Real> bm;
  bm.grid = grid;
  bm.eps = eps;
  const Index nb = grid.boxes_per_side();
  bm.mass = MatR<Real>::Zero(nb, nb);
  for (Index k = 0; k < am.points.size(); ++k) {
    const Complex<Real> z = am.points[k];
    const Real m = am.masses[k];
    if (m == Real(0)) continue;
    if (auto ij = grid.find_box(z))
      bm.mass(ij->first, ij->second) += m;
    else
      bm.boundary_mass += m;
    bool near_line = false;
    for (Index c = 0; c < grid.x_cuts.size() && !near_line; ++c)
      if (std::abs(z.real() - grid.x_cuts[c]) <= eps) near_line = true;
    for (Index c = 0; c < grid.y_cuts.size() && !near_line; ++c)
      if (std::abs(z.imag() - grid.y_cuts[c]) <= eps) near_line = true;
    if (near_line) bm.strip_mass += m;
  }
  return bm;
}

// Coordinate lines whose 1e-9 strip carries more than delta of the mass in
// every supplied measure. Candidates are taken from the first measure.
template <typename Real>
std::pair<std::vector<Real>, std::vector<Real>> detect_atomic_lines(
    const std::vector<AtomicMeasure<Real>>& measures, Real delta) {
  if (delta <= Real(0)) throw Error(ErrorKind::invalid_argument, "threshold must be positive");
  std::pair<std::vector<Real>, std::vector<Real>> out;
  if (measures.empty()) return out;
  const Real width = Real(1e-9);

  auto strip_mass = [&](const AtomicMeasure<Real>& am, Real line, bool x_axis) {
    Real s(0);
    for (Index k = 0; k < am.points.size(); ++k) {
      const Real coord = x_axis ? am.points[k].real() : am.points[k].imag();
      if (std::abs(coord - line) < width) s += am.masses[k];
    }
    return s;
  };

  for (int axis = 0; axis < 2; ++axis) {
    const bool x_axis = (axis == 0);
    std::vector<Real> coords;
    for (Index k = 0; k < measures[0].points.size(); ++k)
      coords.push_back(x_axis ? measures[0].points[k].real() : measures[0].points[k].imag());
    std::sort(coords.begin(), coords.end());
    std::vector<Real> candidates;
    for (Real c : coords)
      if (candidates.empty() || c - candidates.back() > width) candidates.push_back(c);
    std::vector<Real>& lines = x_axis ? out.first : out.second;
    for (Real line : candidates) {
      bool in_all = true;
      for (const auto& am : measures)
        if (!(strip_mass(am, line, x_axis) > delta)) {
          in_all = false;
          break;
        }
      if (in_all) lines.push_back(line);
    }
  }
  return out;
}

template <typename Real>
struct SpectrumEstimate {
  BoxGrid<Real> grid;
  std::vector<std::pair<Index, Index>> boxes;  // mass >= floor in the last measure
  std::vector<bool> stable;                    // mass >= floor in every measure
  std::vector<Real> last_mass;
};

template <typename Real>
bool same_grid(const BoxGrid<Real>& a, const BoxGrid<Real>& b) {
  return a.level == b.level && a.x_cuts.size() == b.x_cuts.size() &&
         a.y_cuts.size() == b.y_cuts.size() && a.x_cuts.cwiseEqual(b.x_cuts).all() &&
         a.y_cuts.cwiseEqual(b.y_cuts).all();
}

template <typename Real>
SpectrumEstimate<Real> estimate_spectrum(const std::vector<BoxMasses<Real>>& bm_sequence, Real floor) {
  if (bm_sequence.empty()) throw Error(ErrorKind::invalid_argument, "empty mass sequence");
  for (std::size_t k = 1; k < bm_sequence.size(); ++k)
    if (!same_grid(bm_sequence[k].grid, bm_sequence[0].grid))
      throw Error(ErrorKind::invalid_argument, "mass tables live on different grids");
  SpectrumEstimate<Real> se;
  se.grid = bm_sequence.back().grid;
  const auto& last = bm_sequence.back().mass;
  for (Index i = 0; i < last.rows(); ++i)
    for (Index j = 0; j < last.cols(); ++j) {
      if (!(last(i, j) >= floor)) continue;
      bool stable = true;
      for (const auto& bm : bm_sequence)
        if (!(bm.mass(i, j) >= floor)) {
          stable = false;
          break;
        }
      se.boxes.emplace_back(i, j);
      se.stable.push_back(stable);
      se.last_mass.push_back(last(i, j));
    }
  return se;
}

template <typename Real>
Real measure_discrepancy(const BoxMasses<Real>& bm, const BoxMasses<Real>& reference) {
  if (!same_grid(bm.grid, reference.grid))
    throw Error(ErrorKind::invalid_argument, "discrepancy needs a shared grid");
  return (bm.mass - reference.mass).cwiseAbs().maxCoeff();
}

template <typename Real>
Real measure_discrepancy(const BoxMasses<Real>& bm, const AtomicMeasure<Real>& reference) {
  return measure_discrepancy(bm, box_masses(reference, bm.grid, Real(0)));
}

// The analytic reference measure when the model declares one, else the
// counting measure of the supplied (finest) stage.
template <typename Real>
AtomicMeasure<Real> reference_measure(const OperatorModel<Real>& model, const SpectralData<Real>& finest) {
  if (model.reference_spectral_measure) return measure_from_atoms(*model.reference_spectral_measure);
  return counting_measure(finest);
}

// Largest level at which every target point sits in a box of positive mass.
template <typename Real>
int max_usable_level(const std::vector<BoxGrid<Real>>& grids, const AtomicMeasure<Real>& am,
                     const std::vector<Complex<Real>>& targets) {
  for (auto it = grids.rbegin(); it != grids.rend(); ++it) {
    const BoxMasses<Real> bm = box_masses(am, *it, Real(0));
    bool ok = true;
    for (const auto& t : targets) {
      auto ij = it->find_box(t);
      if (!ij || !(bm.mass(ij->first, ij->second) > Real(0))) {
        ok = false;
        break;
      }
    }
    if (ok) return it->level;
  }
  throw Error(ErrorKind::insufficient_n, "no grid level gives every target a massive box");
}

// Finite unions of closed axis-aligned rectangles, optionally fattened.
template <typename Real>
struct Region {
  struct Rect {
    Real x_lo, x_hi, y_lo, y_hi;
  };
  std::vector<Rect> rects;
  Real fatten = Real(0);

  bool contains(Complex<Real> z) const {
    for (const auto& r : rects)
      if (z.real() >= r.x_lo - fatten && z.real() <= r.x_hi + fatten && z.imag() >= r.y_lo - fatten &&
          z.imag() <= r.y_hi + fatten)
        return true;
    return false;
  }
};

template <typename Real>
Region<Real> whole_square(Real M) {
  Region<Real> r;
  r.rects.push_back({-M, M, -M, M});
  return r;
}

template <typename Real>
Region<Real> region_from_boxes(const BoxGrid<Real>& grid,
                               const std::vector<std::pair<Index, Index>>& boxes, Real fatten = Real(0)) {
  Region<Real> r;
  r.fatten = fatten;
  for (auto [i, j] : boxes)
    r.rects.push_back({grid.x_cuts[i], grid.x_cuts[i + 1], grid.y_cuts[j], grid.y_cuts[j + 1]});
  return r;
}

// The eps-strip around the union of all cut lines of a grid.
template <typename Real>
Region<Real> line_region(const BoxGrid<Real>& grid, Real eps) {
  Region<Real> r;
  r.fatten = eps;
  for (Index c = 0; c < grid.x_cuts.size(); ++c)
    r.rects.push_back({grid.x_cuts[c], grid.x_cuts[c], -grid.M, grid.M});
  for (Index c = 0; c < grid.y_cuts.size(); ++c)
    r.rects.push_back({-grid.M, grid.M, grid.y_cuts[c], grid.y_cuts[c]});
  return r;
}

}  // namespace spectral
