#pragma once

// Bounded antilinear functionals on sampled continuous functions, grid/strip
// schedules that make their box data trustworthy, the coefficient vectors that
// represent them, and the pairing identity connecting the two.

#include "spectral/compression.hpp"
#include "spectral/embedding.hpp"
#include "spectral/measure.hpp"
#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace spectral {

// Antilinear functional theta together with the per-box coefficients
// theta(B, 1), a certified bound over region-supported functions of sup-norm
// at most one, and the global bound |theta(f)| <= bound_K * sup |f|.
template <typename Real>
struct GeneralizedDistribution {
  std::function<Complex<Real>(const FunctionOnSquare<Real>&)> eval;
  std::function<Complex<Real>(const BoxGrid<Real>&, Index, Index)> box_coeff;
  std::function<Real(const Region<Real>&)> region_bound;
  Real bound_K = Real(0);
};

// Point evaluation, antilinear: eval(f) = conj(f(alpha)).
template <typename Real>
GeneralizedDistribution<Real> dirac(Complex<Real> alpha) {
  GeneralizedDistribution<Real> d;
  d.bound_K = Real(1);
  d.eval = [alpha](const FunctionOnSquare<Real>& f) { return std::conj(f(alpha)); };
  d.box_coeff = [alpha](const BoxGrid<Real>& grid, Index i, Index j) -> Complex<Real> {
    auto ij = grid.find_box(alpha);
    if (ij && ij->first == i && ij->second == j) return Complex<Real>(1, 0);
    return Complex<Real>(0, 0);
  };
  d.region_bound = [alpha](const Region<Real>& r) { return r.contains(alpha) ? Real(1) : Real(0); };
  return d;
}

// Integration of conj(f) * g against a reference atomic measure.
template <typename Real>
GeneralizedDistribution<Real> from_function(const FunctionOnSquare<Real>& g,
                                            const AtomicMeasure<Real>& reference) {
  GeneralizedDistribution<Real> d;
  VecC<Real> gvals(reference.points.size());
  for (Index k = 0; k < reference.points.size(); ++k) gvals[k] = g(reference.points[k]);
  VecC<Real> points = reference.points;
  VecR<Real> masses = reference.masses;
  Real K(0);
  for (Index k = 0; k < points.size(); ++k) K += std::abs(gvals[k]) * masses[k];
  d.bound_K = K;
  d.eval = [points, masses, gvals](const FunctionOnSquare<Real>& f) {
    Complex<Real> s(0);
    for (Index k = 0; k < points.size(); ++k) s += std::conj(f(points[k])) * gvals[k] * masses[k];
    return s;
  };
  d.box_coeff = [points, masses, gvals](const BoxGrid<Real>& grid, Index i, Index j) {
    Complex<Real> s(0);
    for (Index k = 0; k < points.size(); ++k) {
      auto ij = grid.find_box(points[k]);
      if (ij && ij->first == i && ij->second == j) s += gvals[k] * masses[k];
    }
    return s;
  };
  d.region_bound = [points, masses, gvals](const Region<Real>& r) {
    Real s(0);
    for (Index k = 0; k < points.size(); ++k)
      if (r.contains(points[k])) s += std::abs(gvals[k]) * masses[k];
    return s;
  };
  return d;
}

// a*theta1 + b*theta2, with safe (triangle-inequality) region bounds.
template <typename Real>
GeneralizedDistribution<Real> lin_comb(Complex<Real> a, const GeneralizedDistribution<Real>& t1,
                                       Complex<Real> b, const GeneralizedDistribution<Real>& t2) {
  GeneralizedDistribution<Real> d;
  d.bound_K = std::abs(a) * t1.bound_K + std::abs(b) * t2.bound_K;
  auto e1 = t1.eval, e2 = t2.eval;
  d.eval = [a, b, e1, e2](const FunctionOnSquare<Real>& f) { return a * e1(f) + b * e2(f); };
  auto c1 = t1.box_coeff, c2 = t2.box_coeff;
  d.box_coeff = [a, b, c1, c2](const BoxGrid<Real>& g, Index i, Index j) {
    return a * c1(g, i, j) + b * c2(g, i, j);
  };
  auto r1 = t1.region_bound, r2 = t2.region_bound;
  d.region_bound = [a, b, r1, r2](const Region<Real>& r) {
    return std::abs(a) * r1(r) + std::abs(b) * r2(r);
  };
  return d;
}

template <typename Real>
struct GoodPairSchedule {
  struct Entry {
    int N = 0;
    int n = 0;          // grid level
    Real eps = Real(0);
    Real delta_prime = Real(0);  // smallest positive box mass at this level
    Real delta = Real(0);        // delta_prime / 2^(3(n+2))
    bool valid = false;
  };
  std::vector<Entry> entries;  // one per supplied stage, in input order
};

namespace detail {

template <typename Real>
Real min_positive_mass(const MatR<Real>& mass) {
  Real best = std::numeric_limits<Real>::infinity();
  for (Index i = 0; i < mass.rows(); ++i)
    for (Index j = 0; j < mass.cols(); ++j)
      if (mass(i, j) > Real(0)) best = std::min(best, mass(i, j));
  return best;
}

}  // namespace detail

// For each stage, the largest grid level (and a strip width found by halving
// from the minimal cut gap) at which: (a) the distribution is negligible on
// the cut-line strip, (b) counting mass on the strip is negligible, and
// (c) box masses agree with the reference — all relative to delta, a
// level-dependent fraction of the smallest positive box mass. Stages with no
// such level get a degenerate entry (n = 0, valid = false).
template <typename Real>
GoodPairSchedule<Real> good_pair_schedule(const GeneralizedDistribution<Real>& theta,
                                          const std::vector<SpectralData<Real>>& sd_sequence,
                                          const std::vector<BoxGrid<Real>>& grids, int n_max,
                                          const AtomicMeasure<Real>& reference) {
  if (grids.empty()) throw Error(ErrorKind::invalid_argument, "no grids supplied");
  n_max = std::min<int>(n_max, static_cast<int>(grids.size()) - 1);

  auto try_level = [&](const AtomicMeasure<Real>& am, int n,
                       typename GoodPairSchedule<Real>::Entry& entry) -> bool {
    const BoxGrid<Real>& grid = grids[static_cast<std::size_t>(n)];
    const BoxMasses<Real> bm = box_masses(am, grid, Real(0));
    const Real dprime = detail::min_positive_mass(bm.mass);
    if (!std::isfinite(dprime)) return false;
    const Real delta = dprime / std::ldexp(Real(1), 3 * (n + 2));
    entry.n = n;
    entry.delta_prime = dprime;
    entry.delta = delta;
    entry.eps = Real(0);
    const BoxMasses<Real> ref_bm = box_masses(reference, grid, Real(0));
    if (!((bm.mass - ref_bm.mass).cwiseAbs().maxCoeff() < delta)) return false;
    const Real gap = grid.min_gap();
    for (int k = 2; k <= 62; ++k) {
      const Real eps = gap / std::ldexp(Real(1), k);
      if (!(theta.region_bound(line_region(grid, eps)) < delta)) continue;
      if (!(box_masses(am, grid, eps).strip_mass < delta)) continue;
      entry.eps = eps;
      return true;
    }
    return false;
  };

  GoodPairSchedule<Real> sched;
  for (const auto& sd : sd_sequence) {
    const AtomicMeasure<Real> am = counting_measure(sd);
    typename GoodPairSchedule<Real>::Entry entry;
    entry.N = sd.N;
    entry.valid = false;
    for (int n = n_max; n >= 0; --n) {
      typename GoodPairSchedule<Real>::Entry trial = entry;
      if (try_level(am, n, trial)) {
        entry = trial;
        entry.valid = true;
        break;
      }
    }
    if (!entry.valid) {
      entry.n = 0;
      entry.eps = Real(0);
    }
    sched.entries.push_back(entry);
  }

  // Levels never decrease along the schedule; entries forced upward are
  // re-validated at the forced level.
  int running = 0;
  bool first = true;
  for (std::size_t k = 0; k < sched.entries.size(); ++k) {
    auto& entry = sched.entries[k];
    if (first) {
      running = entry.n;
      first = false;
      continue;
    }
    if (entry.n < running) {
      const AtomicMeasure<Real> am = counting_measure(sd_sequence[k]);
      typename GoodPairSchedule<Real>::Entry trial = entry;
      const bool ok = try_level(am, running, trial);
      trial.valid = ok;
      trial.N = entry.N;
      trial.n = running;
      sched.entries[k] = trial;
    } else {
      running = entry.n;
    }
  }
  return sched;
}

// Coefficient vector representing theta on a grid: within every box that the
// reference charges, each eigenvalue gets xi * theta(B,1) / (counting mass of
// the box); everything else is zero. A reference-charged box with no counting
// mass means the stage is too coarse.
template <typename Real>
HNVector<Real> theta_vector(const GeneralizedDistribution<Real>& theta, const SpectralData<Real>& sd,
                            const BoxGrid<Real>& grid, const AtomicMeasure<Real>& reference) {
  const AtomicMeasure<Real> am = counting_measure(sd);
  const BoxMasses<Real> bm = box_masses(am, grid, Real(0));
  const BoxMasses<Real> ref_bm = box_masses(reference, grid, Real(0));

  HNVector<Real> v;
  v.sd = &sd;
  v.a = VecC<Real>::Zero(sd.D_N);

  const Index nb = grid.boxes_per_side();
  MatC<Real> coeff = MatC<Real>::Zero(nb, nb);
  for (Index i = 0; i < nb; ++i)
    for (Index j = 0; j < nb; ++j) {
      if (!(ref_bm.mass(i, j) > Real(0))) continue;
      if (!(bm.mass(i, j) > Real(0)))
        throw Error(ErrorKind::insufficient_n, "reference-charged box carries no counting mass");
      coeff(i, j) = theta.box_coeff(grid, i, j) / bm.mass(i, j);
    }
  for (Index k = 0; k < sd.D_N; ++k) {
    auto ij = grid.find_box(sd.lambda[k]);
    if (!ij) continue;
    if (!(ref_bm.mass(ij->first, ij->second) > Real(0))) continue;
    v.a[k] = Complex<Real>(sd.xi[k], 0) * coeff(ij->first, ij->second);
  }
  return v;
}

template <typename Real>
Complex<Real> pairing(const HNVector<Real>& x, const HNVector<Real>& y) {
  return pairing<Real>(x.a, y.a);
}

// Decomposition of the pairing bound into the contribution near an estimated
// spectrum region and the remainder.
template <typename Real>
struct PairingReport {
  Complex<Real> value{0, 0};
  Real near_bound = Real(0);
  Real far_bound = Real(0);
};

template <typename Real>
PairingReport<Real> pairing_report(const HNVector<Real>& x, const HNVector<Real>& y,
                                   const SpectralData<Real>& sd, Region<Real> spectrum_region,
                                   Real eps) {
  PairingReport<Real> rep;
  rep.value = pairing(x, y);
  spectrum_region.fatten += eps;
  rep.near_bound = norm_inf(x, sd, spectrum_region) * norm0(y, sd);
  Real far_weight(0), far_norm0(0);
  for (Index n = 0; n < sd.D_N; ++n) {
    if (spectrum_region.contains(sd.lambda[n])) continue;
    far_weight = std::max(far_weight, std::abs(x.a[n]));
    far_norm0 += sd.xi[n] * std::abs(y.a[n]);
  }
  rep.far_bound = far_weight * far_norm0;
  return rep;
}

// Function together with an optional smoothness hint used for error budgets:
// |f(x) - f(y)| <= lipschitz * |x - y| when the hint is present.
template <typename Real>
struct SampledFunction {
  FunctionOnSquare<Real> f;
  Real lipschitz = std::numeric_limits<Real>::quiet_NaN();
};

// | pairing(embed(f), theta_vector(theta)) - theta(f) |, with a budget from
// per-box oscillation of f plus the distribution's own weight on the cut
// lines and on boxes the reference does not charge.
template <typename Real>
std::pair<Real, Real> representation_defect(const GeneralizedDistribution<Real>& theta,
                                            const SampledFunction<Real>& f,
                                            const SpectralData<Real>& sd, const BoxGrid<Real>& grid,
                                            const AtomicMeasure<Real>& reference) {
  const HNVector<Real> v = theta_vector(theta, sd, grid, reference);
  const HNVector<Real> emb = embed_function(f.f, sd);
  const Complex<Real> value = pairing(emb, v);
  const Real defect = std::abs(value - theta.eval(f.f));

  const AtomicMeasure<Real> am = counting_measure(sd);
  const BoxMasses<Real> bm = box_masses(am, grid, Real(0));
  const BoxMasses<Real> ref_bm = box_masses(reference, grid, Real(0));

  // Per-box samples: eigenvalues and reference atoms.
  const Index nb = grid.boxes_per_side();
  std::vector<std::vector<Complex<Real>>> samples(
      static_cast<std::size_t>(nb * nb));
  Real sup_f(0);
  auto add_sample = [&](Complex<Real> z) {
    sup_f = std::max(sup_f, std::abs(f.f(z)));
    if (auto ij = grid.find_box(z))
      samples[static_cast<std::size_t>(ij->first * nb + ij->second)].push_back(z);
  };
  for (Index k = 0; k < am.points.size(); ++k) add_sample(am.points[k]);
  for (Index k = 0; k < reference.points.size(); ++k) add_sample(reference.points[k]);

  Real oscillation_term(0), uncharged_term(0);
  const bool have_hint = !std::isnan(f.lipschitz);
  for (Index i = 0; i < nb; ++i)
    for (Index j = 0; j < nb; ++j) {
      const Real coeff_mag = std::abs(theta.box_coeff(grid, i, j));
      if (coeff_mag == Real(0)) continue;
      if (ref_bm.mass(i, j) > Real(0) && bm.mass(i, j) > Real(0)) {
        Real spread;
        if (have_hint) {
          spread = f.lipschitz * grid.box_diameter(i, j);
        } else {
          // Empirical oscillation over the samples landing in this box.
          spread = Real(0);
          const auto& pts = samples[static_cast<std::size_t>(i * nb + j)];
          for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b)
              spread = std::max(spread, std::abs(f.f(pts[a]) - f.f(pts[b])));
        }
        oscillation_term += coeff_mag * spread;
      } else {
        uncharged_term += coeff_mag;
      }
    }
  const Real line_term = theta.region_bound(line_region(grid, Real(0)));
  const Real budget = oscillation_term + sup_f * (line_term + uncharged_term);
  return {defect, budget};
}

// (sum over all boxes of |theta(B,1)|, 16 * bound_K); the first component must
// not exceed the second.
template <typename Real>
std::pair<Real, Real> norm0_bound_check(const GeneralizedDistribution<Real>& theta,
                                        const SpectralData<Real>& sd, const BoxGrid<Real>& grid) {
  (void)sd;
  Real total(0);
  const Index nb = grid.boxes_per_side();
  for (Index i = 0; i < nb; ++i)
    for (Index j = 0; j < nb; ++j) total += std::abs(theta.box_coeff(grid, i, j));
  return {total, Real(16) * theta.bound_K};
}

}  // namespace spectral
