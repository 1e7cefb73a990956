#pragma once

// Integral-kernel operators on the compressed spaces, box-averaged vectors,
// and propagator-style estimates that recover kernel values pointwise.

#include "spectral/compression.hpp"
#include "spectral/distributions.hpp"
#include "spectral/embedding.hpp"
#include "spectral/measure.hpp"
#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spectral {

// Two-variable kernel with a certified operator-norm bound K_D and an
// optional per-slot smoothness hint (NaN when absent).
template <typename Real>
struct KernelFunction {
  std::function<Complex<Real>(Complex<Real>, Complex<Real>)> K;
  Real K_D = Real(1);
  Real lipschitz = std::numeric_limits<Real>::quiet_NaN();
  std::string name;
};

// Stock kernels with bounds valid on the closed disk of radius
// sqrt(r_A) + 0.2, a cushion past where all eigenvalues live.
template <typename Real>
KernelFunction<Real> builtin_kernel(const std::string& name, Real r_A, Complex<Real> c = Complex<Real>(1, 0)) {
  const Real rho = std::sqrt(r_A) + Real(0.2);
  KernelFunction<Real> k;
  k.name = name;
  if (name == "xy_conj") {
    k.K = [](Complex<Real> x, Complex<Real> y) { return x * std::conj(y); };
    k.K_D = std::floor(rho * rho) + Real(1);
    k.lipschitz = Real(2) * rho;
  } else if (name == "exp_re") {
    k.K = [](Complex<Real> x, Complex<Real> y) {
      return Complex<Real>(std::exp((x * std::conj(y)).real()), 0);
    };
    k.K_D = std::ceil(std::exp(rho * rho));
    k.lipschitz = Real(2) * rho * std::exp(rho * rho);
  } else if (name == "constant") {
    k.K = [c](Complex<Real>, Complex<Real>) { return c; };
    k.K_D = std::max(std::ceil(std::abs(c)), Real(1));
    k.lipschitz = Real(0);
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown kernel name: " + name);
  }
  return k;
}

// Matrix acting on coefficient vectors; remembers whether it was built from a
// kernel (some diagnostics only make sense in that case).
template <typename Real>
struct ApproxOperator {
  MatC<Real> mat;
  bool kernel_built = false;
  std::optional<KernelFunction<Real>> kernel;
};

// Entry (n, k) = xi_k * xi_n * K(lambda_k, lambda_n).
template <typename Real>
ApproxOperator<Real> kernel_operator(const KernelFunction<Real>& K, const SpectralData<Real>& sd) {
  ApproxOperator<Real> op;
  op.kernel_built = true;
  op.kernel = K;
  op.mat.resize(sd.D_N, sd.D_N);
  for (Index n = 0; n < sd.D_N; ++n)
    for (Index k = 0; k < sd.D_N; ++k)
      op.mat(n, k) = Complex<Real>(sd.xi[k] * sd.xi[n], 0) * K.K(sd.lambda[k], sd.lambda[n]);
  return op;
}

// Normalized indicator of the level-p box containing alpha: a_k = xi_k / mu
// over the box, zero elsewhere, where mu is the box's counting mass.
template <typename Real>
HNVector<Real> box_vector(Complex<Real> alpha, int p, const SpectralData<Real>& sd,
                          const std::vector<BoxGrid<Real>>& grids) {
  if (p < 0 || p >= static_cast<int>(grids.size()))
    throw Error(ErrorKind::invalid_argument, "box level out of range");
  const BoxGrid<Real>& grid = grids[static_cast<std::size_t>(p)];
  auto ij = grid.find_box(alpha);
  if (!ij)
    throw Error(ErrorKind::invalid_argument, "target point lies on a cut line or outside the square");
  HNVector<Real> v;
  v.sd = &sd;
  v.a = VecC<Real>::Zero(sd.D_N);
  Real mu(0);
  std::vector<Index> members;
  for (Index k = 0; k < sd.D_N; ++k) {
    auto kij = grid.find_box(sd.lambda[k]);
    if (kij && *kij == *ij) {
      members.push_back(k);
      mu += sd.xi[k] * sd.xi[k];
    }
  }
  if (!(mu > Real(0)))
    throw Error(ErrorKind::insufficient_n, "target box carries no counting mass at this stage");
  const Real inv = Real(1) / mu;
  for (Index k : members) v.a[k] = Complex<Real>(sd.xi[k] * inv, 0);
  return v;
}

// <u_beta | B u_alpha>; for a kernel-built B this averages K over the two
// boxes and so approaches K(alpha, beta) as the boxes shrink.
template <typename Real>
Complex<Real> propagator(const ApproxOperator<Real>& B, Complex<Real> alpha, Complex<Real> beta,
                         int p, const SpectralData<Real>& sd, const std::vector<BoxGrid<Real>>& grids) {
  const HNVector<Real> ua = box_vector(alpha, p, sd, grids);
  const HNVector<Real> ub = box_vector(beta, p, sd, grids);
  const VecC<Real> Bua = B.mat * ua.a;
  return pairing<Real>(ub.a, Bua);
}

template <typename Real>
struct KernelEstimate {
  struct Cell {
    int p = 0;
    int N = 0;
    Complex<Real> value{0, 0};
  };
  std::vector<Cell> table;         // all (p, N) combinations that evaluated
  Complex<Real> value{0, 0};       // finest p, largest N
  Complex<Real> extrapolated{0, 0};  // 2*v(P) - v(P-1) in p, diagnostic only
  Real budget = Real(0);
};

namespace detail {

// Oscillation bound for K over a pair of boxes: smoothness hint times the box
// diameter when available, otherwise the empirical spread over eigenvalue
// samples against the box centers.
template <typename Real>
Real kernel_oscillation(const KernelFunction<Real>& K, const BoxGrid<Real>& grid, Complex<Real> alpha,
                        Complex<Real> beta, const SpectralData<Real>& sd) {
  auto aij = grid.find_box(alpha);
  auto bij = grid.find_box(beta);
  if (!aij || !bij) return std::numeric_limits<Real>::infinity();
  const Real da = grid.box_diameter(aij->first, aij->second);
  const Real db = grid.box_diameter(bij->first, bij->second);
  if (!std::isnan(K.lipschitz)) return K.lipschitz * (da + db);
  Real spread(0);
  const Complex<Real> base = K.K(alpha, beta);
  for (Index i = 0; i < sd.D_N; ++i) {
    auto iij = grid.find_box(sd.lambda[i]);
    if (!iij || !(*iij == *aij)) continue;
    for (Index j = 0; j < sd.D_N; ++j) {
      auto jij = grid.find_box(sd.lambda[j]);
      if (!jij || !(*jij == *bij)) continue;
      spread = std::max(spread, std::abs(K.K(sd.lambda[i], sd.lambda[j]) - base));
    }
  }
  return Real(2) * spread;
}

template <typename Real>
Real box_counting_mass(const SpectralData<Real>& sd, const BoxGrid<Real>& grid, Complex<Real> z) {
  auto ij = grid.find_box(z);
  if (!ij) return Real(0);
  Real mu(0);
  for (Index k = 0; k < sd.D_N; ++k) {
    auto kij = grid.find_box(sd.lambda[k]);
    if (kij && *kij == *ij) mu += sd.xi[k] * sd.xi[k];
  }
  return mu;
}

}  // namespace detail

// Propagator values across a schedule of levels and stages; the headline value
// is the finest-level, largest-stage cell, and the budget combines kernel
// oscillation over the two boxes with the stage-to-stage mass drift.
template <typename Real>
KernelEstimate<Real> kernel_estimate(const KernelFunction<Real>& K, Complex<Real> alpha,
                                     Complex<Real> beta, const std::vector<int>& p_levels,
                                     const std::vector<SpectralData<Real>>& sds,
                                     const std::vector<BoxGrid<Real>>& grids) {
  if (p_levels.empty() || sds.empty())
    throw Error(ErrorKind::invalid_argument, "kernel estimate needs at least one level and one stage");
  KernelEstimate<Real> est;
  std::vector<ApproxOperator<Real>> ops;
  ops.reserve(sds.size());
  for (const auto& sd : sds) ops.push_back(kernel_operator(K, sd));
  // Levels whose boxes carry no mass truncate the table rather than fail.
  std::vector<int> usable;
  for (int p : p_levels) {
    bool level_ok = true;
    for (std::size_t s = 0; s < sds.size(); ++s) {
      typename KernelEstimate<Real>::Cell cell;
      cell.p = p;
      cell.N = sds[s].N;
      try {
        cell.value = propagator(ops[s], alpha, beta, p, sds[s], grids);
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::insufficient_n) {
          level_ok = false;
          break;
        }
        throw;
      }
      est.table.push_back(cell);
    }
    if (!level_ok) {
      // Drop any cells from the partially evaluated level.
      while (!est.table.empty() && est.table.back().p == p) est.table.pop_back();
      break;
    }
    usable.push_back(p);
  }
  if (usable.empty())
    throw Error(ErrorKind::insufficient_n, "no requested level gives both targets a massive box");
  const int p_last = usable.back();
  const std::size_t s_last = sds.size() - 1;
  est.value = est.table.back().value;
  if (usable.size() >= 2) {
    const int p_prev = usable[usable.size() - 2];
    Complex<Real> v_prev{0, 0};
    for (const auto& cell : est.table)
      if (cell.p == p_prev && cell.N == sds[s_last].N) v_prev = cell.value;
    est.extrapolated = Real(2) * est.value - v_prev;
  } else {
    est.extrapolated = est.value;
  }
  const BoxGrid<Real>& fine = grids[static_cast<std::size_t>(p_last)];
  Real budget = detail::kernel_oscillation(K, fine, alpha, beta, sds[s_last]);
  if (sds.size() >= 2) {
    const auto& sd1 = sds[s_last - 1];
    const auto& sd2 = sds[s_last];
    for (Complex<Real> z : {alpha, beta}) {
      const Real m1 = detail::box_counting_mass(sd1, fine, z);
      const Real m2 = detail::box_counting_mass(sd2, fine, z);
      if (m2 > Real(0)) budget += K.K_D * std::abs(m1 - m2) / m2;
    }
  }
  est.budget = budget;
  return est;
}

// Monte-Carlo + power-iteration estimate of the operator norm of B on the
// coefficient space; never exceeds the true norm by more than roundoff.
template <typename Real>
Real check_C1(const ApproxOperator<Real>& B, const SpectralData<Real>& sd, int sample_count,
              std::uint64_t seed) {
  auto rng = seeded_rng(seed);
  std::normal_distribution<Real> gauss(Real(0), Real(1));
  const Index D = sd.D_N;
  Real best(0);
  VecC<Real> best_v = VecC<Real>::Zero(D);
  for (int s = 0; s < std::max(sample_count, 1); ++s) {
    VecC<Real> v(D);
    for (Index k = 0; k < D; ++k) v[k] = Complex<Real>(gauss(rng), gauss(rng));
    const Real nv = v.norm();
    if (!(nv > Real(0))) continue;
    v /= nv;
    const Real ratio = (B.mat * v).norm();
    if (ratio > best) {
      best = ratio;
      best_v = v;
    }
  }
  if (best_v.norm() > Real(0)) {
    VecC<Real> v = best_v;
    for (int it = 0; it < 40; ++it) {
      VecC<Real> w = B.mat.adjoint() * (B.mat * v);
      const Real nw = w.norm();
      if (!(nw > Real(0))) break;
      v = w / nw;
    }
    best = std::max(best, (B.mat * v).norm());
  }
  return best;
}

// Same experiment in the weighted sup norm over the whole square; vectors are
// sampled with coefficients proportional to xi so the ratio is finite.
template <typename Real>
Real check_C1_inf(const ApproxOperator<Real>& B, const SpectralData<Real>& sd, int sample_count,
                  std::uint64_t seed) {
  auto rng = seeded_rng(seed);
  std::normal_distribution<Real> gauss(Real(0), Real(1));
  const Region<Real> square = whole_square<Real>(Real(sd.M));
  Real best(0);
  for (int s = 0; s < std::max(sample_count, 1); ++s) {
    HNVector<Real> v;
    v.sd = &sd;
    v.a.resize(sd.D_N);
    for (Index k = 0; k < sd.D_N; ++k)
      v.a[k] = Complex<Real>(sd.xi[k], 0) * Complex<Real>(gauss(rng), gauss(rng));
    const Real denom = norm_inf(v, sd, square);
    if (!(denom > Real(0))) continue;
    HNVector<Real> w;
    w.sd = &sd;
    w.a = B.mat * v.a;
    best = std::max(best, norm_inf(w, sd, square) / denom);
  }
  return best;
}

// Discrepancy between applying B to embedded polynomials and embedding the
// kernel-transformed polynomials directly (transform taken against the
// reference measure).
template <typename Real>
Real check_C2(const ApproxOperator<Real>& B, const KernelFunction<Real>& K,
              const SpectralData<Real>& sd, const AtomicMeasure<Real>& reference,
              const std::vector<Polynomial<Real>>& polys) {
  Real worst(0);
  for (const auto& P : polys) {
    FunctionOnSquare<Real> f = [&P](Complex<Real> z) { return P.eval_at(z); };
    const HNVector<Real> emb = embed_function(f, sd);
    const VecC<Real> lhs = B.mat * emb.a;
    FunctionOnSquare<Real> transformed = [&](Complex<Real> y) {
      Complex<Real> s(0);
      for (Index k = 0; k < reference.points.size(); ++k)
        s += K.K(reference.points[k], y) * P.eval_at(reference.points[k]) * reference.masses[k];
      return s;
    };
    const HNVector<Real> rhs = embed_function(transformed, sd);
    worst = std::max(worst, Real((lhs - rhs.a).norm()));
  }
  return worst;
}

// For every charged box at every supplied level: compare B applied to the
// normalized box vector against the embedded box-averaged kernel slice
// (weighted sup distance), and record the largest weighted sup norm of the
// image. Only meaningful for kernel-built operators.
template <typename Real>
std::pair<Real, Real> check_C2prime_C3prime(const ApproxOperator<Real>& B,
                                            const SpectralData<Real>& sd,
                                            const std::vector<BoxGrid<Real>>& grids) {
  if (!B.kernel_built || !B.kernel)
    throw Error(ErrorKind::invalid_argument, "box diagnostics need a kernel-built operator");
  const KernelFunction<Real>& K = *B.kernel;
  const Region<Real> square = whole_square<Real>(Real(sd.M));
  Real c2p(0), c3p(0);
  for (const auto& grid : grids) {
    const Index nb = grid.boxes_per_side();
    // Box membership and counting mass in one sweep.
    std::vector<std::vector<Index>> members(static_cast<std::size_t>(nb * nb));
    for (Index k = 0; k < sd.D_N; ++k) {
      auto ij = grid.find_box(sd.lambda[k]);
      if (ij) members[static_cast<std::size_t>(ij->first * nb + ij->second)].push_back(k);
    }
    for (Index i = 0; i < nb; ++i)
      for (Index j = 0; j < nb; ++j) {
        const auto& mem = members[static_cast<std::size_t>(i * nb + j)];
        if (mem.empty()) continue;
        Real mu(0);
        for (Index k : mem) mu += sd.xi[k] * sd.xi[k];
        if (!(mu > Real(0))) continue;
        HNVector<Real> u;
        u.sd = &sd;
        u.a = VecC<Real>::Zero(sd.D_N);
        for (Index k : mem) u.a[k] = Complex<Real>(sd.xi[k] / mu, 0);
        HNVector<Real> img;
        img.sd = &sd;
        img.a = B.mat * u.a;
        c3p = std::max(c3p, norm_inf(img, sd, square));
        // Box-averaged kernel slice, embedded directly.
        FunctionOnSquare<Real> slice = [&](Complex<Real> y) {
          Complex<Real> s(0);
          for (Index k : mem)
            s += K.K(sd.lambda[k], y) * Complex<Real>(sd.xi[k] * sd.xi[k] / mu, 0);
          return s;
        };
        HNVector<Real> ref = embed_function(slice, sd);
        HNVector<Real> diff;
        diff.sd = &sd;
        diff.a = img.a - ref.a;
        c2p = std::max(c2p, norm_inf(diff, sd, square));
      }
  }
  return {c2p, c3p};
}

// Propagator between two point-mass functionals realized as coefficient
// vectors, returned with the pairing's near/far bound decomposition over the
// grid's charged boxes.
template <typename Real>
std::pair<Complex<Real>, PairingReport<Real>> dirac_propagator(
    const ApproxOperator<Real>& B, const GeneralizedDistribution<Real>& theta_alpha,
    const GeneralizedDistribution<Real>& theta_beta, const SpectralData<Real>& sd,
    const BoxGrid<Real>& grid, const AtomicMeasure<Real>& reference) {
  const HNVector<Real> va = theta_vector(theta_alpha, sd, grid, reference);
  const HNVector<Real> vb = theta_vector(theta_beta, sd, grid, reference);
  HNVector<Real> img;
  img.sd = &sd;
  img.a = B.mat * va.a;
  const Complex<Real> value = pairing(vb, img);

  // Region spanned by the reference-charged boxes.
  const BoxMasses<Real> ref_bm = box_masses(reference, grid, Real(0));
  std::vector<std::pair<Index, Index>> charged;
  for (Index i = 0; i < ref_bm.mass.rows(); ++i)
    for (Index j = 0; j < ref_bm.mass.cols(); ++j)
      if (ref_bm.mass(i, j) > Real(0)) charged.emplace_back(i, j);
  const Region<Real> reg = region_from_boxes(grid, charged, Real(0));
  PairingReport<Real> rep = pairing_report(vb, img, sd, reg, grid.min_gap() / Real(4));
  return {value, rep};
}

}  // namespace spectral
