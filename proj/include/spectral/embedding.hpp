#pragma once

// Coefficient embedding of functions into the eigenbasis, the three weighted
// (semi)norms, and the consistency checks tying the embedding to the operator
// calculus and to reference measures.

#include "spectral/compression.hpp"
#include "spectral/measure.hpp"
#include "spectral/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace spectral {

template <typename Real>
using FunctionOnSquare = std::function<Complex<Real>(Complex<Real>)>;

template <typename Real>
struct HNVector {
  VecC<Real> a;                          // coefficients in the eigenbasis
  const SpectralData<Real>* sd = nullptr;  // the eigensystem the coefficients refer to
};

// a_n = xi_n * f(lambda_n).
template <typename Real>
HNVector<Real> embed_function(const FunctionOnSquare<Real>& f, const SpectralData<Real>& sd) {
  HNVector<Real> v;
  v.sd = &sd;
  v.a = VecC<Real>(sd.D_N);
  for (Index n = 0; n < sd.D_N; ++n) v.a[n] = Complex<Real>(sd.xi[n], 0) * f(sd.lambda[n]);
  return v;
}

template <typename Real>
Real norm2(const HNVector<Real>& v) {
  return v.a.norm();
}

// Sum of xi_n |a_n|.
template <typename Real>
Real norm0(const HNVector<Real>& v, const SpectralData<Real>& sd) {
  Real s(0);
  for (Index n = 0; n < sd.D_N; ++n) s += sd.xi[n] * std::abs(v.a[n]);
  return s;
}

template <typename Real>
Real norm0(const HNVector<Real>& v) {
  return norm0(v, *v.sd);
}

// sup over eigenvalues inside `region` of |a_n| / xi_n, with 0/0 counted as 0
// and c/0 for c != 0 reported as +infinity.
template <typename Real>
Real norm_inf(const HNVector<Real>& v, const SpectralData<Real>& sd, const Region<Real>& region) {
  Real s(0);
  for (Index n = 0; n < sd.D_N; ++n) {
    if (!region.contains(sd.lambda[n])) continue;
    const Real mag = std::abs(v.a[n]);
    if (sd.xi[n] == Real(0)) {
      if (mag != Real(0)) return std::numeric_limits<Real>::infinity();
      continue;
    }
    s = std::max(s, mag / sd.xi[n]);
  }
  return s;
}

template <typename Real>
Real norm_inf(const HNVector<Real>& v, const Region<Real>& region) {
  return norm_inf(v, *v.sd, region);
}

// The shrinking-neighborhood sup-norm data: one row per fattening 2^-k of the
// base region, k = 0..k_max.
template <typename Real>
std::vector<std::pair<Real, Real>> norm_inf_schedule(const HNVector<Real>& v,
                                                     const SpectralData<Real>& sd,
                                                     Region<Real> region, int k_max) {
  std::vector<std::pair<Real, Real>> rows;
  for (int k = 0; k <= k_max; ++k) {
    const Real eps = std::ldexp(Real(1), -k);
    Region<Real> r = region;
    r.fatten += eps;
    rows.emplace_back(eps, norm_inf(v, sd, r));
  }
  return rows;
}

// |  ||F(f)||_2^2  -  sum_ref |f|^2 mass |.
template <typename Real>
Real isometry_defect(const FunctionOnSquare<Real>& f, const SpectralData<Real>& sd,
                     const AtomicMeasure<Real>& reference) {
  const HNVector<Real> v = embed_function(f, sd);
  const Real lhs = norm2(v) * norm2(v);
  Real rhs(0);
  for (Index k = 0; k < reference.points.size(); ++k)
    rhs += std::norm(f(reference.points[k])) * reference.masses[k];
  return std::abs(lhs - rhs);
}

// || embed(f_P) - eigen-coordinates of P(A_N, A_N*) phi ||_2.
template <typename Real>
Real polynomial_consistency(const OperatorModel<Real>& model, const CompressionSpaces<Real>& cs,
                            const SpectralData<Real>& sd, const Polynomial<Real>& P) {
  (void)model;
  const FunctionOnSquare<Real> f = [&P](Complex<Real> z) { return P.eval_at(z); };
  const HNVector<Real> lhs = embed_function(f, sd);
  const VecC<Real> w = operator_polynomial(cs, P) * cs.phi_coords;
  const VecC<Real> rhs = sd.U.adjoint() * w;
  return (lhs.a - rhs).norm();
}

// Seed-weighted mass of the coefficients whose eigenvalues fall outside the
// closure of the estimated-spectrum boxes.
template <typename Real>
Real zero_good_defect(const HNVector<Real>& v, const SpectralData<Real>& sd,
                      const Region<Real>& spectrum_boxes) {
  Real s(0);
  for (Index n = 0; n < sd.D_N; ++n)
    if (!spectrum_boxes.contains(sd.lambda[n])) s += sd.xi[n] * std::abs(v.a[n]);
  return s;
}

}  // namespace spectral
