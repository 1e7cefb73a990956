#pragma once

// Finite ambient operator models: a scaled-unitary operator A with a cyclic
// seed vector phi, exposed through its linear action on ambient coordinates.
// Every model declares the largest stage max_exact_N for which all products
// A^i (A*)^j phi with i, j <= N are free of truncation artifacts.

#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spectral {

template <typename Real>
struct OperatorModel {
  std::string kind;
  Index ambient_dim = 0;
  Real r_A = Real(1);          // A* A = A A* = r_A I on the exact range (uniform models)
  int M = 1;                   // natural half-side of the working square, > max(norm A, sqrt(r_A))
  VecC<Real> phi;              // unit-norm cyclic seed
  std::function<VecC<Real>(const VecC<Real>&)> apply_A;
  std::function<VecC<Real>(const VecC<Real>&)> apply_Astar;
  long max_exact_N = 0;
  std::optional<std::vector<std::pair<Complex<Real>, Real>>> reference_spectral_measure;
  bool uniform = true;         // false for block models with per-block scaling
  Complex<Real> scale_q{1, 0}; // scalar q with A = q * (unitary)
  Real op_norm_bound = Real(1);
  Real eps_margin = Real(0);   // declared margin with |eigenvalue| < M - eps_margin
  std::map<std::string, std::string> parameters;
  VecR<Real> b_values;         // diagonal of the self-adjoint generator, when one exists
};

namespace detail {

// Smallest natural number strictly greater than v.
inline int natural_above(double v) {
  int m = static_cast<int>(std::floor(v)) + 1;
  if (static_cast<double>(m) <= v) ++m;
  return std::max(m, 1);
}

template <typename Real>
void finalize_square(OperatorModel<Real>& model) {
  double reach = std::max(static_cast<double>(model.op_norm_bound),
                          std::sqrt(static_cast<double>(model.r_A)));
  model.M = natural_above(reach);
  model.eps_margin = (Real(model.M) - Real(reach)) / Real(2);
}

}  // namespace detail

template <typename Real>
OperatorModel<Real> make_diag_unitary(const std::vector<Complex<Real>>& eigenphases,
                                      const std::vector<Real>& weights) {
  const Real tol = Real(1e-12);
  if (eigenphases.empty() || eigenphases.size() != weights.size())
    throw Error(ErrorKind::invalid_argument, "phases and weights must be nonempty and match");
  for (const auto& p : eigenphases)
    if (std::abs(std::abs(p) - Real(1)) > tol)
      throw Error(ErrorKind::invalid_argument, "eigenphase off the unit circle");
  for (std::size_t a = 0; a < eigenphases.size(); ++a)
    for (std::size_t b = a + 1; b < eigenphases.size(); ++b)
      if (std::abs(eigenphases[a] - eigenphases[b]) <= tol)
        throw Error(ErrorKind::non_cyclic, "repeated eigenphase");
  Real wsum(0);
  for (Real w : weights) {
    if (w <= Real(0)) throw Error(ErrorKind::non_cyclic, "zero or negative weight");
    wsum += w;
  }
  if (std::abs(wsum - Real(1)) > Real(1e-10))
    throw Error(ErrorKind::invalid_argument, "weights must sum to 1");

  OperatorModel<Real> m;
  m.kind = "diag_unitary";
  m.ambient_dim = static_cast<Index>(eigenphases.size());
  m.r_A = Real(1);
  m.op_norm_bound = Real(1);
  m.phi = VecC<Real>(m.ambient_dim);
  VecC<Real> phases(m.ambient_dim);
  for (Index k = 0; k < m.ambient_dim; ++k) {
    phases[k] = eigenphases[static_cast<std::size_t>(k)];
    m.phi[k] = Complex<Real>(std::sqrt(weights[static_cast<std::size_t>(k)]), 0);
  }
  m.apply_A = [phases](const VecC<Real>& v) -> VecC<Real> { return phases.cwiseProduct(v); };
  m.apply_Astar = [phases](const VecC<Real>& v) -> VecC<Real> {
    return phases.conjugate().cwiseProduct(v);
  };
  m.max_exact_N = std::numeric_limits<long>::max();
  std::vector<std::pair<Complex<Real>, Real>> atoms;
  for (std::size_t k = 0; k < eigenphases.size(); ++k) atoms.emplace_back(eigenphases[k], weights[k]);
  m.reference_spectral_measure = std::move(atoms);
  m.parameters["count"] = std::to_string(eigenphases.size());
  detail::finalize_square(m);
  return m;
}

// Two-sided shift on basis vectors e_{-L}, ..., e_L with seed e_0. The shift
// is exact until a product would step past an edge; stages are therefore
// limited to floor((L-1)/2) so completion never touches the boundary.
template <typename Real>
OperatorModel<Real> make_bilateral_shift(long ambient_half_width) {
  if (ambient_half_width < 1)
    throw Error(ErrorKind::invalid_argument, "half-width must be at least 1");
  const long L = ambient_half_width;
  const Index dim = static_cast<Index>(2 * L + 1);

  OperatorModel<Real> m;
  m.kind = "bilateral_shift";
  m.ambient_dim = dim;
  m.r_A = Real(1);
  m.op_norm_bound = Real(1);
  m.phi = VecC<Real>::Zero(dim);
  m.phi[static_cast<Index>(L)] = Complex<Real>(1, 0);
  m.apply_A = [dim](const VecC<Real>& v) -> VecC<Real> {
    if (v[dim - 1] != Complex<Real>(0))
      throw Error(ErrorKind::truncation, "shift would leave the ambient window");
    VecC<Real> out = VecC<Real>::Zero(dim);
    out.tail(dim - 1) = v.head(dim - 1);
    return out;
  };
  m.apply_Astar = [dim](const VecC<Real>& v) -> VecC<Real> {
    if (v[0] != Complex<Real>(0))
      throw Error(ErrorKind::truncation, "shift would leave the ambient window");
    VecC<Real> out = VecC<Real>::Zero(dim);
    out.head(dim - 1) = v.tail(dim - 1);
    return out;
  };
  m.max_exact_N = (L - 1) / 2;
  m.parameters["half_width"] = std::to_string(L);
  detail::finalize_square(m);
  return m;
}

template <typename Real>
OperatorModel<Real> make_scaled_unitary(Complex<Real> q, const OperatorModel<Real>& base) {
  if (q == Complex<Real>(0)) throw Error(ErrorKind::invalid_argument, "scale must be nonzero");
  if (!base.uniform || std::abs(base.r_A - Real(1)) > Real(1e-12))
    throw Error(ErrorKind::unsupported_model, "base must be unitary (r_A = 1)");
  OperatorModel<Real> m = base;
  m.kind = "scaled_unitary";
  m.r_A = std::norm(q);
  m.scale_q = q * base.scale_q;
  m.op_norm_bound = std::abs(q) * base.op_norm_bound;
  auto base_A = base.apply_A;
  auto base_Astar = base.apply_Astar;
  m.apply_A = [q, base_A](const VecC<Real>& v) -> VecC<Real> { return q * base_A(v); };
  m.apply_Astar = [q, base_Astar](const VecC<Real>& v) -> VecC<Real> {
    return std::conj(q) * base_Astar(v);
  };
  if (base.reference_spectral_measure) {
    auto atoms = *base.reference_spectral_measure;
    for (auto& a : atoms) a.first *= q;
    m.reference_spectral_measure = std::move(atoms);
  }
  m.parameters["base_kind"] = base.kind;
  detail::finalize_square(m);
  return m;
}

// Unitary A = exp(i * scale * diag(b)) with uniform seed. The generator
// diagonal is kept small (|scale * b_k| < 1/9) so the principal phases of the
// eigenvalues recover it exactly.
template <typename Real>
OperatorModel<Real> make_exp_selfadjoint(const std::vector<Real>& b_values, Real scale = Real(1)) {
  if (b_values.empty()) throw Error(ErrorKind::invalid_argument, "empty generator diagonal");
  std::vector<Real> b(b_values);
  for (auto& v : b) v *= scale;
  for (Real v : b) {
    if (v == Real(0)) throw Error(ErrorKind::kernel_vector, "generator annihilates a basis vector");
    if (std::abs(v) >= Real(1) / Real(9))
      throw Error(ErrorKind::norm_bound, "generator entry at or above 1/9");
  }
  for (std::size_t a = 0; a < b.size(); ++a)
    for (std::size_t c = a + 1; c < b.size(); ++c)
      if (std::abs(b[a] - b[c]) <= Real(1e-12))
        throw Error(ErrorKind::non_cyclic, "repeated generator entry");

  std::vector<Complex<Real>> phases;
  std::vector<Real> weights;
  const Real w = Real(1) / Real(b.size());
  for (Real v : b) {
    phases.push_back(std::polar(Real(1), v));
    weights.push_back(w);
  }
  OperatorModel<Real> m = make_diag_unitary<Real>(phases, weights);
  m.kind = "exp_selfadjoint";
  m.b_values = Eigen::Map<const VecR<Real>>(b.data(), static_cast<Index>(b.size()));
  m.parameters["scale"] = std::to_string(static_cast<double>(scale));
  return m;
}

// Orthogonal sum of two scaled unitaries with distinct scalars. The result has
// no single r_A, so it is flagged non-uniform; completion-based operations
// reject it while measure-side machinery still applies.
template <typename Real>
OperatorModel<Real> make_direct_sum(const OperatorModel<Real>& m1, const OperatorModel<Real>& m2) {
  if (!m1.uniform || !m2.uniform)
    throw Error(ErrorKind::unsupported_model, "summands must each be scaled-unitary");
  if (std::abs(m1.scale_q - m2.scale_q) <= Real(1e-12))
    throw Error(ErrorKind::invalid_argument, "summands must have distinct scaling constants");
  OperatorModel<Real> m;
  m.kind = "direct_sum";
  m.ambient_dim = m1.ambient_dim + m2.ambient_dim;
  m.uniform = false;
  m.r_A = std::max(m1.r_A, m2.r_A);
  m.op_norm_bound = std::max(m1.op_norm_bound, m2.op_norm_bound);
  const Real inv_sqrt2 = Real(1) / std::sqrt(Real(2));
  m.phi = VecC<Real>(m.ambient_dim);
  m.phi.head(m1.ambient_dim) = inv_sqrt2 * m1.phi;
  m.phi.tail(m2.ambient_dim) = inv_sqrt2 * m2.phi;
  const Index d1 = m1.ambient_dim, d2 = m2.ambient_dim;
  auto a1 = m1.apply_A, a2 = m2.apply_A;
  auto s1 = m1.apply_Astar, s2 = m2.apply_Astar;
  m.apply_A = [d1, d2, a1, a2](const VecC<Real>& v) -> VecC<Real> {
    VecC<Real> out(d1 + d2);
    out.head(d1) = a1(v.head(d1));
    out.tail(d2) = a2(v.tail(d2));
    return out;
  };
  m.apply_Astar = [d1, d2, s1, s2](const VecC<Real>& v) -> VecC<Real> {
    VecC<Real> out(d1 + d2);
    out.head(d1) = s1(v.head(d1));
    out.tail(d2) = s2(v.tail(d2));
    return out;
  };
  m.max_exact_N = std::min(m1.max_exact_N, m2.max_exact_N);
  if (m1.reference_spectral_measure && m2.reference_spectral_measure) {
    std::vector<std::pair<Complex<Real>, Real>> atoms;
    for (auto a : *m1.reference_spectral_measure) atoms.emplace_back(a.first, a.second / Real(2));
    for (auto a : *m2.reference_spectral_measure) atoms.emplace_back(a.first, a.second / Real(2));
    m.reference_spectral_measure = std::move(atoms);
  }
  m.parameters["left"] = m1.kind;
  m.parameters["right"] = m2.kind;
  detail::finalize_square(m);
  return m;
}

// A^i applied to (A*)^j applied to phi, computed left to right.
template <typename Real>
VecC<Real> monomial(const OperatorModel<Real>& model, long i, long j) {
  if (i < 0 || j < 0) throw Error(ErrorKind::invalid_argument, "negative exponent");
  if (i > model.max_exact_N || j > model.max_exact_N)
    throw Error(ErrorKind::truncation, "exponent beyond the exact stage horizon");
  VecC<Real> v = model.phi;
  for (long t = 0; t < j; ++t) v = model.apply_Astar(v);
  for (long t = 0; t < i; ++t) v = model.apply_A(v);
  return v;
}

// Same product evaluated right to left; agreement with monomial() witnesses
// that A and A* commute through the scaling on the exact range.
template <typename Real>
VecC<Real> monomial_reversed(const OperatorModel<Real>& model, long i, long j) {
  if (i < 0 || j < 0) throw Error(ErrorKind::invalid_argument, "negative exponent");
  if (i > model.max_exact_N || j > model.max_exact_N)
    throw Error(ErrorKind::truncation, "exponent beyond the exact stage horizon");
  VecC<Real> v = model.phi;
  for (long t = 0; t < i; ++t) v = model.apply_A(v);
  for (long t = 0; t < j; ++t) v = model.apply_Astar(v);
  return v;
}

// P(A, A*) applied to phi. Monomial vectors are memoized per call; models stay
// immutable.
template <typename Real>
VecC<Real> apply_polynomial(const OperatorModel<Real>& model, const Polynomial<Real>& P) {
  if (P.degree() > model.max_exact_N)
    throw Error(ErrorKind::truncation, "polynomial degree beyond the exact stage horizon");
  std::map<long, VecC<Real>> astar_pow;  // j -> (A*)^j phi
  astar_pow[0] = model.phi;
  VecC<Real> out = VecC<Real>::Zero(model.ambient_dim);
  for (const auto& [ij, c] : P.coeff) {
    const long i = ij.first, j = ij.second;
    long have = astar_pow.rbegin()->first;
    while (have < j) {
      astar_pow[have + 1] = model.apply_Astar(astar_pow[have]);
      ++have;
    }
    VecC<Real> v = astar_pow[j];
    for (long t = 0; t < i; ++t) v = model.apply_A(v);
    out += c * v;
  }
  return out;
}

}  // namespace spectral
