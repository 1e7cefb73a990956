#pragma once

// Stage-N compression of a scaled-unitary model: the monomial subspace, the
// completed normal operator on it, and the phase-fixed eigensystem with
// nonnegative seed weights.

#include "spectral/models.hpp"
#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

namespace spectral {

template <typename Real>
struct OrthoResult {
  MatC<Real> basis;        // orthonormal columns
  Index rank = 0;
  std::vector<bool> kept;  // which input columns survived pivoting
};

// Modified Gram-Schmidt with one reorthogonalization pass. A column is dropped
// when its residual falls below tol times its original norm.
template <typename Real>
OrthoResult<Real> orthonormalize(const MatC<Real>& vectors, Real tol = Real(1e-10)) {
  const Index dim = vectors.rows();
  const Index n = vectors.cols();
  OrthoResult<Real> out;
  out.basis = MatC<Real>(dim, std::min(dim, n));
  out.kept.assign(static_cast<std::size_t>(n), false);
  for (Index c = 0; c < n; ++c) {
    VecC<Real> w = vectors.col(c);
    const Real original = w.norm();
    if (!(original > Real(0))) continue;
    for (int pass = 0; pass < 2 && out.rank > 0; ++pass) {
      auto accepted = out.basis.leftCols(out.rank);
      VecC<Real> coeffs = accepted.adjoint() * w;
      w -= accepted * coeffs;
    }
    const Real residual = w.norm();
    if (residual < tol * original) continue;
    out.basis.col(out.rank) = w / residual;
    out.kept[static_cast<std::size_t>(c)] = true;
    ++out.rank;
  }
  out.basis.conservativeResize(dim, out.rank);
  return out;
}

template <typename Real>
struct CompressionSpaces {
  int N = 0;
  Index D_N = 0;
  Index dim_lower = 0;  // the first dim_lower basis columns span the subspace where A acts exactly
  Index dim_upper = 0;  // dimension of the subspace where A* acts exactly
  int M = 1;
  Real r_A = Real(1);
  MatC<Real> basis;         // ambient x D_N, orthonormal columns
  MatC<Real> upper_coords;  // D_N x dim_upper: A*-exact subspace, in basis coordinates
  MatC<Real> w_source;      // D_N x w: completion domain (orthocomplement of the A-exact subspace)
  MatC<Real> w_target;      // D_N x w: completion range (orthocomplement of the A*-exact subspace)
  MatC<Real> A_N;           // completed operator in basis coordinates
  MatC<Real> A_N_star;      // its adjoint, assembled independently
  VecC<Real> phi_coords;    // seed vector in basis coordinates
};

namespace detail {

// Monomial exponent lists in row-major (i, j) order with the A-exact block
// (i < N) first. For models with a single scaling constant each product
// A^i (A*)^j phi is a scalar multiple of the pure monomial with the same
// difference i - j, so candidates may be deduplicated by that key without
// changing any span or any Gram-Schmidt pivot decision.
inline void candidate_exponents(int N, bool dedupe, std::vector<std::pair<long, long>>& lower,
                                std::vector<std::pair<long, long>>& rest) {
  lower.clear();
  rest.clear();
  std::set<long> seen;
  auto push = [&](long i, long j, std::vector<std::pair<long, long>>& dst) {
    if (dedupe) {
      const long key = i - j;
      if (!seen.insert(key).second) return;
      if (key >= 0)
        dst.emplace_back(key, 0);
      else
        dst.emplace_back(0, -key);
    } else {
      dst.emplace_back(i, j);
    }
  };
  for (long i = 0; i < N; ++i)
    for (long j = 0; j <= N; ++j) push(i, j, lower);
  for (long j = 0; j <= N; ++j) push(N, j, rest);
}

inline void upper_exponents(int N, bool dedupe, std::vector<std::pair<long, long>>& upper) {
  upper.clear();
  std::set<long> seen;
  for (long i = 1; i <= N; ++i)
    for (long j = 0; j <= N; ++j) {
      if (dedupe) {
        const long key = i - j;
        if (!seen.insert(key).second) continue;
        if (key >= 0)
          upper.emplace_back(key, 0);
        else
          upper.emplace_back(0, -key);
      } else {
        upper.emplace_back(i, j);
      }
    }
}

template <typename Real>
MatC<Real> monomial_matrix(const OperatorModel<Real>& model,
                           const std::vector<std::pair<long, long>>& exponents) {
  std::map<std::pair<long, long>, VecC<Real>> memo;
  std::function<const VecC<Real>&(long, long)> get = [&](long i, long j) -> const VecC<Real>& {
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    VecC<Real> v;
    if (i == 0 && j == 0)
      v = model.phi;
    else if (i > 0)
      v = model.apply_A(get(i - 1, j));
    else
      v = model.apply_Astar(get(0, j - 1));
    return memo.emplace(std::make_pair(i, j), std::move(v)).first->second;
  };
  MatC<Real> out(model.ambient_dim, static_cast<Index>(exponents.size()));
  for (std::size_t c = 0; c < exponents.size(); ++c)
    out.col(static_cast<Index>(c)) = get(exponents[c].first, exponents[c].second);
  return out;
}

// Orthogonalize `w` against the columns of each matrix in `against`
// (two passes), returning the residual norm.
template <typename Real>
Real strip_components(VecC<Real>& w, const std::vector<const MatC<Real>*>& against) {
  for (int pass = 0; pass < 2; ++pass)
    for (const MatC<Real>* m : against) {
      if (m->cols() == 0) continue;
      VecC<Real> coeffs = m->adjoint() * w;
      w -= (*m) * coeffs;
    }
  return w.norm();
}

}  // namespace detail

template <typename Real>
CompressionSpaces<Real> build_compression(const OperatorModel<Real>& model, int N,
                                          bool exhaustive_candidates = false) {
  if (N < 0) throw Error(ErrorKind::invalid_argument, "stage must be nonnegative");
  if (!model.uniform)
    throw Error(ErrorKind::unsupported_model,
                "completion needs a single scaling constant for the whole operator");
  if (static_cast<long>(N) > model.max_exact_N)
    throw Error(ErrorKind::truncation, "stage beyond the model's exact horizon");

  const Real tol = Real(1e-10);
  const Real sqrt_r = std::sqrt(model.r_A);
  const bool dedupe = !exhaustive_candidates;

  std::vector<std::pair<long, long>> lower_exp, rest_exp;
  detail::candidate_exponents(N, dedupe, lower_exp, rest_exp);
  std::vector<std::pair<long, long>> all_exp = lower_exp;
  all_exp.insert(all_exp.end(), rest_exp.begin(), rest_exp.end());

  MatC<Real> candidates = detail::monomial_matrix(model, all_exp);
  OrthoResult<Real> gs = orthonormalize(candidates, tol);

  CompressionSpaces<Real> cs;
  cs.N = N;
  cs.M = model.M;
  cs.r_A = model.r_A;
  cs.D_N = gs.rank;
  cs.basis = std::move(gs.basis);
  cs.dim_lower = 0;
  for (std::size_t c = 0; c < lower_exp.size(); ++c)
    if (gs.kept[c]) ++cs.dim_lower;

  // A*-exact subspace, expressed in basis coordinates.
  std::vector<std::pair<long, long>> upper_exp;
  detail::upper_exponents(N, dedupe, upper_exp);
  MatC<Real> upper_amb = detail::monomial_matrix(model, upper_exp);
  MatC<Real> upper_raw = cs.basis.adjoint() * upper_amb;  // exact: columns lie in the span
  OrthoResult<Real> gs_up = orthonormalize(upper_raw, tol);
  cs.upper_coords = std::move(gs_up.basis);
  cs.dim_upper = gs_up.rank;

  const Index w = cs.D_N - cs.dim_lower;
  if (cs.D_N - cs.dim_upper != w)
    throw Error(ErrorKind::not_normal, "completion defect dimensions disagree");

  cs.w_source = MatC<Real>::Zero(cs.D_N, w);
  for (Index k = 0; k < w; ++k) cs.w_source(cs.dim_lower + k, k) = Complex<Real>(1, 0);

  // Completion range basis, computed A-adapted: for each domain vector take
  // the in-span part of its image under A, strip the A*-exact component, and
  // keep it when independent. This makes the completion agree with A itself
  // whenever A already maps the defect space where it needs to go; remaining
  // slots are filled from the coordinate axes.
  cs.w_target = MatC<Real>::Zero(cs.D_N, w);
  MatC<Real> accepted(cs.D_N, w);
  Index n_accepted = 0;
  std::vector<Index> slot_of_accepted;
  std::vector<Index> deferred;
  for (Index k = 0; k < w; ++k) {
    VecC<Real> image = model.apply_A(cs.basis.col(cs.dim_lower + k));
    VecC<Real> c = cs.basis.adjoint() * image;
    MatC<Real> acc = accepted.leftCols(n_accepted);
    Real residual = detail::strip_components(c, {&cs.upper_coords, &acc});
    if (residual >= tol * sqrt_r) {
      c /= residual;
      accepted.col(n_accepted) = c;
      slot_of_accepted.push_back(k);
      ++n_accepted;
    } else {
      deferred.push_back(k);
    }
  }
  for (Index slot : deferred) {
    bool filled = false;
    for (Index mcol = 0; mcol < cs.D_N && !filled; ++mcol) {
      VecC<Real> c = VecC<Real>::Zero(cs.D_N);
      c[mcol] = Complex<Real>(1, 0);
      MatC<Real> acc = accepted.leftCols(n_accepted);
      Real residual = detail::strip_components(c, {&cs.upper_coords, &acc});
      if (residual >= tol) {
        c /= residual;
        accepted.col(n_accepted) = c;
        slot_of_accepted.push_back(slot);
        ++n_accepted;
        filled = true;
      }
    }
    if (!filled) throw Error(ErrorKind::not_normal, "could not complete the defect basis");
  }
  for (Index t = 0; t < n_accepted; ++t) cs.w_target.col(slot_of_accepted[static_cast<std::size_t>(t)]) = accepted.col(t);

  // Completed operator: exact action on the A-exact block, scaled completion
  // on the defect block.
  cs.A_N = MatC<Real>(cs.D_N, cs.D_N);
  if (cs.dim_lower > 0) {
    MatC<Real> images(model.ambient_dim, cs.dim_lower);
    for (Index k = 0; k < cs.dim_lower; ++k) images.col(k) = model.apply_A(cs.basis.col(k));
    cs.A_N.leftCols(cs.dim_lower) = cs.basis.adjoint() * images;
  }
  for (Index k = 0; k < w; ++k) cs.A_N.col(cs.dim_lower + k) = sqrt_r * cs.w_target.col(k);

  // Adjoint, assembled from its own defining action and checked against the
  // conjugate transpose.
  cs.A_N_star = MatC<Real>::Zero(cs.D_N, cs.D_N);
  if (cs.dim_upper > 0) {
    MatC<Real> upper_amb_basis = cs.basis * cs.upper_coords;
    MatC<Real> images(model.ambient_dim, cs.dim_upper);
    for (Index t = 0; t < cs.dim_upper; ++t) images.col(t) = model.apply_Astar(upper_amb_basis.col(t));
    cs.A_N_star = (cs.basis.adjoint() * images) * cs.upper_coords.adjoint();
  }
  cs.A_N_star += sqrt_r * cs.w_source * cs.w_target.adjoint();
  const Real adjoint_defect = (cs.A_N_star - cs.A_N.adjoint()).cwiseAbs().maxCoeff();
  if (adjoint_defect > Real(1e-10) * std::max(Real(1), sqrt_r))
    throw Error(ErrorKind::not_normal, "independently assembled adjoint disagrees");

  cs.phi_coords = cs.basis.adjoint() * model.phi;
  return cs;
}

template <typename Real>
struct SpectralData {
  int N = 0;
  Index D_N = 0;
  Real r_A = Real(1);
  int M = 1;
  VecC<Real> lambda;  // eigenvalues
  VecR<Real> xi;      // nonnegative seed weights, xi_n = pairing(u_n, phi)
  MatC<Real> U;       // eigenvector columns in basis coordinates
};

namespace detail {

template <typename Real>
std::vector<std::vector<Index>> cluster_by_distance(const VecR<Real>& values, Real tol) {
  const Index n = values.size();
  std::vector<std::vector<Index>> clusters;
  Index start = 0;
  for (Index i = 1; i <= n; ++i) {
    if (i == n || values[i] - values[i - 1] > tol) {
      std::vector<Index> c;
      for (Index k = start; k < i; ++k) c.push_back(k);
      clusters.push_back(std::move(c));
      start = i;
    }
  }
  return clusters;
}

}  // namespace detail

template <typename Real>
SpectralData<Real> spectral_data(const CompressionSpaces<Real>& cs, const VecC<Real>& phi_in_basis) {
  const Index D = cs.D_N;
  const Real r = cs.r_A;
  const Real sqrt_r = std::sqrt(r);
  const Real cluster_tol = Real(1e-8) * sqrt_r;

  MatC<Real> prod1 = cs.A_N_star * cs.A_N;
  MatC<Real> prod2 = cs.A_N * cs.A_N_star;
  for (Index k = 0; k < D; ++k) {
    prod1(k, k) -= r;
    prod2(k, k) -= r;
  }
  const Real normality = std::max(prod1.cwiseAbs().maxCoeff(), prod2.cwiseAbs().maxCoeff());
  if (normality > Real(1e-9) * r)
    throw Error(ErrorKind::not_normal, "completed operator fails the normality tolerance");

  // Stage one: diagonalize the Hermitian part; stage two: diagonalize the
  // anti-Hermitian part inside each eigenvalue cluster of the first stage.
  MatC<Real> herm = (cs.A_N + cs.A_N_star) / Real(2);
  herm = ((herm + herm.adjoint()) / Real(2)).eval();
  MatC<Real> skew = (cs.A_N - cs.A_N_star) / Complex<Real>(0, 2);
  skew = ((skew + skew.adjoint()) / Real(2)).eval();

  Eigen::SelfAdjointEigenSolver<MatC<Real>> es1(herm);
  if (es1.info() != Eigen::Success)
    throw Error(ErrorKind::not_normal, "Hermitian-part eigendecomposition failed");
  const VecR<Real> h = es1.eigenvalues();
  const MatC<Real>& V = es1.eigenvectors();

  MatC<Real> U(D, D);
  Index filled = 0;
  for (const auto& cluster : detail::cluster_by_distance(h, cluster_tol)) {
    const Index m = static_cast<Index>(cluster.size());
    MatC<Real> Vc(D, m);
    for (Index t = 0; t < m; ++t) Vc.col(t) = V.col(cluster[static_cast<std::size_t>(t)]);
    if (m == 1) {
      U.col(filled++) = Vc.col(0);
      continue;
    }
    MatC<Real> sub = Vc.adjoint() * skew * Vc;
    sub = ((sub + sub.adjoint()) / Real(2)).eval();
    Eigen::SelfAdjointEigenSolver<MatC<Real>> es2(sub);
    if (es2.info() != Eigen::Success)
      throw Error(ErrorKind::not_normal, "anti-Hermitian-part eigendecomposition failed");
    MatC<Real> rotated = Vc * es2.eigenvectors();
    for (Index t = 0; t < m; ++t) U.col(filled++) = rotated.col(t);
  }

  VecC<Real> lambda(D);
  {
    MatC<Real> HU = herm * U;
    MatC<Real> SU = skew * U;
    for (Index k = 0; k < D; ++k)
      lambda[k] = Complex<Real>((U.col(k).dot(HU.col(k))).real(), (U.col(k).dot(SU.col(k))).real());
  }

  // Group coinciding eigenvalues (union-find) and rotate each group so one
  // vector carries the whole seed overlap.
  std::vector<Index> parent(static_cast<std::size_t>(D));
  std::iota(parent.begin(), parent.end(), Index(0));
  std::function<Index(Index)> find = [&](Index a) -> Index {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (Index a = 0; a < D; ++a)
    for (Index b = a + 1; b < D; ++b)
      if (std::abs(lambda[a] - lambda[b]) <= cluster_tol) {
        Index ra = find(a), rb = find(b);
        if (ra != rb) parent[static_cast<std::size_t>(rb)] = ra;
      }
  std::map<Index, std::vector<Index>> groups;
  for (Index a = 0; a < D; ++a) groups[find(a)].push_back(a);

  VecR<Real> xi = VecR<Real>::Zero(D);
  const Real zero_overlap_tol = Real(1e-13);
  for (auto& [root, members] : groups) {
    const Index m = static_cast<Index>(members.size());
    if (m == 1) {
      const Index k = members[0];
      Complex<Real> c = U.col(k).dot(phi_in_basis);
      if (std::abs(c) > zero_overlap_tol) {
        U.col(k) *= c / std::abs(c);
        xi[k] = std::abs(c);
      } else {
        xi[k] = Real(0);
      }
      continue;
    }
    VecC<Real> overlaps(m);
    MatC<Real> block(D, m);
    for (Index t = 0; t < m; ++t) {
      block.col(t) = U.col(members[static_cast<std::size_t>(t)]);
      overlaps[t] = block.col(t).dot(phi_in_basis);
    }
    const Real nc = overlaps.norm();
    if (nc > zero_overlap_tol) {
      MatC<Real> rot(m, m);
      rot.col(0) = overlaps / nc;
      Index cols = 1;
      for (Index t = 0; t < m && cols < m; ++t) {
        VecC<Real> e = VecC<Real>::Zero(m);
        e[t] = Complex<Real>(1, 0);
        for (int pass = 0; pass < 2; ++pass) {
          VecC<Real> coeffs = rot.leftCols(cols).adjoint() * e;
          e -= rot.leftCols(cols) * coeffs;
        }
        const Real nrm = e.norm();
        if (nrm >= Real(1e-8)) rot.col(cols++) = e / nrm;
      }
      if (cols != m) throw Error(ErrorKind::not_normal, "could not complete a degenerate rotation");
      block = (block * rot).eval();
      xi[members[0]] = nc;
    }
    for (Index t = 0; t < m; ++t) U.col(members[static_cast<std::size_t>(t)]) = block.col(t);
    // Group members share one representative eigenvalue after rotation.
    Complex<Real> rep(0);
    for (Index t = 0; t < m; ++t) rep += lambda[members[static_cast<std::size_t>(t)]];
    rep /= Real(m);
    for (Index t = 0; t < m; ++t) lambda[members[static_cast<std::size_t>(t)]] = rep;
  }

  // Deterministic phase for vectors carrying no seed weight.
  for (Index k = 0; k < D; ++k) {
    if (xi[k] != Real(0)) continue;
    for (Index i = 0; i < D; ++i) {
      if (std::abs(U(i, k)) > Real(1e-12)) {
        U.col(k) *= std::conj(U(i, k)) / std::abs(U(i, k));
        break;
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(D));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (lambda[a].real() != lambda[b].real()) return lambda[a].real() < lambda[b].real();
    if (lambda[a].imag() != lambda[b].imag()) return lambda[a].imag() < lambda[b].imag();
    return xi[a] > xi[b];
  });

  SpectralData<Real> sd;
  sd.N = cs.N;
  sd.D_N = D;
  sd.r_A = r;
  sd.M = cs.M;
  sd.lambda = VecC<Real>(D);
  sd.xi = VecR<Real>(D);
  sd.U = MatC<Real>(D, D);
  for (Index k = 0; k < D; ++k) {
    sd.lambda[k] = lambda[order[static_cast<std::size_t>(k)]];
    sd.xi[k] = xi[order[static_cast<std::size_t>(k)]];
    sd.U.col(k) = U.col(order[static_cast<std::size_t>(k)]);
  }
  return sd;
}

template <typename Real>
SpectralData<Real> spectral_data(const CompressionSpaces<Real>& cs) {
  return spectral_data(cs, cs.phi_coords);
}

// Largest residual of the adjoint acting on an eigenvector against the
// conjugated eigenvalue.
template <typename Real>
Real conjugate_eigen_check(const SpectralData<Real>& sd, const CompressionSpaces<Real>& cs) {
  Real worst(0);
  for (Index k = 0; k < sd.D_N; ++k) {
    VecC<Real> resid = cs.A_N_star * sd.U.col(k) - std::conj(sd.lambda[k]) * sd.U.col(k);
    worst = std::max(worst, resid.norm());
  }
  return worst;
}

// The matrix P(A_N, A_N*).
template <typename Real>
MatC<Real> operator_polynomial(const CompressionSpaces<Real>& cs, const Polynomial<Real>& P) {
  const Index D = cs.D_N;
  int max_i = 0, max_j = 0;
  for (const auto& [ij, c] : P.coeff) {
    max_i = std::max(max_i, ij.first);
    max_j = std::max(max_j, ij.second);
  }
  std::vector<MatC<Real>> apow(static_cast<std::size_t>(max_i) + 1);
  std::vector<MatC<Real>> spow(static_cast<std::size_t>(max_j) + 1);
  apow[0] = MatC<Real>::Identity(D, D);
  for (int t = 1; t <= max_i; ++t) apow[static_cast<std::size_t>(t)] = cs.A_N * apow[static_cast<std::size_t>(t - 1)];
  spow[0] = MatC<Real>::Identity(D, D);
  for (int t = 1; t <= max_j; ++t) spow[static_cast<std::size_t>(t)] = cs.A_N_star * spow[static_cast<std::size_t>(t - 1)];
  MatC<Real> out = MatC<Real>::Zero(D, D);
  for (const auto& [ij, c] : P.coeff)
    out += c * (apow[static_cast<std::size_t>(ij.first)] * spow[static_cast<std::size_t>(ij.second)]);
  return out;
}

}  // namespace spectral
