#pragma once

// Recovery of a self-adjoint generator from a unitary stage: principal
// eigenphases, the exponential reconstruction check, the pushforward of the
// counting measure to the phase interval, and the generator defect.

#include "spectral/compression.hpp"
#include "spectral/embedding.hpp"
#include "spectral/measure.hpp"
#include "spectral/models.hpp"
#include "spectral/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace spectral {

template <typename Real>
struct PhaseData {
  VecR<Real> q;                            // principal args in (-pi, pi], one per eigenvector
  const SpectralData<Real>* sd = nullptr;
};

namespace detail {

// Principal argument with the branch value -pi mapped to +pi.
template <typename Real>
Real principal_phase(Complex<Real> z) {
  Real q = std::arg(z);
  if (q <= -std::numbers::pi_v<Real>) q = std::numbers::pi_v<Real>;
  return q;
}

}  // namespace detail

template <typename Real>
PhaseData<Real> log_spectrum(const SpectralData<Real>& sd) {
  if (std::abs(sd.r_A - Real(1)) > Real(1e-12))
    throw Error(ErrorKind::unsupported_model, "phase extraction needs a unitary stage (r_A = 1)");
  PhaseData<Real> pd;
  pd.sd = &sd;
  pd.q = VecR<Real>(sd.D_N);
  for (Index n = 0; n < sd.D_N; ++n) pd.q[n] = detail::principal_phase(sd.lambda[n]);
  return pd;
}

// Max-entry distance between U diag(e^{iq}) U* and the completed operator.
template <typename Real>
Real exp_check(const PhaseData<Real>& pd, const SpectralData<Real>& sd,
               const CompressionSpaces<Real>& cs) {
  MatC<Real> rebuilt = MatC<Real>::Zero(sd.D_N, sd.D_N);
  VecC<Real> phase(sd.D_N);
  for (Index n = 0; n < sd.D_N; ++n) phase[n] = std::polar(Real(1), pd.q[n]);
  rebuilt = sd.U * phase.asDiagonal() * sd.U.adjoint();
  return (rebuilt - cs.A_N).cwiseAbs().maxCoeff();
}

// Pushforward of an atomic measure under the principal phase map; coinciding
// images merge.
template <typename Real>
std::vector<std::pair<Real, Real>> pushforward_measure(const AtomicMeasure<Real>& am) {
  std::vector<std::pair<Real, Real>> atoms;
  for (Index k = 0; k < am.points.size(); ++k)
    atoms.emplace_back(detail::principal_phase(am.points[k]), am.masses[k]);
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Real, Real>> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && merged.back().first == a.first)
      merged.back().second += a.second;
    else
      merged.push_back(a);
  }
  return merged;
}

// || diag-phase action on embed(f_P)  -  projection of the ambient generator
// applied to P(A, A*) phi ||_2, for models carrying an explicit generator.
template <typename Real>
Real generator_defect(const OperatorModel<Real>& model, const CompressionSpaces<Real>& cs,
                      const SpectralData<Real>& sd, const Polynomial<Real>& P) {
  if (model.b_values.size() == 0)
    throw Error(ErrorKind::unsupported_model, "model carries no self-adjoint generator");
  if (P.degree() > cs.N)
    throw Error(ErrorKind::invalid_argument, "polynomial degree exceeds the stage");
  const PhaseData<Real> pd = log_spectrum(sd);
  const FunctionOnSquare<Real> f = [&P](Complex<Real> z) { return P.eval_at(z); };
  const HNVector<Real> emb = embed_function(f, sd);
  VecC<Real> scaled(sd.D_N);
  for (Index n = 0; n < sd.D_N; ++n) scaled[n] = Complex<Real>(pd.q[n], 0) * emb.a[n];
  const VecC<Real> lhs = sd.U * scaled;  // back to basis coordinates

  VecC<Real> ambient = apply_polynomial(model, P);
  for (Index k = 0; k < ambient.size(); ++k) ambient[k] *= model.b_values[k];
  const VecC<Real> rhs = cs.basis.adjoint() * ambient;
  return (lhs - rhs).norm();
}

}  // namespace spectral
