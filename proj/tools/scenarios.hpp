#pragma once

// Named models used by the CLI defaults and the acceptance suite.

#include "spectral/models.hpp"

#include <vector>

namespace scenarios {

template <typename Real>
spectral::OperatorModel<Real> diag3() {
  const std::vector<spectral::Complex<Real>> phases = {
      {1, 0}, {0, 1}, {-1, 0}};
  const std::vector<Real> weights = {Real(1) / 3, Real(1) / 3, Real(1) / 3};
  return spectral::make_diag_unitary<Real>(phases, weights);
}

template <typename Real>
spectral::OperatorModel<Real> sadj3() {
  const std::vector<Real> b = {Real(0.1), Real(-0.05), Real(0.02)};
  return spectral::make_exp_selfadjoint<Real>(b, Real(1));
}

template <typename Real>
spectral::OperatorModel<Real> scaled_diag3(spectral::Complex<Real> q) {
  return spectral::make_scaled_unitary<Real>(q, diag3<Real>());
}

// Bilateral shift sized so that stage N is exactly representable.
template <typename Real>
spectral::OperatorModel<Real> shift_for_stage(int N) {
  return spectral::make_bilateral_shift<Real>(2L * N + 1);
}

}  // namespace scenarios
