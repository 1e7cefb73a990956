#pragma once

// Scalar aliases, the library-wide error type, bivariate polynomials in a
// variable and its conjugate, and the conjugate-linear pairing convention.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace spectral {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using VecC = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <typename Real>
using MatC = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

enum class ErrorKind {
  truncation,         // a product would leave the finite ambient space
  unsupported_model,  // operation undefined for this model flavor
  not_normal,         // completed operator fails its normality tolerance
  grid_construction,  // no jitter avoids the supplied atomic lines
  insufficient_n,     // a needed box carries no counting mass at this stage
  invalid_argument,   // malformed input
  non_cyclic,         // seed vector cannot generate the space
  norm_bound,         // generator norm bound violated
  kernel_vector,      // generator annihilates a basis vector
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::unsupported_model: return "unsupported_model";
    case ErrorKind::not_normal: return "not_normal";
    case ErrorKind::grid_construction: return "grid_construction";
    case ErrorKind::insufficient_n: return "insufficient_n";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::non_cyclic: return "non_cyclic";
    case ErrorKind::norm_bound: return "norm_bound";
    case ErrorKind::kernel_vector: return "kernel_vector";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Inner product, conjugate-linear in the FIRST slot: pairing(x, y) = sum conj(x_n) y_n.
// Every sesquilinear quantity in the library routes through this convention.
template <typename Real>
Complex<Real> pairing(const VecC<Real>& x, const VecC<Real>& y) {
  return x.dot(y);
}

// Finitely supported polynomial P(X, Y) evaluated either as a matrix
// polynomial P(A, A*) or as the scalar function z -> P(z, conj(z)).
template <typename Real>
struct Polynomial {
  std::map<std::pair<int, int>, Complex<Real>> coeff;  // (i, j) -> c_ij

  Polynomial& add(int i, int j, Complex<Real> c) {
    if (i < 0 || j < 0) throw Error(ErrorKind::invalid_argument, "negative monomial exponent");
    auto key = std::make_pair(i, j);
    auto it = coeff.find(key);
    if (it == coeff.end()) {
      if (c != Complex<Real>(0)) coeff.emplace(key, c);
    } else {
      it->second += c;
      if (it->second == Complex<Real>(0)) coeff.erase(it);
    }
    return *this;
  }

  // Least bound D such that every exponent pair satisfies i, j <= D.
  int degree() const {
    int d = 0;
    for (const auto& [ij, c] : coeff) d = std::max({d, ij.first, ij.second});
    return d;
  }

  // Scalar realization z -> sum c_ij z^i conj(z)^j.
  Complex<Real> eval_at(Complex<Real> z) const {
    Complex<Real> zb = std::conj(z);
    Complex<Real> out(0);
    for (const auto& [ij, c] : coeff) {
      Complex<Real> term = c;
      for (int t = 0; t < ij.first; ++t) term *= z;
      for (int t = 0; t < ij.second; ++t) term *= zb;
      out += term;
    }
    return out;
  }

  static Polynomial one() { return Polynomial{}.add(0, 0, Complex<Real>(1)); }
  static Polynomial x() { return Polynomial{}.add(1, 0, Complex<Real>(1)); }
  static Polynomial y() { return Polynomial{}.add(0, 1, Complex<Real>(1)); }
  static Polynomial xy() { return Polynomial{}.add(1, 1, Complex<Real>(1)); }
};

inline std::mt19937_64 seeded_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Random polynomial with exponents at most max_degree and coefficients drawn
// uniformly from the square [-bound, bound]^2 in the complex plane.
template <typename Real>
Polynomial<Real> random_polynomial(std::mt19937_64& rng, int max_degree, Real bound = Real(1)) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Polynomial<Real> p;
  for (int i = 0; i <= max_degree; ++i)
    for (int j = 0; j <= max_degree; ++j) {
      // Draw in a fixed order so a fixed seed reproduces the same polynomial.
      Real re = Real(u(rng)) * bound;
      Real im = Real(u(rng)) * bound;
      p.add(i, j, Complex<Real>(re, im));
    }
  return p;
}

}  // namespace spectral
