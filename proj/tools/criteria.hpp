#pragma once

// Acceptance suite: twelve checks with hard tolerances and runtime caps, each
// writing a small artifact file. The same code path backs the `suite`
// subcommand and the standalone acceptance runner, so determinism of the
// emitted tree is itself testable.

#include "spectral/compression.hpp"
#include "spectral/distributions.hpp"
#include "spectral/embedding.hpp"
#include "spectral/kernelprop.hpp"
#include "spectral/measure.hpp"
#include "spectral/models.hpp"
#include "spectral/selfadjoint.hpp"
#include "spectral/types.hpp"

#include "io_utils.hpp"
#include "scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace suite {

using Real = double;
using C = spectral::Complex<Real>;
namespace fs = std::filesystem;

inline std::string fmt6(Real v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Stage {
  spectral::OperatorModel<Real> model;
  spectral::CompressionSpaces<Real> cs;
  spectral::SpectralData<Real> sd;
};

class SuiteContext {
 public:
  SuiteContext(std::uint64_t seed, bool quick) : seed_(seed), quick_(quick) {}

  std::uint64_t seed() const { return seed_; }
  bool quick() const { return quick_; }
  int cap(int N) const { return quick_ ? std::min(N, 100) : N; }

  const Stage& shift(int N) { return cached(shift_, N, [&] { return scenarios::shift_for_stage<Real>(N); }); }
  const Stage& diag3(int N) { return cached(diag3_, N, [&] { return scenarios::diag3<Real>(); }); }
  const Stage& sadj3(int N) { return cached(sadj3_, N, [&] { return scenarios::sadj3<Real>(); }); }
  const Stage& scaled(int N) {
    return cached(scaled_, N, [&] { return scenarios::scaled_diag3<Real>(C(1, 1)); });
  }

  const std::vector<spectral::BoxGrid<Real>>& diag3_grids() {
    if (diag3_grids_.empty())
      diag3_grids_ = spectral::grid_family<Real>(Real(2), 3, {Real(-1), Real(0), Real(1)});
    return diag3_grids_;
  }
  const std::vector<spectral::BoxGrid<Real>>& shift_grids() {
    if (shift_grids_.empty()) shift_grids_ = spectral::grid_family<Real>(Real(2), 5, {});
    return shift_grids_;
  }

 private:
  template <typename MakeModel>
  const Stage& cached(std::map<int, Stage>& store, int N, MakeModel&& make) {
    auto it = store.find(N);
    if (it != store.end()) return it->second;
    Stage st;
    st.model = make();
    st.cs = spectral::build_compression(st.model, N);
    st.sd = spectral::spectral_data(st.cs);
    return store.emplace(N, std::move(st)).first->second;
  }

  std::uint64_t seed_;
  bool quick_;
  std::map<int, Stage> shift_, diag3_, sadj3_, scaled_;
  std::vector<spectral::BoxGrid<Real>> diag3_grids_, shift_grids_;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

namespace detail {

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double secs() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

template <typename Body>
CriterionResult run_criterion(int id, const std::string& name, double cap_seconds, Body&& body) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  Timer t;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = t.secs();
  if (cap_seconds > 0 && r.seconds >= cap_seconds) {
    r.pass = false;
    r.detail += "; exceeded runtime cap of " + fmt6(cap_seconds) + " s";
  }
  return r;
}

inline spectral::FunctionOnSquare<Real> fn_one() {
  return [](C) { return C(1, 0); };
}
inline spectral::FunctionOnSquare<Real> fn_id() {
  return [](C z) { return z; };
}
inline spectral::FunctionOnSquare<Real> fn_sq() {
  return [](C z) { return z * z; };
}

}  // namespace detail

// 1. Three-atom unitary at the first stage: eigenvalues and weights exact.
inline CriterionResult crit01(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(1, "exact recovery at the first stage", 1.0, [&](CriterionResult& r) {
    const Stage& st = ctx.diag3(1);
    const auto am = spectral::counting_measure(st.sd);
    std::vector<C> expected = {C(-1, 0), C(0, 1), C(1, 0)};
    // sd is sorted by (Re, Im); -1 < i-column 0 < 1 in that order.
    std::vector<C> got(am.points.data(), am.points.data() + am.points.size());
    std::sort(got.begin(), got.end(), [](C a, C b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    Real eig_err = 0, mass_err = 0;
    files.push_back("crit01_recovery.csv");
    ioutil::CsvWriter csv(dir / files.back(),
                          {"atom_re", "atom_im", "lambda_re", "lambda_im", "mass", "mass_err"});
    for (std::size_t k = 0; k < expected.size(); ++k) {
      eig_err = std::max(eig_err, std::abs(got[k] - expected[k]));
    }
    for (spectral::Index k = 0; k < am.points.size(); ++k) {
      const Real me = std::abs(am.masses[k] - Real(1) / 3);
      mass_err = std::max(mass_err, me);
      csv.row({ioutil::fmt_real(am.points[k].real()), ioutil::fmt_real(am.points[k].imag()),
               ioutil::fmt_real(am.points[k].real()), ioutil::fmt_real(am.points[k].imag()),
               ioutil::fmt_real(am.masses[k]), ioutil::fmt_real(me)});
    }
    r.pass = am.points.size() == 3 && eig_err <= 1e-10 && mass_err <= 1e-10;
    r.detail = "eigenvalue err " + fmt6(eig_err) + ", mass err " + fmt6(mass_err);
  });
}

// 2. Shift: every 45-degree sector carries 1/8 of the mass up to 1/D_N, and
// the box discrepancy against the finest stage strictly decreases.
inline CriterionResult crit02(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(2, "sector equidistribution", 30.0, [&](CriterionResult& r) {
    std::vector<int> Ns = ctx.quick() ? std::vector<int>{50, 100} : std::vector<int>{50, 100, 200};
    const auto& grids = ctx.shift_grids();
    const auto& grid = grids[3];
    const auto ref_bm =
        spectral::box_masses(spectral::counting_measure(ctx.shift(Ns.back()).sd), grid, Real(0));

    files.push_back("crit02_sectors.csv");
    ioutil::CsvWriter sectors(dir / files.back(), {"N", "sector", "mass", "deviation", "bound"});
    files.push_back("crit02_discrepancy.csv");
    ioutil::CsvWriter disc_csv(dir / files.back(), {"N", "level", "discrepancy"});

    Real worst_margin = -1;  // most negative (bound - deviation) seen
    bool sectors_ok = true;
    std::vector<Real> discs;
    const Real pi = std::acos(Real(-1));
    for (int N : Ns) {
      const Stage& st = ctx.shift(N);
      Real mass[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      for (spectral::Index k = 0; k < st.sd.D_N; ++k) {
        int s = static_cast<int>(std::floor((std::arg(st.sd.lambda[k]) + pi) / (pi / 4)));
        s = std::min(std::max(s, 0), 7);
        mass[s] += st.sd.xi[k] * st.sd.xi[k];
      }
      const Real bound = Real(1) / (2 * N + 1);
      for (int s = 0; s < 8; ++s) {
        const Real dev = std::abs(mass[s] - Real(1) / 8);
        sectors_ok = sectors_ok && dev <= bound;
        worst_margin = std::max(worst_margin, dev - bound);
        sectors.row({std::to_string(N), std::to_string(s), ioutil::fmt_real(mass[s]),
                     ioutil::fmt_real(dev), ioutil::fmt_real(bound)});
      }
      const auto bm = spectral::box_masses(spectral::counting_measure(st.sd), grid, Real(0));
      const Real d = spectral::measure_discrepancy(bm, ref_bm);
      discs.push_back(d);
      disc_csv.row({std::to_string(N), "3", ioutil::fmt_real(d)});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < discs.size(); ++i) decreasing = decreasing && discs[i] < discs[i - 1];
    r.pass = sectors_ok && decreasing;
    std::string chain;
    for (std::size_t i = 0; i < discs.size(); ++i) chain += (i ? " > " : "") + fmt6(discs[i]);
    r.detail = "worst sector overshoot " + fmt6(worst_margin) + ", discrepancy " + chain;
  });
}

// 3. Embedding norms match integrals: exact Riemann value 2 on the shift for
// f = z + conj(z); random low-degree polynomials on the three-atom model.
inline CriterionResult crit03(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(3, "embedding isometry", 0, [&](CriterionResult& r) {
    files.push_back("crit03_isometry.csv");
    ioutil::CsvWriter csv(dir / files.back(), {"model", "N", "case", "value", "target", "defect", "tol"});
    spectral::FunctionOnSquare<Real> f = [](C z) { return z + std::conj(z); };
    Real worst_shift = 0;
    for (int N : {1, 2, 3, 4, 5, 8, 13, 21, 34, 50}) {
      const Stage& st = ctx.shift(N);
      const auto v = spectral::embed_function(f, st.sd);
      const Real val = spectral::norm2(v) * spectral::norm2(v);
      const Real defect = std::abs(val - Real(2));
      worst_shift = std::max(worst_shift, defect);
      csv.row({"shift", std::to_string(N), "re_sum", ioutil::fmt_real(val), "2",
               ioutil::fmt_real(defect), "1e-09"});
    }
    const Stage& d3 = ctx.diag3(1);
    const auto ref = spectral::reference_measure(d3.model, d3.sd);
    auto rng = spectral::seeded_rng(ctx.seed() ^ 0x3030303ULL);
    Real worst_diag = 0;
    for (int p = 0; p < 20; ++p) {
      const auto P = spectral::random_polynomial<Real>(rng, 3);
      spectral::FunctionOnSquare<Real> fp = [&P](C z) { return P.eval_at(z); };
      const Real defect = spectral::isometry_defect(fp, d3.sd, ref);
      worst_diag = std::max(worst_diag, defect);
      csv.row({"diag3", "1", "poly" + std::to_string(p), "", "", ioutil::fmt_real(defect), "1e-12"});
    }
    r.pass = worst_shift <= 1e-9 && worst_diag <= 1e-12;
    r.detail = "shift defect " + fmt6(worst_shift) + ", diag3 defect " + fmt6(worst_diag);
  });
}

// 4. Embedded polynomials coincide with operator polynomials applied to the
// cyclic vector.
inline CriterionResult crit04(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(4, "polynomial functional calculus", 0, [&](CriterionResult& r) {
    files.push_back("crit04_consistency.csv");
    ioutil::CsvWriter csv(dir / files.back(), {"model", "poly", "defect", "tol"});
    auto rng = spectral::seeded_rng(ctx.seed() ^ 0x4040404ULL);
    Real worst = 0;
    struct Scenario {
      const char* name;
      const Stage* st;
      int maxdeg;
    };
    const Stage& sh = ctx.shift(5);
    const Stage& d3 = ctx.diag3(1);
    for (const Scenario& sc : {Scenario{"shift", &sh, 5}, Scenario{"diag3", &d3, 1}}) {
      for (int p = 0; p < 50; ++p) {
        const auto P = spectral::random_polynomial<Real>(rng, sc.maxdeg);
        const Real defect = spectral::polynomial_consistency(sc.st->model, sc.st->cs, sc.st->sd, P);
        worst = std::max(worst, defect);
        csv.row({sc.name, std::to_string(p), ioutil::fmt_real(defect), "1e-08"});
      }
    }
    r.pass = worst <= 1e-8;
    r.detail = "max defect " + fmt6(worst);
  });
}

// 5. Scaled-normality of every stage operator plus weight sanity, on all
// compressible models through stage 20.
inline CriterionResult crit05(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(5, "normality and weight invariants", 0, [&](CriterionResult& r) {
    files.push_back("crit05_invariants.csv");
    ioutil::CsvWriter csv(dir / files.back(),
                          {"model", "N", "adjoint_defect", "tol", "min_xi", "mass_defect"});
    Real worst_rel = 0, worst_mass = 0, min_xi = 0;
    bool ok = true;
    struct Named {
      const char* name;
      std::function<const Stage&(int)> get;
    };
    std::vector<Named> models = {
        {"diag3", [&](int N) -> const Stage& { return ctx.diag3(N); }},
        {"shift", [&](int N) -> const Stage& { return ctx.shift(N); }},
        {"sadj3", [&](int N) -> const Stage& { return ctx.sadj3(N); }},
        {"scaled_diag3", [&](int N) -> const Stage& { return ctx.scaled(N); }},
    };
    for (const auto& m : models)
      for (int N = 0; N <= 20; ++N) {
        const Stage& st = m.get(N);
        const Real rA = st.cs.r_A;
        const auto I = spectral::MatC<Real>::Identity(st.cs.D_N, st.cs.D_N);
        const Real d1 = (st.cs.A_N_star * st.cs.A_N - rA * I).cwiseAbs().maxCoeff();
        const Real d2 = (st.cs.A_N * st.cs.A_N_star - rA * I).cwiseAbs().maxCoeff();
        const Real defect = std::max(d1, d2);
        const Real mass_defect = std::abs(st.sd.xi.squaredNorm() - Real(1));
        const Real mn = st.sd.xi.minCoeff();
        ok = ok && defect <= 1e-9 * rA && mn >= Real(0) && mass_defect <= 1e-10;
        worst_rel = std::max(worst_rel, defect / rA);
        worst_mass = std::max(worst_mass, mass_defect);
        min_xi = std::min(min_xi, mn);
        csv.row({m.name, std::to_string(N), ioutil::fmt_real(defect), ioutil::fmt_real(1e-9 * rA),
                 ioutil::fmt_real(mn), ioutil::fmt_real(mass_defect)});
      }
    r.pass = ok;
    r.detail = "max relative adjoint defect " + fmt6(worst_rel) + ", max mass defect " +
               fmt6(worst_mass) + ", min weight " + fmt6(min_xi);
  });
}

// 6. Unit-modulus model with a known generator: phase recovery, exponential
// reconstruction, pushforward mass, generator identity.
inline CriterionResult crit06(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(6, "self-adjoint logarithm", 0, [&](CriterionResult& r) {
    const Stage& st = ctx.sadj3(2);
    const auto pd = spectral::log_spectrum(st.sd);
    std::vector<Real> got(pd.q.data(), pd.q.data() + pd.q.size());
    std::sort(got.begin(), got.end());
    std::vector<Real> want = {-0.05, 0.02, 0.1};
    Real phase_err = 0;
    for (std::size_t k = 0; k < want.size(); ++k)
      phase_err = std::max(phase_err, std::abs(got[k] - want[k]));
    const Real expc = spectral::exp_check(pd, st.sd, st.cs);
    const auto push = spectral::pushforward_measure(spectral::counting_measure(st.sd));
    Real total = 0;
    for (const auto& qm : push) total += qm.second;
    const Real mass_err = std::abs(total - Real(1));
    Real gen_err = 0;
    for (const auto& P : {spectral::Polynomial<Real>::one(), spectral::Polynomial<Real>::x(),
                          spectral::Polynomial<Real>::xy()})
      gen_err = std::max(gen_err, spectral::generator_defect(st.model, st.cs, st.sd, P));

    files.push_back("crit06_selfadjoint.csv");
    ioutil::CsvWriter csv(dir / files.back(), {"check", "value", "limit"});
    csv.row({"phase_error", ioutil::fmt_real(phase_err), "1e-10"});
    csv.row({"exp_check", ioutil::fmt_real(expc), "1e-10"});
    csv.row({"pushforward_mass_error", ioutil::fmt_real(mass_err), "1e-14"});
    csv.row({"generator_defect", ioutil::fmt_real(gen_err), "1e-10"});
    r.pass = got.size() == 3 && phase_err <= 1e-10 && expc <= 1e-10 && mass_err <= 1e-14 &&
             gen_err <= 1e-10;
    r.detail = "phase err " + fmt6(phase_err) + ", exp err " + fmt6(expc) + ", mass err " +
               fmt6(mass_err) + ", generator err " + fmt6(gen_err);
  });
}

// 7. Point-mass functionals pair correctly with embedded functions: exactly on
// the isolated three-atom model, within budget on the shift at stage 300.
inline CriterionResult crit07(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(7, "distribution pairing", 60.0, [&](CriterionResult& r) {
    files.push_back("crit07_pairing.csv");
    ioutil::CsvWriter csv(dir / files.back(),
                          {"model", "alpha_re", "alpha_im", "f", "defect", "budget", "tol"});
    const Stage& d3 = ctx.diag3(2);
    const auto ref3 = spectral::reference_measure(d3.model, d3.sd);
    const auto& g3 = ctx.diag3_grids();
    struct F {
      const char* name;
      spectral::FunctionOnSquare<Real> f;
    };
    const std::vector<F> fns = {{"one", detail::fn_one()}, {"id", detail::fn_id()}, {"sq", detail::fn_sq()}};
    Real worst3 = 0;
    for (C alpha : {C(1, 0), C(0, 1), C(-1, 0)}) {
      const auto theta = spectral::dirac<Real>(alpha);
      const auto v = spectral::theta_vector(theta, d3.sd, g3[2], ref3);
      for (const auto& fc : fns) {
        const auto emb = spectral::embed_function(fc.f, d3.sd);
        const Real defect = std::abs(spectral::pairing(emb, v) - std::conj(fc.f(alpha)));
        worst3 = std::max(worst3, defect);
        csv.row({"diag3", ioutil::fmt_real(alpha.real()), ioutil::fmt_real(alpha.imag()), fc.name,
                 ioutil::fmt_real(defect), "", "1e-10"});
      }
    }

    const int N = ctx.cap(300);
    const Stage& sh = ctx.shift(N);
    const auto refN = spectral::counting_measure(sh.sd);
    const auto& gs = ctx.shift_grids();
    spectral::SampledFunction<Real> fsq{detail::fn_sq(), Real(2) * std::sqrt(Real(2)) * Real(sh.model.M)};
    const auto theta1 = spectral::dirac<Real>(C(1, 0));
    const auto [defect, budget] = spectral::representation_defect(theta1, fsq, sh.sd, gs[3], refN);
    csv.row({"shift", "1", "0", "sq", ioutil::fmt_real(defect), ioutil::fmt_real(budget), "0.05"});

    r.pass = worst3 <= 1e-10 && defect <= budget && defect <= 0.05;
    r.detail = "diag3 defect " + fmt6(worst3) + "; shift N=" + std::to_string(N) + " defect " +
               fmt6(defect) + " (budget " + fmt6(budget) + ")";
  });
}

// 8. Box-coefficient sums stay within 16x the functional bound on every valid
// schedule entry, for point masses and a weighted integral on both models.
inline CriterionResult crit08(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(8, "box-coefficient norm bound", 0, [&](CriterionResult& r) {
    files.push_back("crit08_norm0.csv");
    ioutil::CsvWriter csv(dir / files.back(),
                          {"model", "theta", "N", "n", "eps", "valid", "total", "limit"});
    bool ok = true;
    Real worst_ratio = 0;
    int valid_count = 0;

    auto run_model = [&](const char* mname, const std::vector<const Stage*>& stages,
                         const std::vector<spectral::BoxGrid<Real>>& grids, int n_max,
                         const spectral::AtomicMeasure<Real>& ref) {
      spectral::FunctionOnSquare<Real> g = detail::fn_id();
      struct T {
        std::string name;
        spectral::GeneralizedDistribution<Real> theta;
      };
      std::vector<T> thetas;
      thetas.push_back({"dirac", spectral::dirac<Real>(mname == std::string("diag3") ? C(0, 1) : C(1, 0))});
      thetas.push_back({"g_id", spectral::from_function<Real>(g, ref)});
      std::vector<spectral::SpectralData<Real>> sds;
      for (const Stage* st : stages) sds.push_back(st->sd);
      bool model_has_valid = false;
      for (const auto& th : thetas) {
        const auto sched = spectral::good_pair_schedule(th.theta, sds, grids, n_max, ref);
        for (std::size_t k = 0; k < sched.entries.size(); ++k) {
          const auto& e = sched.entries[k];
          Real total = 0, limit = 0;
          if (e.valid) {
            auto [tot, lim] =
                spectral::norm0_bound_check(th.theta, sds[k], grids[static_cast<std::size_t>(e.n)]);
            total = tot;
            limit = lim;
            ok = ok && total <= limit;
            worst_ratio = std::max(worst_ratio, limit > 0 ? total / limit : Real(0));
            ++valid_count;
            model_has_valid = true;
          }
          csv.row({mname, th.name, std::to_string(e.N), std::to_string(e.n), ioutil::fmt_real(e.eps),
                   e.valid ? "true" : "false", ioutil::fmt_real(total), ioutil::fmt_real(limit)});
        }
      }
      ok = ok && model_has_valid;
    };

    const auto ref3 = spectral::reference_measure(ctx.diag3(1).model, ctx.diag3(3).sd);
    run_model("diag3", {&ctx.diag3(1), &ctx.diag3(2), &ctx.diag3(3)}, ctx.diag3_grids(), 3, ref3);

    std::vector<int> shiftNs;
    shiftNs.push_back(100);
    if (ctx.cap(300) != 100) shiftNs.push_back(ctx.cap(300));
    std::vector<const Stage*> sh;
    for (int N : shiftNs) sh.push_back(&ctx.shift(N));
    const auto refS = spectral::counting_measure(sh.back()->sd);
    run_model("shift", sh, ctx.shift_grids(), 5, refS);

    r.pass = ok;
    r.detail = std::to_string(valid_count) + " valid entries, worst total/limit ratio " +
               fmt6(worst_ratio);
  });
}

// 9. Kernel values recovered from box-averaged propagators: exactly for the
// rank-one kernel on isolated atoms, within budget for a smooth kernel on the
// shift at stage 300.
inline CriterionResult crit09(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(9, "kernel recovery", 300.0, [&](CriterionResult& r) {
    files.push_back("crit09_kernel.csv");
    ioutil::CsvWriter csv(dir / files.back(), {"model", "kernel", "alpha_re", "alpha_im", "beta_re",
                                               "beta_im", "p", "N", "value_re", "value_im",
                                               "expected_re", "expected_im", "error", "budget"});
    const Stage& d3 = ctx.diag3(2);
    const auto Kxy = spectral::builtin_kernel<Real>("xy_conj", d3.model.r_A);
    const auto B3 = spectral::kernel_operator(Kxy, d3.sd);
    const C v3 = spectral::propagator(B3, C(1, 0), C(0, 1), 2, d3.sd, ctx.diag3_grids());
    const C want3 = Kxy.K(C(1, 0), C(0, 1));
    const Real err3 = std::abs(v3 - want3);
    csv.row({"diag3", "xy_conj", "1", "0", "0", "1", "2", "2", ioutil::fmt_real(v3.real()),
             ioutil::fmt_real(v3.imag()), ioutil::fmt_real(want3.real()),
             ioutil::fmt_real(want3.imag()), ioutil::fmt_real(err3), "1e-10"});

    const int N = ctx.cap(300);
    const Stage& sh = ctx.shift(N);
    const auto& gs = ctx.shift_grids();
    const auto Kexp = spectral::builtin_kernel<Real>("exp_re", sh.model.r_A);
    const Real pi = std::acos(Real(-1));
    const C alpha(1, 0);
    std::vector<C> betas;
    for (int k = 0; k < 3; ++k) betas.push_back(C(std::cos(pi * k / 4), std::sin(pi * k / 4)));
    std::vector<C> targets = betas;
    targets.push_back(alpha);
    const int pmax = spectral::max_usable_level(gs, spectral::counting_measure(sh.sd), targets);
    std::vector<int> p_levels;
    for (int p = 0; p <= pmax; ++p) p_levels.push_back(p);

    bool ok_shift = true;
    Real worst_err = 0;
    std::vector<spectral::SpectralData<Real>> sds = {sh.sd};
    for (const C beta : betas) {
      const auto est = spectral::kernel_estimate(Kexp, alpha, beta, p_levels, sds, gs);
      const C want = Kexp.K(alpha, beta);
      for (const auto& cell : est.table) {
        const Real cell_err = std::abs(cell.value - want);
        csv.row({"shift", "exp_re", ioutil::fmt_real(alpha.real()), ioutil::fmt_real(alpha.imag()),
                 ioutil::fmt_real(beta.real()), ioutil::fmt_real(beta.imag()), std::to_string(cell.p),
                 std::to_string(cell.N), ioutil::fmt_real(cell.value.real()),
                 ioutil::fmt_real(cell.value.imag()), ioutil::fmt_real(want.real()),
                 ioutil::fmt_real(want.imag()), ioutil::fmt_real(cell_err),
                 cell.p == pmax ? ioutil::fmt_real(est.budget) : std::string("")});
      }
      const Real err = std::abs(est.value - want);
      worst_err = std::max(worst_err, err);
      ok_shift = ok_shift && err <= est.budget && err <= 0.1;
    }
    r.pass = err3 <= 1e-10 && ok_shift;
    r.detail = "diag3 err " + fmt6(err3) + "; shift N=" + std::to_string(N) + " max err " +
               fmt6(worst_err) + " through level " + std::to_string(pmax);
  });
}

// 10. Point-mass propagators: identical coefficients to box vectors at
// coinciding levels, and kernel values within the same budgets.
inline CriterionResult crit10(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(10, "point-mass propagator", 0, [&](CriterionResult& r) {
    files.push_back("crit10_propagator.csv");
    ioutil::CsvWriter csv(dir / files.back(),
                          {"model", "beta_re", "beta_im", "p", "coeff_diff", "value_re", "value_im",
                           "expected_re", "expected_im", "error", "budget"});
    bool ok = true;
    Real worst_coeff = 0, worst_err = 0;

    // Three-atom model, rank-one kernel, isolating level.
    {
      const Stage& d3 = ctx.diag3(2);
      const auto& g3 = ctx.diag3_grids();
      const auto ref3 = spectral::reference_measure(d3.model, d3.sd);
      const auto K = spectral::builtin_kernel<Real>("xy_conj", d3.model.r_A);
      const auto B = spectral::kernel_operator(K, d3.sd);
      const C alpha(1, 0), beta(0, 1);
      const auto va = spectral::theta_vector(spectral::dirac<Real>(alpha), d3.sd, g3[2], ref3);
      const auto vb = spectral::theta_vector(spectral::dirac<Real>(beta), d3.sd, g3[2], ref3);
      const auto ua = spectral::box_vector(alpha, 2, d3.sd, g3);
      const auto ub = spectral::box_vector(beta, 2, d3.sd, g3);
      const Real cd = std::max((va.a - ua.a).cwiseAbs().maxCoeff(), (vb.a - ub.a).cwiseAbs().maxCoeff());
      const auto [value, report] = spectral::dirac_propagator(
          B, spectral::dirac<Real>(alpha), spectral::dirac<Real>(beta), d3.sd, g3[2], ref3);
      const C want = K.K(alpha, beta);
      const Real err = std::abs(value - want);
      ok = ok && cd == Real(0) && err <= 1e-10;
      worst_coeff = std::max(worst_coeff, cd);
      worst_err = std::max(worst_err, err);
      csv.row({"diag3", ioutil::fmt_real(beta.real()), ioutil::fmt_real(beta.imag()), "2",
               ioutil::fmt_real(cd), ioutil::fmt_real(value.real()), ioutil::fmt_real(value.imag()),
               ioutil::fmt_real(want.real()), ioutil::fmt_real(want.imag()), ioutil::fmt_real(err),
               "1e-10"});
    }

    // Shift with the smooth kernel at the finest usable level.
    {
      const int N = ctx.cap(300);
      const Stage& sh = ctx.shift(N);
      const auto& gs = ctx.shift_grids();
      const auto refN = spectral::counting_measure(sh.sd);
      const auto K = spectral::builtin_kernel<Real>("exp_re", sh.model.r_A);
      const auto B = spectral::kernel_operator(K, sh.sd);
      const Real pi = std::acos(Real(-1));
      const C alpha(1, 0);
      std::vector<C> betas;
      for (int k = 0; k < 3; ++k) betas.push_back(C(std::cos(pi * k / 4), std::sin(pi * k / 4)));
      std::vector<C> targets = betas;
      targets.push_back(alpha);
      const int p = spectral::max_usable_level(gs, refN, targets);
      const auto ua = spectral::box_vector(alpha, p, sh.sd, gs);
      const auto va = spectral::theta_vector(spectral::dirac<Real>(alpha), sh.sd,
                                             gs[static_cast<std::size_t>(p)], refN);
      std::vector<spectral::SpectralData<Real>> sds = {sh.sd};
      for (const C beta : betas) {
        const auto ub = spectral::box_vector(beta, p, sh.sd, gs);
        const auto vb = spectral::theta_vector(spectral::dirac<Real>(beta), sh.sd,
                                               gs[static_cast<std::size_t>(p)], refN);
        const Real cd =
            std::max((va.a - ua.a).cwiseAbs().maxCoeff(), (vb.a - ub.a).cwiseAbs().maxCoeff());
        const auto [value, report] =
            spectral::dirac_propagator(B, spectral::dirac<Real>(alpha), spectral::dirac<Real>(beta),
                                       sh.sd, gs[static_cast<std::size_t>(p)], refN);
        const C want = K.K(alpha, beta);
        const Real err = std::abs(value - want);
        const Real budget =
            spectral::kernel_estimate(K, alpha, beta, std::vector<int>{p}, sds, gs).budget;
        ok = ok && cd == Real(0) && err <= budget && err <= 0.1;
        worst_coeff = std::max(worst_coeff, cd);
        worst_err = std::max(worst_err, err);
        csv.row({"shift", ioutil::fmt_real(beta.real()), ioutil::fmt_real(beta.imag()),
                 std::to_string(p), ioutil::fmt_real(cd), ioutil::fmt_real(value.real()),
                 ioutil::fmt_real(value.imag()), ioutil::fmt_real(want.real()),
                 ioutil::fmt_real(want.imag()), ioutil::fmt_real(err), ioutil::fmt_real(budget)});
      }
    }
    r.pass = ok;
    r.detail = "max coefficient diff " + fmt6(worst_coeff) + ", max kernel error " + fmt6(worst_err);
  });
}

// 11. Operator condition checks on both kernel scenarios.
inline CriterionResult crit11(SuiteContext& ctx, const fs::path& dir, std::vector<std::string>& files) {
  return detail::run_criterion(11, "operator condition checks", 0, [&](CriterionResult& r) {
    files.push_back("crit11_checks.csv");
    ioutil::CsvWriter csv(dir / files.back(), {"scenario", "check", "value", "limit"});
    const std::vector<spectral::Polynomial<Real>> polys = {spectral::Polynomial<Real>::one(),
                                                           spectral::Polynomial<Real>::x(),
                                                           spectral::Polynomial<Real>::xy()};
    bool ok = true;
    std::string note;

    {
      const Stage& d3 = ctx.diag3(2);
      const auto K = spectral::builtin_kernel<Real>("xy_conj", d3.model.r_A);
      const auto B = spectral::kernel_operator(K, d3.sd);
      const Real c1 = spectral::check_C1(B, d3.sd, 64, ctx.seed() ^ 0x1101ULL);
      const Real c2 = spectral::check_C2(B, K, d3.sd, spectral::counting_measure(d3.sd), polys);
      const auto [c2p, c3p] = spectral::check_C2prime_C3prime(B, d3.sd, ctx.diag3_grids());
      ok = ok && c1 <= K.K_D + 1e-6 && c2 <= 1e-8 && std::isfinite(c3p) && c3p <= 3 * K.K_D;
      csv.row({"diag3_xy_conj", "C1", ioutil::fmt_real(c1), ioutil::fmt_real(K.K_D + 1e-6)});
      csv.row({"diag3_xy_conj", "C2", ioutil::fmt_real(c2), "1e-08"});
      csv.row({"diag3_xy_conj", "C2prime", ioutil::fmt_real(c2p), ""});
      csv.row({"diag3_xy_conj", "C3prime", ioutil::fmt_real(c3p), ioutil::fmt_real(3 * K.K_D)});
      note += "diag3 C1 " + fmt6(c1) + "/" + fmt6(K.K_D) + ", C2 " + fmt6(c2) + ", C3' " + fmt6(c3p);
    }
    {
      const int N = ctx.cap(300);
      const Stage& sh = ctx.shift(N);
      const auto K = spectral::builtin_kernel<Real>("exp_re", sh.model.r_A);
      const auto B = spectral::kernel_operator(K, sh.sd);
      const Real c1 = spectral::check_C1(B, sh.sd, 64, ctx.seed() ^ 0x1102ULL);
      const Real c2 = spectral::check_C2(B, K, sh.sd, spectral::counting_measure(sh.sd), polys);
      ok = ok && c1 <= K.K_D + 1e-6 && c2 <= 1e-8;
      csv.row({"shift_exp_re", "C1", ioutil::fmt_real(c1), ioutil::fmt_real(K.K_D + 1e-6)});
      csv.row({"shift_exp_re", "C2", ioutil::fmt_real(c2), "1e-08"});
      note += "; shift C1 " + fmt6(c1) + "/" + fmt6(K.K_D) + ", C2 " + fmt6(c2);
    }
    r.pass = ok;
    r.detail = note;
  });
}

struct SuiteRun {
  std::vector<CriterionResult> results;
  std::vector<std::string> files;  // relative paths, in write order
};

// Runs checks 1-11 and writes their artifacts plus acceptance.csv and
// run.json under dir. Byte-identical for identical (seed, quick).
inline SuiteRun emit_suite_tree(const fs::path& dir, std::uint64_t seed, bool quick) {
  ioutil::ensure_dir(dir);
  SuiteRun run;
  SuiteContext ctx(seed, quick);
  run.results.push_back(crit01(ctx, dir, run.files));
  run.results.push_back(crit02(ctx, dir, run.files));
  run.results.push_back(crit03(ctx, dir, run.files));
  run.results.push_back(crit04(ctx, dir, run.files));
  run.results.push_back(crit05(ctx, dir, run.files));
  run.results.push_back(crit06(ctx, dir, run.files));
  run.results.push_back(crit07(ctx, dir, run.files));
  run.results.push_back(crit08(ctx, dir, run.files));
  run.results.push_back(crit09(ctx, dir, run.files));
  run.results.push_back(crit10(ctx, dir, run.files));
  run.results.push_back(crit11(ctx, dir, run.files));

  run.files.push_back("acceptance.csv");
  {
    ioutil::CsvWriter csv(dir / "acceptance.csv", {"id", "name", "pass", "detail"});
    for (const auto& c : run.results) {
      std::string detail = c.detail;
      for (auto& ch : detail)
        if (ch == ',') ch = ';';
      csv.row({std::to_string(c.id), c.name, c.pass ? "true" : "false", detail});
    }
  }
  run.files.push_back("run.json");
  {
    nlohmann::json j;
    j["seed"] = std::to_string(seed);
    j["quick"] = quick;
    ioutil::write_json(dir / "run.json", j);
  }
  return run;
}

namespace detail {

inline std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// 12. Re-emits the whole tree into a scratch directory and compares bytes.
inline CriterionResult crit12_determinism(const fs::path& first_tree, const SuiteRun& first_run,
                                          std::uint64_t seed, bool quick) {
  return detail::run_criterion(12, "deterministic suite output", 0, [&](CriterionResult& r) {
    const fs::path scratch =
        fs::temp_directory_path() /
        ("suite_retest_" +
         std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    const SuiteRun second = emit_suite_tree(scratch, seed, quick);
    bool same = first_run.files == second.files;
    std::string mismatch;
    if (same)
      for (const auto& f : first_run.files) {
        if (detail::read_bytes(first_tree / f) != detail::read_bytes(scratch / f)) {
          same = false;
          mismatch = f;
          break;
        }
      }
    else
      mismatch = "(file lists differ)";
    std::error_code ec;
    fs::remove_all(scratch, ec);
    r.pass = same;
    r.detail = same ? std::to_string(first_run.files.size()) + " files byte-identical"
                    : "mismatch in " + mismatch;
  });
}

}  // namespace suite
