#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spectral/selfadjoint.hpp"
#include "scenarios.hpp"

using namespace spectral;
using Crd = Complex<double>;

namespace {

ErrorKind kind_of(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an Error");
}

}  // namespace

TEST_CASE("principal phases recover the generator diagonal") {
  const auto model = scenarios::sadj3<double>();
  const auto cs = build_compression(model, 2);
  const auto sd = spectral_data(cs);
  const auto pd = log_spectrum(sd);
  REQUIRE(pd.q.size() == 3);
  std::vector<double> q(pd.q.data(), pd.q.data() + 3);
  std::sort(q.begin(), q.end());
  CHECK(q[0] == doctest::Approx(-0.05).epsilon(1e-10));
  CHECK(q[1] == doctest::Approx(0.02).epsilon(1e-10));
  CHECK(q[2] == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("branch cut maps the negative axis to plus pi") {
  const auto model = scenarios::diag3<double>();
  const auto sd = spectral_data(build_compression(model, 1));
  const auto pd = log_spectrum(sd);
  // Eigenvalues are sorted as -1, i, 1.
  CHECK(pd.q[0] == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  CHECK(pd.q[1] == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(pd.q[2] == doctest::Approx(0.0));
}

TEST_CASE("phase extraction requires a unitary stage") {
  const auto model = scenarios::scaled_diag3<double>(Crd(2, 0));
  const auto sd = spectral_data(build_compression(model, 1));
  CHECK(kind_of([&] { log_spectrum(sd); }) == ErrorKind::unsupported_model);
}

TEST_CASE("exponential of the phases rebuilds the stage operator") {
  for (int N : {1, 2, 3}) {
    const auto model = scenarios::sadj3<double>();
    const auto cs = build_compression(model, N);
    const auto sd = spectral_data(cs);
    CHECK(exp_check(log_spectrum(sd), sd, cs) < 1e-10);
  }
  const auto shift = scenarios::shift_for_stage<double>(4);
  const auto cs = build_compression(shift, 4);
  const auto sd = spectral_data(cs);
  CHECK(exp_check(log_spectrum(sd), sd, cs) < 1e-9);
}

TEST_CASE("pushforward lands the three-atom model at 0, pi/2, pi") {
  const auto model = scenarios::diag3<double>();
  const auto sd = spectral_data(build_compression(model, 1));
  const auto push = pushforward_measure(counting_measure(sd));
  REQUIRE(push.size() == 3);
  CHECK(push[0].first == doctest::Approx(0.0));
  CHECK(push[1].first == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(push[2].first == doctest::Approx(std::numbers::pi).epsilon(1e-12));
  double total = 0;
  for (const auto& qm : push) total += qm.second;
  CHECK(std::abs(total - 1.0) <= 1e-14);
}

TEST_CASE("pushforward merges coinciding phases and keeps order") {
  AtomicMeasure<double> am;
  am.points = VecC<double>(3);
  am.points << Crd(0.6, 0.8), Crd(0.6, 0.8), Crd(1, 0);
  am.masses = VecR<double>(3);
  am.masses << 0.25, 0.25, 0.5;
  am.total = 1.0;
  const auto push = pushforward_measure(am);
  REQUIRE(push.size() == 2);
  CHECK(push[0].first == doctest::Approx(0.0));
  CHECK(push[0].second == doctest::Approx(0.5));
  CHECK(push[1].second == doctest::Approx(0.5));

  CHECK(pushforward_measure(AtomicMeasure<double>{}).empty());
}

TEST_CASE("shift stages push forward to near-uniform phases") {
  const auto model = scenarios::shift_for_stage<double>(10);
  const auto sd = spectral_data(build_compression(model, 10));
  const auto push = pushforward_measure(counting_measure(sd));
  REQUIRE(push.size() == 21);
  for (const auto& qm : push) CHECK(qm.second == doctest::Approx(1.0 / 21).epsilon(1e-8));
  for (std::size_t k = 0; k + 1 < push.size(); ++k)
    CHECK(push[k + 1].first - push[k].first ==
          doctest::Approx(2 * std::numbers::pi / 21).epsilon(1e-8));
}

TEST_CASE("generator defect vanishes for the exponential model") {
  const auto model = scenarios::sadj3<double>();
  for (int N : {1, 2}) {
    const auto cs = build_compression(model, N);
    const auto sd = spectral_data(cs);
    CHECK(generator_defect(model, cs, sd, Polynomial<double>::one()) < 1e-10);
    CHECK(generator_defect(model, cs, sd, Polynomial<double>::x()) < 1e-10);
    if (N >= 1) CHECK(generator_defect(model, cs, sd, Polynomial<double>::xy()) < 1e-10);
  }
}

TEST_CASE("generator defect rejects unsuitable inputs") {
  const auto diag = scenarios::diag3<double>();
  const auto cs = build_compression(diag, 1);
  const auto sd = spectral_data(cs);
  CHECK(kind_of([&] { generator_defect(diag, cs, sd, Polynomial<double>::one()); }) ==
        ErrorKind::unsupported_model);

  const auto sadj = scenarios::sadj3<double>();
  const auto scs = build_compression(sadj, 1);
  const auto ssd = spectral_data(scs);
  Polynomial<double> deep;
  deep.add(2, 0, Crd(1, 0));
  CHECK(kind_of([&] { generator_defect(sadj, scs, ssd, deep); }) == ErrorKind::invalid_argument);
}
