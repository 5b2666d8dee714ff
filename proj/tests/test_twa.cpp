#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/positive_p.hpp"
#include "dissoc/rng.hpp"
#include "dissoc/twa.hpp"

using namespace dissoc;

namespace {

ValidatedConfig test_config(PhysicalParams p, GridSpec g, RunConfig r) {
  return ValidatedConfig{p, g, r, derive(p, g)};
}

Real number(const Field1D& f, Real dx) { return dx * f.abs2().sum(); }

}  // namespace

TEST_CASE("twa_sample_initial: vacuum statistics and condensate mean") {
  PhysicalParams p;
  GridSpec g;
  g.num_points = 32;
  g.box_length = 32 * 1.26953125e-6;
  const auto cfg = test_config(p, g, RunConfig{});
  const Real dx = cfg.derived.dx;
  const RealArray root_density = initial_density(p, g).sqrt();

  const int n_samples = 10'000;
  Philox rng(321, 0);
  Real sum_na = 0, sum_na_sq = 0;
  Field1D mean_m = Field1D::Zero(g.num_points);
  std::vector<Real> re_eta, im_eta;
  re_eta.reserve(n_samples * g.num_points);
  im_eta.reserve(n_samples * g.num_points);
  for (int s = 0; s < n_samples; ++s) {
    const TWAState st = twa_sample_initial(cfg, rng);
    const Real na = number(st.psi_a, dx);
    sum_na += na;
    sum_na_sq += na * na;
    mean_m += st.psi_m;
    for (Eigen::Index i = 0; i < g.num_points; ++i) {
      re_eta.push_back(st.psi_a[i].real());
      im_eta.push_back(st.psi_a[i].imag());
    }
  }

  // Vacuum half-quanta: <N_a> = M/2.
  const Real mean_na = sum_na / n_samples;
  const Real var_na = sum_na_sq / n_samples - mean_na * mean_na;
  const Real se_na = std::sqrt(var_na / n_samples);
  CHECK(std::abs(mean_na - g.num_points / 2.0) < 3 * se_na);

  // Pointwise condensate mean, all points within 4.5 combined SE.
  mean_m /= n_samples;
  const Real comp_sd = 1.0 / std::sqrt(4.0 * dx);
  const Real se_comp = comp_sd / std::sqrt(static_cast<Real>(n_samples));
  for (Eigen::Index i = 0; i < g.num_points; ++i) {
    CHECK(std::abs(mean_m[i].real() - root_density[i]) < 4.5 * se_comp);
    CHECK(std::abs(mean_m[i].imag()) < 4.5 * se_comp);
  }

  // Each quadrature carries variance 1/(4 dx).
  auto variance = [](const std::vector<Real>& xs) {
    Real mean = 0;
    for (Real x : xs) mean += x;
    mean /= xs.size();
    Real var = 0;
    for (Real x : xs) var += (x - mean) * (x - mean);
    return var / (xs.size() - 1);
  };
  const Real want = 1.0 / (4.0 * dx);
  CHECK(std::abs(variance(re_eta) - want) < 0.05 * want);
  CHECK(std::abs(variance(im_eta) - want) < 0.05 * want);
}

TEST_CASE("twa_step: free evolution conserves both field norms") {
  PhysicalParams p;
  p.chi_1d = 0;
  p.delta = 0;
  GridSpec g;
  g.num_points = 64;
  g.box_length = 64 * 1.26953125e-6;
  g.dt = 1e-5;
  const auto cfg = test_config(p, g, RunConfig{});
  TWAStepper stepper(cfg);
  Philox rng(11, 0);
  TWAState s = twa_sample_initial(cfg, rng);
  const Real dx = cfg.derived.dx;
  const Real na0 = number(s.psi_a, dx), nm0 = number(s.psi_m, dx);
  for (int i = 0; i < 1000; ++i) stepper.step(s);
  CHECK(std::abs(number(s.psi_a, dx) - na0) < 1e-10 * na0);
  CHECK(std::abs(number(s.psi_m, dx) - nm0) < 1e-10 * nm0);
}

TEST_CASE("twa_step: single-mode self-phase rotation at rate U_aa |psi|^2") {
  PhysicalParams p;
  p.chi_1d = 0;
  p.delta = 0;
  p.u_aa = 1.0;
  GridSpec g;
  g.num_points = 1;
  g.box_length = 1.26953125e-6;
  g.dt = 1e-5;
  const auto cfg = test_config(p, g, RunConfig{});
  TWAStepper stepper(cfg);
  TWAState s;
  s.psi_a = Field1D::Constant(1, Complex(10.0, 0));
  s.psi_m = Field1D::Zero(1);
  const int n_steps = 2000;
  for (int i = 0; i < n_steps; ++i) stepper.step(s);
  const Real rate = p.u_aa * 100.0;  // U_aa |psi_a|^2
  const Real t = n_steps * g.dt;
  CHECK(std::abs(std::abs(s.psi_a[0]) - 10.0) < 1e-8);
  const Complex expect = 10.0 * std::exp(Complex(0, -rate * t));
  CHECK(std::abs(std::arg(s.psi_a[0] / expect)) < 1e-5);
}

TEST_CASE("twa_step: per-trajectory total number and step-halving convergence") {
  PhysicalParams p;  // paper defaults, U=0
  GridSpec g;        // dt = 1e-5
  const auto cfg = test_config(p, g, RunConfig{});
  const Real dx = cfg.derived.dx;
  Philox rng(7, 0);
  const TWAState init = twa_sample_initial(cfg, rng);

  auto run = [&](Real dt, Real t_end) {
    GridSpec g2 = g;
    g2.dt = dt;
    const auto cfg2 = test_config(p, g2, RunConfig{});
    TWAStepper stepper(cfg2);
    TWAState s = init;
    const int n = static_cast<int>(std::round(t_end / dt));
    for (int i = 0; i < n; ++i) stepper.step(s);
    return s;
  };

  const Real t_end = 0.1;
  const TWAState a = run(1e-5, t_end);   // 10^4 steps
  const TWAState b = run(5e-6, t_end);

  // Classical-field conservation of 2 N_m + N_a over 10^4 steps.
  const Real tot0 = 2 * number(init.psi_m, dx) + number(init.psi_a, dx);
  const Real tot1 = 2 * number(a.psi_m, dx) + number(a.psi_a, dx);
  CHECK(std::abs(tot1 - tot0) < 1e-8 * tot0);

  // Self-convergence of the atom number under step halving.
  const Real na_a = number(a.psi_a, dx), na_b = number(b.psi_a, dx);
  CHECK(na_a > 1.0);  // real dynamics happened
  CHECK(std::abs(na_a - na_b) < 5e-3 * na_b);
}

TEST_CASE("noise-free positive-P reduces to the TWA trajectory") {
  PhysicalParams p;  // U=0: the reduction is exact
  GridSpec g;
  g.dt = 1e-5;
  const auto cfg = test_config(p, g, RunConfig{});
  Philox rng(99, 0);
  const TWAState init = twa_sample_initial(cfg, rng);

  TWAStepper twa(cfg);
  TWAState ts = init;

  PPStepper pp(cfg);
  pp.set_noise_enabled(false);
  PPState ps;
  ps.psi_a = init.psi_a;
  ps.phi_a = init.psi_a.conjugate();
  ps.psi_m = init.psi_m;
  ps.phi_m = init.psi_m.conjugate();

  Philox unused(1, 1);
  for (int i = 0; i < 200; ++i) {
    twa.step(ts);
    pp.step(ps, unused);
  }
  const Real scale = ts.psi_m.abs().maxCoeff();
  CHECK((ps.psi_a - ts.psi_a).abs().maxCoeff() < 1e-8 * scale);
  CHECK((ps.psi_m - ts.psi_m).abs().maxCoeff() < 1e-8 * scale);
  // The conjugate partners track exactly as well.
  CHECK((ps.phi_a - ts.psi_a.conjugate()).abs().maxCoeff() < 1e-8 * scale);
}
