#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/positive_p.hpp"
#include "dissoc/rng.hpp"

using namespace dissoc;

namespace {

constexpr Complex kI(0, 1);

ValidatedConfig test_config(PhysicalParams p, GridSpec g, RunConfig r) {
  // Unit tests sometimes need states outside the CLI-validated envelope
  // (e.g. zero detuning); assemble the config directly.
  return ValidatedConfig{p, g, r, derive(p, g)};
}

struct MeanSE {
  Real mean, se;
};

MeanSE mean_se(const std::vector<Real>& xs) {
  const Real n = static_cast<Real>(xs.size());
  Real mean = 0;
  for (Real x : xs) mean += x;
  mean /= n;
  Real var = 0;
  for (Real x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1);
  return {mean, std::sqrt(var / n)};
}

Real pp_molecule_number(const PPState& s, Real dx) {
  return (dx * (s.phi_m * s.psi_m).sum()).real();
}

Real pp_atom_number(const PPState& s, Real dx) {
  return (dx * (s.phi_a * s.psi_a).sum()).real();
}

}  // namespace

TEST_CASE("pp_init: coherent molecules, vacuum atoms") {
  const auto cfg = test_config(PhysicalParams{}, GridSpec{}, RunConfig{});
  const PPState s = pp_init(cfg);
  CHECK(s.t == 0.0);
  CHECK(!s.diverged);
  CHECK(s.psi_a.abs().maxCoeff() == 0.0);
  CHECK(s.phi_a.abs().maxCoeff() == 0.0);
  // Molecule number on the grid: the continuum integral n0 sigma sqrt(pi)
  // to 0.1%, which is 1.62e3 at the quoted three-figure rounding.
  const Real n_m = pp_molecule_number(s, cfg.derived.dx);
  CHECK(std::abs(n_m - 1.6218e3) / 1.6218e3 < 1e-3);
  CHECK(std::abs(n_m - 1.62e3) / 1.62e3 < 5e-3);
  // Fields are real and conjugate-partner symmetric at t=0.
  CHECK(s.psi_m.imag().abs().maxCoeff() == 0.0);
  CHECK((s.psi_m - s.phi_m).abs().maxCoeff() == 0.0);
  CHECK(pp_atom_number(s, cfg.derived.dx) == 0.0);
}

TEST_CASE("pp_init: empty cloud gives all-zero fields") {
  PhysicalParams p;
  p.n0 = 0.0;
  const auto cfg = test_config(p, GridSpec{}, RunConfig{});
  const PPState s = pp_init(cfg);
  CHECK(s.psi_m.abs().maxCoeff() == 0.0);
  CHECK(s.phi_m.abs().maxCoeff() == 0.0);
}

TEST_CASE("pp_drift: free parameters give zero drift") {
  PhysicalParams p;
  p.chi_1d = 0;
  p.delta = 0;
  const auto cfg = test_config(p, GridSpec{}, RunConfig{});
  PPState s = pp_init(cfg);
  Philox rng(1, 0);
  for (auto* f : {&s.psi_a, &s.phi_a, &s.psi_m, &s.phi_m})
    for (Eigen::Index i = 0; i < f->size(); ++i)
      (*f)[i] += rng.gaussian_complex();
  const PPDeriv d = pp_drift(s, p);
  CHECK(d.psi_a.abs().maxCoeff() == 0.0);
  CHECK(d.phi_a.abs().maxCoeff() == 0.0);
  CHECK(d.psi_m.abs().maxCoeff() == 0.0);
  CHECK(d.phi_m.abs().maxCoeff() == 0.0);
}

TEST_CASE("pp_drift: vacuum atoms over a condensate have zero drift") {
  // Every term in all four equations carries at least one atomic factor or a
  // U coupling, so with U=0 and no atoms nothing moves (dissociation starts
  // from noise, not drift).
  PhysicalParams p;  // chi and delta at defaults, U=0
  const auto cfg = test_config(p, GridSpec{}, RunConfig{});
  const PPState s = pp_init(cfg);
  const PPDeriv d = pp_drift(s, p);
  CHECK(d.psi_a.abs().maxCoeff() == 0.0);
  CHECK(d.phi_a.abs().maxCoeff() == 0.0);
  CHECK(d.psi_m.abs().maxCoeff() == 0.0);
  CHECK(d.phi_m.abs().maxCoeff() == 0.0);
}

TEST_CASE("pp_drift: mean-field term lags the field by pi/2") {
  PhysicalParams p;
  p.chi_1d = 0;
  p.delta = 0;
  p.u_aa = 2.0e-6;
  GridSpec g;
  g.num_points = 4;
  g.box_length = 4 * 1.27e-6;
  const auto cfg = test_config(p, g, RunConfig{});
  PPState s = pp_init(cfg);
  s.psi_a = Field1D::Constant(4, Complex(123.0, 0));
  s.phi_a = s.psi_a;
  const PPDeriv d = pp_drift(s, p);
  CHECK(std::arg(d.psi_a[0]) == doctest::Approx(-M_PI / 2).epsilon(1e-12));
  CHECK(std::arg(d.phi_a[0]) == doctest::Approx(+M_PI / 2).epsilon(1e-12));
}

TEST_CASE("pp_drift matches a handwritten evaluation on four grid points") {
  PhysicalParams p;
  p.chi_1d = 6.7e-3;
  p.delta = -258;
  p.u_aa = 1.3e-6;
  p.u_am = 0.7e-6;
  p.u_mm = 2.1e-6;
  const Eigen::Index m = 4;
  PPState s;
  Philox rng(42, 0);
  for (auto* f : {&s.psi_a, &s.phi_a, &s.psi_m, &s.phi_m}) {
    f->resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
      (*f)[i] = 50.0 * rng.gaussian_complex();
  }
  const PPDeriv d = pp_drift(s, p);

  for (Eigen::Index i = 0; i < m; ++i) {
    const Complex pa = s.psi_a[i], fa = s.phi_a[i];
    const Complex pm = s.psi_m[i], fm = s.phi_m[i];
    const Complex atom_shift = p.u_aa * fa * pa + p.u_am * fm * pm;
    const Complex mol_shift = p.u_am * fa * pa + p.u_mm * fm * pm;
    const Complex want_pa =
        -kI * (p.delta + atom_shift) * pa - kI * p.chi_1d * pm * fa;
    const Complex want_fa =
        kI * (p.delta + atom_shift) * fa + kI * p.chi_1d * fm * pa;
    const Complex want_pm = -kI * mol_shift * pm - kI * (p.chi_1d / 2) * pa * pa;
    const Complex want_fm = kI * mol_shift * fm + kI * (p.chi_1d / 2) * fa * fa;
    CHECK(std::abs(d.psi_a[i] - want_pa) < 1e-13 * std::abs(want_pa));
    CHECK(std::abs(d.phi_a[i] - want_fa) < 1e-13 * std::abs(want_fa));
    CHECK(std::abs(d.psi_m[i] - want_pm) < 1e-13 * std::abs(want_pm));
    CHECK(std::abs(d.phi_m[i] - want_fm) < 1e-13 * std::abs(want_fm));
  }
}

TEST_CASE("pp_noise: free parameters draw nothing") {
  PhysicalParams p;
  p.chi_1d = 0;
  PPState s;
  s.psi_a = s.phi_a = s.psi_m = s.phi_m = Field1D::Constant(8, Complex(5, 0));
  Philox rng(3, 0);
  const PPDeriv inc = pp_noise_increment(s, 1e-4, 1e-6, p, rng);
  CHECK(inc.psi_a.abs().maxCoeff() == 0.0);
  CHECK(inc.psi_m.abs().maxCoeff() == 0.0);
  // The generator was never advanced: a fresh twin produces the same draw.
  Philox twin(3, 0);
  CHECK(rng.next_u64() == twin.next_u64());
}

TEST_CASE("pp_noise: zero mean and the closed-form variance") {
  PhysicalParams p;  // chi-only noise at paper scale
  const Real dt = 1e-4, dx = 1.26953125e-6;
  PPState s;
  const Eigen::Index m = 2;
  s.psi_a = s.phi_a = Field1D::Zero(m);
  s.psi_m = Field1D::Constant(m, std::polar(4278.0, 0.45));
  s.phi_m = s.psi_m.conjugate();
  Philox rng(77, 0);

  const int n_draws = 100'000;
  std::vector<Real> re_a, im_a;
  Real sum_sq = 0;
  re_a.reserve(n_draws);
  im_a.reserve(n_draws);
  for (int d = 0; d < n_draws; ++d) {
    const PPDeriv inc = pp_noise_increment(s, dt, dx, p, rng);
    re_a.push_back(inc.psi_a[0].real());
    im_a.push_back(inc.psi_a[0].imag());
    sum_sq += std::norm(inc.psi_a[0]);
    // Molecular fields carry no noise in the chi-only system.
    CHECK(inc.psi_m.abs().maxCoeff() == 0.0);
    CHECK(inc.phi_m.abs().maxCoeff() == 0.0);
  }
  const auto re = mean_se(re_a);
  const auto im = mean_se(im_a);
  CHECK(std::abs(re.mean) < 3 * re.se);
  CHECK(std::abs(im.mean) < 3 * im.se);
  // E|increment|^2 = |chi Psi_m| dt^2 Var(zeta) = |chi Psi_m| dt / dx.
  const Real want = p.chi_1d * 4278.0 * dt / dx;
  CHECK(std::abs(sum_sq / n_draws - want) < 0.05 * want);
}

TEST_CASE("pp_step: free evolution conserves every mode occupation") {
  PhysicalParams p;
  p.chi_1d = 0;
  p.delta = 0;
  GridSpec g;
  g.dt = 1e-4;
  const auto cfg = test_config(p, g, RunConfig{});
  PPStepper stepper(cfg);
  PPState s = pp_init(cfg);
  Philox rng(9, 0);
  // Give the atoms structure so the check is not vacuous.
  const RealArray x = position_grid(g);
  for (Eigen::Index i = 0; i < g.num_points; ++i) {
    s.psi_a[i] = 40.0 * std::exp(Complex(0, 3.1e4 * x[i]));
    s.phi_a[i] = 25.0 * std::exp(Complex(0, -1.2e4 * x[i]));
  }
  auto& dft = stepper.dft();
  const RealArray occ_a0 = dft.to_momentum(s.psi_a, FieldSign::annihilation).abs2();
  const RealArray occ_m0 = dft.to_momentum(s.psi_m, FieldSign::annihilation).abs2();
  for (int i = 0; i < 100; ++i) stepper.step(s, rng);
  CHECK(s.t == doctest::Approx(100 * g.dt));
  CHECK(!s.diverged);
  const RealArray occ_a = dft.to_momentum(s.psi_a, FieldSign::annihilation).abs2();
  const RealArray occ_m = dft.to_momentum(s.psi_m, FieldSign::annihilation).abs2();
  CHECK((occ_a - occ_a0).abs().maxCoeff() < 1e-10 * occ_a0.maxCoeff());
  CHECK((occ_m - occ_m0).abs().maxCoeff() < 1e-10 * occ_m0.maxCoeff());
}

TEST_CASE("pp_step: single-mode decay matches a fine-step brute-force oracle") {
  // One grid point, so the kinetic phase is trivially absent and the system
  // is a four-variable SDE we can integrate independently.
  PhysicalParams p;
  p.delta = -5.0;
  GridSpec g;
  g.num_points = 1;
  g.box_length = 1.26953125e-6;
  g.dt = 1e-4;
  RunConfig r;
  const auto cfg = test_config(p, g, r);
  const Real dx = cfg.derived.dx;
  const Real t_end = 0.05;
  const int n_traj = 10'000;

  // Production stepper at dt.
  std::vector<Real> prod;
  prod.reserve(n_traj);
  {
    PPStepper stepper(cfg);
    const int n_steps = static_cast<int>(std::round(t_end / g.dt));
    for (int traj = 0; traj < n_traj; ++traj) {
      PPState s = pp_init(cfg);
      Philox rng(1001, static_cast<std::uint64_t>(traj));
      for (int i = 0; i < n_steps; ++i) stepper.step(s, rng);
      if (!s.diverged) prod.push_back(pp_molecule_number(s, dx));
    }
  }

  // Euler-Maruyama oracle at dt/10, written out long-hand.
  std::vector<Real> oracle;
  oracle.reserve(n_traj);
  {
    const Real fine_dt = g.dt / 10;
    const int n_steps = static_cast<int>(std::round(t_end / fine_dt));
    const Real noise_sd = 1.0 / std::sqrt(dx * fine_dt);
    const Complex m0 = std::sqrt(Complex(initial_density(p, g)[0], 0));
    for (int traj = 0; traj < n_traj; ++traj) {
      Philox rng(555'000'000, static_cast<std::uint64_t>(traj));
      Complex pa = 0, fa = 0, pm = m0, fm = m0;
      for (int i = 0; i < n_steps; ++i) {
        const Real z1 = noise_sd * rng.gaussian();
        const Real z5 = noise_sd * rng.gaussian();
        const Complex d_pa = -kI * p.delta * pa - kI * p.chi_1d * pm * fa +
                             std::sqrt(-kI * p.chi_1d * pm) * z1;
        const Complex d_fa = kI * p.delta * fa + kI * p.chi_1d * fm * pa +
                             std::sqrt(kI * p.chi_1d * fm) * z5;
        const Complex d_pm = -kI * (p.chi_1d / 2) * pa * pa;
        const Complex d_fm = kI * (p.chi_1d / 2) * fa * fa;
        pa += fine_dt * d_pa;
        fa += fine_dt * d_fa;
        pm += fine_dt * d_pm;
        fm += fine_dt * d_fm;
      }
      oracle.push_back((dx * fm * pm).real());
    }
  }

  REQUIRE(prod.size() > 0.99 * n_traj);
  const auto a = mean_se(prod);
  const auto b = mean_se(oracle);
  const Real n_m0 = cfg.derived.n_m0;
  // The run must actually deplete before the agreement check means much.
  CHECK(a.mean < 0.95 * n_m0);
  CHECK(std::abs(a.mean - b.mean) < 2 * std::hypot(a.se, b.se));
}

TEST_CASE("pp_step: ensemble total number is conserved in the mean") {
  PhysicalParams p;  // paper couplings, U=0
  GridSpec g;
  g.num_points = 16;
  g.box_length = 16 * 1.26953125e-6;
  g.dt = 1e-4;
  const auto cfg = test_config(p, g, RunConfig{});
  PPStepper stepper(cfg);
  const Real dx = cfg.derived.dx;
  const int n_traj = 1000, n_steps = 200;

  std::vector<Real> totals;
  totals.reserve(n_traj);
  for (int traj = 0; traj < n_traj; ++traj) {
    PPState s = pp_init(cfg);
    Philox rng(2024, static_cast<std::uint64_t>(traj));
    for (int i = 0; i < n_steps; ++i) stepper.step(s, rng);
    if (!s.diverged)
      totals.push_back(2 * pp_molecule_number(s, dx) + pp_atom_number(s, dx));
  }
  REQUIRE(totals.size() == n_traj);
  const auto tot = mean_se(totals);
  CHECK(std::abs(tot.mean - cfg.derived.total_number) < 3 * tot.se);
}

TEST_CASE("pp_step: divergence flags the state and freezes it") {
  PhysicalParams p;
  GridSpec g;
  g.num_points = 16;
  g.box_length = 16 * 1.26953125e-6;
  g.dt = 1e-4;
  RunConfig r;
  r.divergence_threshold = 1e-6;  // far below the condensate density
  const auto cfg = test_config(p, g, r);
  PPStepper stepper(cfg);
  PPState s = pp_init(cfg);
  Philox rng(4, 0);
  stepper.step(s, rng);
  CHECK(s.diverged);
  const Real t_frozen = s.t;
  const Field1D snapshot = s.psi_m;
  stepper.step(s, rng);
  CHECK(s.t == t_frozen);
  CHECK((s.psi_m - snapshot).abs().maxCoeff() == 0.0);
}
