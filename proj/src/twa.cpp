#include "dissoc/twa.hpp"

#include <cmath>

namespace dissoc {

namespace {
constexpr Complex kI(0, 1);
}

TWAState twa_sample_initial(const ValidatedConfig& cfg, Philox& rng) {
  const Eigen::Index m = cfg.grid.num_points;
  const Real eta_scale = 1.0 / std::sqrt(2.0 * cfg.derived.dx);
  TWAState s;
  s.psi_a.resize(m);
  s.psi_m.resize(m);
  const RealArray root_density = initial_density(cfg.params, cfg.grid).sqrt();
  for (Eigen::Index i = 0; i < m; ++i) {
    s.psi_a[i] = eta_scale * rng.gaussian_complex();
    s.psi_m[i] = root_density[i] + eta_scale * rng.gaussian_complex();
  }
  return s;
}

TWADeriv twa_drift(const TWAState& s, const PhysicalParams& p) {
  const RealArray n_a = s.psi_a.abs2();
  const RealArray n_m = s.psi_m.abs2();
  const RealArray atom_shift = p.delta + p.u_aa * n_a + p.u_am * n_m;
  const RealArray mol_shift = p.u_am * n_a + p.u_mm * n_m;

  TWADeriv d;
  d.psi_a = -kI * (atom_shift * s.psi_a) -
            kI * p.chi_1d * (s.psi_m * s.psi_a.conjugate());
  d.psi_m = -kI * (mol_shift * s.psi_m) - kI * (p.chi_1d / 2) * s.psi_a.square();
  return d;
}

TWAStepper::TWAStepper(const ValidatedConfig& cfg)
    : p_(cfg.params),
      dt_(cfg.grid.dt),
      dft_(cfg.grid.num_points, cfg.grid.box_length) {
  kin_a_ = dft_.kinetic_factors(dt_ / 2, p_.m_a, p_.hbar);
  kin_m_ = dft_.kinetic_factors(dt_ / 2, p_.m_m, p_.hbar);
}

void TWAStepper::step(TWAState& s) {
  dft_.apply_kinetic_1d(s.psi_a, kin_a_);
  dft_.apply_kinetic_1d(s.psi_m, kin_m_);

  TWAState bar = s;
  for (int it = 0; it < kMidpointIters; ++it) {
    const TWADeriv drift = twa_drift(bar, p_);
    bar.psi_a = s.psi_a + (dt_ / 2) * drift.psi_a;
    bar.psi_m = s.psi_m + (dt_ / 2) * drift.psi_m;
  }
  s.psi_a = 2 * bar.psi_a - s.psi_a;
  s.psi_m = 2 * bar.psi_m - s.psi_m;

  dft_.apply_kinetic_1d(s.psi_a, kin_a_);
  dft_.apply_kinetic_1d(s.psi_m, kin_m_);

  s.t += dt_;
}

}  // namespace dissoc
