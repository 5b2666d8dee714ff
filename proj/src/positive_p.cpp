#include "dissoc/positive_p.hpp"

#include <cmath>

namespace dissoc {

namespace {
constexpr Complex kI(0, 1);
}

PPState pp_init(const ValidatedConfig& cfg) {
  const Eigen::Index m = cfg.grid.num_points;
  PPState s;
  s.psi_a = Field1D::Zero(m);
  s.phi_a = Field1D::Zero(m);
  const RealArray root_density = initial_density(cfg.params, cfg.grid).sqrt();
  s.psi_m = root_density.cast<Complex>();
  s.phi_m = s.psi_m;
  return s;
}

PPDeriv pp_drift(const PPState& s, const PhysicalParams& p) {
  // Mean-field sums over species i: U_ai Phi_i Psi_i and U_mi Phi_i Psi_i.
  const Field1D atom_shift =
      p.u_aa * (s.phi_a * s.psi_a) + p.u_am * (s.phi_m * s.psi_m);
  const Field1D mol_shift =
      p.u_am * (s.phi_a * s.psi_a) + p.u_mm * (s.phi_m * s.psi_m);

  PPDeriv d;
  d.psi_a = -kI * ((p.delta + atom_shift) * s.psi_a) -
            kI * p.chi_1d * (s.psi_m * s.phi_a);
  d.phi_a = kI * ((p.delta + atom_shift) * s.phi_a) +
            kI * p.chi_1d * (s.phi_m * s.psi_a);
  d.psi_m = -kI * (mol_shift * s.psi_m) -
            kI * (p.chi_1d / 2) * s.psi_a.square();
  d.phi_m = kI * (mol_shift * s.phi_m) +
            kI * (p.chi_1d / 2) * s.phi_a.square();
  return d;
}

PPNoise pp_draw_noise(Eigen::Index num_points, Real dt, Real dx,
                      const PhysicalParams& p, Philox& rng) {
  PPNoise noise;
  const Real scale = std::sqrt(dt / dx);
  auto draw = [&](int j) {
    RealArray& w = noise.w[j - 1];
    w.resize(num_points);
    rng.fill_gaussian(w);
    w *= scale;
  };
  // Fixed draw order j = 1..10 keeps streams reproducible; channels with a
  // zero coupling never touch the generator.
  if (p.chi_1d != 0) draw(1);
  if (p.u_am != 0) { draw(2); draw(3); }
  if (p.u_aa != 0) draw(4);
  if (p.chi_1d != 0) draw(5);
  if (p.u_am != 0) { draw(6); draw(7); }
  if (p.u_aa != 0) draw(8);
  if (p.u_mm != 0) draw(9);
  if (p.u_mm != 0) draw(10);
  return noise;
}

PPDeriv pp_noise_apply(const PPState& s, const PPNoise& noise,
                       const PhysicalParams& p) {
  const Eigen::Index m = s.psi_a.size();
  PPDeriv d;
  d.psi_a = Field1D::Zero(m);
  d.phi_a = Field1D::Zero(m);
  d.psi_m = Field1D::Zero(m);
  d.phi_m = Field1D::Zero(m);
  auto w = [&](int j) -> const RealArray& { return noise.w[j - 1]; };
  auto active = [&](int j) { return noise.w[j - 1].size() == s.psi_a.size(); };

  if (active(1))
    d.psi_a += (-kI * p.chi_1d * s.psi_m).sqrt() * w(1);
  if (active(5))
    d.phi_a += (kI * p.chi_1d * s.phi_m).sqrt() * w(5);
  if (active(2)) {
    const Field1D amp_psi = (-kI * (p.u_am / 2) * (s.psi_a * s.psi_m)).sqrt();
    const Field1D amp_phi = (kI * (p.u_am / 2) * (s.phi_a * s.phi_m)).sqrt();
    d.psi_a += amp_psi * (w(2) + kI * w(3));
    d.psi_m += amp_psi * (w(2) - kI * w(3));
    d.phi_a += amp_phi * (w(6) + kI * w(7));
    d.phi_m += amp_phi * (w(6) - kI * w(7));
  }
  if (active(4)) {
    d.psi_a += (-kI * p.u_aa * s.psi_a.square()).sqrt() * w(4);
    d.phi_a += (kI * p.u_aa * s.phi_a.square()).sqrt() * w(8);
  }
  if (active(9)) {
    d.psi_m += (-kI * p.u_mm * s.psi_m.square()).sqrt() * w(9);
    d.phi_m += (kI * p.u_mm * s.phi_m.square()).sqrt() * w(10);
  }
  return d;
}

PPDeriv pp_noise_increment(const PPState& s, Real dt, Real dx,
                           const PhysicalParams& p, Philox& rng) {
  const PPNoise noise = pp_draw_noise(s.psi_a.size(), dt, dx, p, rng);
  return pp_noise_apply(s, noise, p);
}

PPStepper::PPStepper(const ValidatedConfig& cfg)
    : p_(cfg.params),
      dt_(cfg.grid.dt),
      dx_(cfg.derived.dx),
      divergence_cut_(cfg.run.divergence_threshold * cfg.params.n0),
      dft_(cfg.grid.num_points, cfg.grid.box_length) {
  kin_a_ = dft_.kinetic_factors(dt_ / 2, p_.m_a, p_.hbar);
  kin_m_ = dft_.kinetic_factors(dt_ / 2, p_.m_m, p_.hbar);
  kin_a_conj_ = kin_a_.conjugate();
  kin_m_conj_ = kin_m_.conjugate();
}

void PPStepper::check_divergence(PPState& s) const {
  const Real peak =
      std::max(std::max(s.psi_a.abs2().maxCoeff(), s.phi_a.abs2().maxCoeff()),
               std::max(s.psi_m.abs2().maxCoeff(), s.phi_m.abs2().maxCoeff()));
  if (!std::isfinite(peak) || peak > divergence_cut_) s.diverged = true;
}

void PPStepper::step(PPState& s, Philox& rng) {
  if (s.diverged) return;

  dft_.apply_kinetic_1d(s.psi_a, kin_a_);
  dft_.apply_kinetic_1d(s.phi_a, kin_a_conj_);
  dft_.apply_kinetic_1d(s.psi_m, kin_m_);
  dft_.apply_kinetic_1d(s.phi_m, kin_m_conj_);

  // Semi-implicit midpoint: solve ybar = y_n + (dt/2) A(ybar) + B(ybar) W/2
  // by fixed iteration, then y_{n+1} = 2 ybar - y_n.  The noise increments
  // are drawn once; their state-dependent amplitudes track the midpoint.
  PPNoise noise;
  if (noise_enabled_)
    noise = pp_draw_noise(s.psi_a.size(), dt_, dx_, p_, rng);

  PPState bar = s;
  for (int it = 0; it < kMidpointIters; ++it) {
    const PPDeriv drift = pp_drift(bar, p_);
    bar.psi_a = s.psi_a + (dt_ / 2) * drift.psi_a;
    bar.phi_a = s.phi_a + (dt_ / 2) * drift.phi_a;
    bar.psi_m = s.psi_m + (dt_ / 2) * drift.psi_m;
    bar.phi_m = s.phi_m + (dt_ / 2) * drift.phi_m;
    if (noise_enabled_) {
      const PPDeriv kick = pp_noise_apply(bar, noise, p_);
      bar.psi_a += kick.psi_a / 2;
      bar.phi_a += kick.phi_a / 2;
      bar.psi_m += kick.psi_m / 2;
      bar.phi_m += kick.phi_m / 2;
    }
  }
  s.psi_a = 2 * bar.psi_a - s.psi_a;
  s.phi_a = 2 * bar.phi_a - s.phi_a;
  s.psi_m = 2 * bar.psi_m - s.psi_m;
  s.phi_m = 2 * bar.phi_m - s.phi_m;

  dft_.apply_kinetic_1d(s.psi_a, kin_a_);
  dft_.apply_kinetic_1d(s.phi_a, kin_a_conj_);
  dft_.apply_kinetic_1d(s.psi_m, kin_m_);
  dft_.apply_kinetic_1d(s.phi_m, kin_m_conj_);

  s.t += dt_;
  check_divergence(s);
}

}  // namespace dissoc
