#pragma once

#include <array>

#include "dissoc/config.hpp"
#include "dissoc/rng.hpp"
#include "dissoc/spectral.hpp"
#include "dissoc/types.hpp"

namespace dissoc {

// Doubled phase space: Phi_i is the conjugate partner of Psi_i in the mean
// only; individual trajectories explore off-diagonal coherences.
struct PPState {
  Field1D psi_a, phi_a, psi_m, phi_m;
  Real t = 0;
  bool diverged = false;
};

struct PPDeriv {
  Field1D psi_a, phi_a, psi_m, phi_m;
};

// Coherent molecular BEC, vacuum atoms: no initial noise in this
// representation, so the state is deterministic.
PPState pp_init(const ValidatedConfig& cfg);

// Non-kinetic, non-noise right-hand sides: detuning, mean-field shifts
// U_ai/U_mi, and the chi down-conversion terms, with the opposite-signed
// conjugate-partner copies.
PPDeriv pp_drift(const PPState& s, const PhysicalParams& p);

// One step's worth of pre-drawn noise, w[j] = zeta_j * dt per grid point
// (zeta has lattice variance 1/(dx*dt), so w has variance dt/dx).  Inactive
// channels -- those whose coupling is zero -- stay empty and draw nothing,
// which keeps the stream layout a pure function of the configuration.
struct PPNoise {
  std::array<RealArray, 10> w;
};

PPNoise pp_draw_noise(Eigen::Index num_points, Real dt, Real dx,
                      const PhysicalParams& p, Philox& rng);

// Multiplies the state-dependent square-root amplitudes (principal branch)
// into the pre-drawn increments: the five channels are chi (zeta_1/zeta_5),
// U_am (zeta_2,3 / zeta_6,7), U_aa (zeta_4/zeta_8), U_mm (zeta_9/zeta_10).
PPDeriv pp_noise_apply(const PPState& s, const PPNoise& noise,
                       const PhysicalParams& p);

// Draw-and-apply in one call.
PPDeriv pp_noise_increment(const PPState& s, Real dt, Real dx,
                           const PhysicalParams& p, Philox& rng);

// Strang splitting: kinetic half-step, semi-implicit midpoint solve of the
// local drift+noise (fixed iteration count, noise amplitudes at the midpoint
// field), kinetic half-step.  Divergence flags the state instead of throwing.
class PPStepper {
 public:
  explicit PPStepper(const ValidatedConfig& cfg);

  void step(PPState& s, Philox& rng);

  // Forces the stochastic terms off (deterministic mean-field reduction).
  void set_noise_enabled(bool enabled) { noise_enabled_ = enabled; }

  Dft<Real>& dft() { return dft_; }
  Real dt() const { return dt_; }

 private:
  void check_divergence(PPState& s) const;

  PhysicalParams p_;
  Real dt_, dx_, divergence_cut_;
  bool noise_enabled_ = true;
  Dft<Real> dft_;
  Field1D kin_a_, kin_m_;  // half-step propagators for psi_a / psi_m
  Field1D kin_a_conj_, kin_m_conj_;
  static constexpr int kMidpointIters = 3;
};

}  // namespace dissoc
