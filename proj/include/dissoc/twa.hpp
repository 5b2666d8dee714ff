#pragma once

#include "dissoc/config.hpp"
#include "dissoc/rng.hpp"
#include "dissoc/spectral.hpp"
#include "dissoc/types.hpp"

namespace dissoc {

struct TWAState {
  Field1D psi_a, psi_m;
  Real t = 0;
};

// Wigner samples of a coherent molecular BEC and atomic vacuum: every grid
// point of both fields gets an independent complex Gaussian with
// <|eta|^2> = 1/(2 dx), half a quantum per mode.
TWAState twa_sample_initial(const ValidatedConfig& cfg, Philox& rng);

struct TWADeriv {
  Field1D psi_a, psi_m;
};

// Local (non-kinetic) truncated-Wigner drift:
//   d psi_a = -i (Delta + sum_i U_ai |psi_i|^2) psi_a - i chi psi_m psi_a^*
//   d psi_m = -i (sum_i U_mi |psi_i|^2) psi_m - i (chi/2) psi_a^2
TWADeriv twa_drift(const TWAState& s, const PhysicalParams& p);

// Strang splitting with the same fixed-iteration midpoint rule as the
// positive-P integrator, so the noise-free reduction of that method lands on
// this trajectory exactly.
class TWAStepper {
 public:
  explicit TWAStepper(const ValidatedConfig& cfg);

  void step(TWAState& s);

  Dft<Real>& dft() { return dft_; }
  Real dt() const { return dt_; }

 private:
  PhysicalParams p_;
  Real dt_;
  Dft<Real> dft_;
  Field1D kin_a_, kin_m_;
  static constexpr int kMidpointIters = 3;
};

}  // namespace dissoc
