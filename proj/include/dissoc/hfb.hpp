#pragma once

#include "dissoc/config.hpp"
#include "dissoc/spectral.hpp"
#include "dissoc/types.hpp"

namespace dissoc {

// Pairing mean-field state: molecular (and formally atomic) mean fields plus
// the anomalous and normal first-order correlation matrices.  Rows index x,
// columns x'.
struct HFBState {
  Field1D phi_a, phi_m;
  Field2D g_a, g_n;  // G_A symmetric, G_N Hermitian
  Real t = 0;
  bool failed = false;  // a step exceeded the structural-error budget
};

struct HFBDeriv {
  Field1D phi_a, phi_m;
  Field2D g_a, g_n;
};

// Coherent molecules, no atomic mean field, no initial fluctuations.
HFBState hfb_init(const ValidatedConfig& cfg);

// All non-Laplacian right-hand sides, with the lattice delta written as
// delta_ij/dx.  The atomic mean field is carried as printed even though it
// stays zero from these initial conditions.
HFBDeriv hfb_local_rhs(const HFBState& s, const PhysicalParams& p, Real dx);

// (N_m, N_a): molecular mean-field number and noncondensed + condensed atoms.
struct HFBNumbers {
  Real n_m, n_a;
};
HFBNumbers hfb_numbers(const HFBState& s, Real dx);

struct HFBStepReport {
  Real enforcement = 0;  // relative structural drift removed this step
  bool halved = false;   // step was rejected once and re-run at dt/2
};

// Strang splitting: 1D kinetic half-step on the mean fields, 2D kinetic
// half-steps on g_a (signs +,+) and g_n (signs +,-), midpoint update of the
// local terms, kinetic half-steps again.  After each step the structural
// invariants (g_a symmetric, g_n Hermitian) are enforced by projection; if
// the drift removed exceeds the budget the step is halved and retried once,
// and beyond that the state is flagged failed.
class HFBStepper {
 public:
  explicit HFBStepper(const ValidatedConfig& cfg);

  HFBStepReport step(HFBState& s);

  // Undepleted reference: the molecular profile is pinned and only its free
  // -2|Delta| rotation advances; the fluctuation matrices evolve as usual.
  void set_frozen_phi_m(bool frozen) { frozen_phi_m_ = frozen; }
  void set_enforcement_budget(Real budget) { enforcement_budget_ = budget; }

  Dft<Real>& dft() { return dft_; }
  Real dt() const { return dt_; }

 private:
  // Advances by h and returns the relative structural drift enforced away.
  Real substep(HFBState& s, Real h);

  PhysicalParams p_;
  Real dt_, dx_;
  Real enforcement_budget_ = 1e-6;
  bool frozen_phi_m_ = false;
  Dft<Real> dft_;
  // Half-step propagators for the full and the halved step.
  Field1D kin_a_h_, kin_m_h_, kin_a_q_, kin_m_q_;
  static constexpr int kMidpointIters = 4;
};

}  // namespace dissoc
