#include "dissoc/hfb.hpp"

#include <cmath>
#include <utility>

namespace dissoc {

namespace {
constexpr Complex kI(0, 1);
}

HFBState hfb_init(const ValidatedConfig& cfg) {
  const Eigen::Index m = cfg.grid.num_points;
  HFBState s;
  s.phi_a = Field1D::Zero(m);
  s.phi_m = initial_density(cfg.params, cfg.grid).sqrt().cast<Complex>();
  s.g_a = Field2D::Zero(m, m);
  s.g_n = Field2D::Zero(m, m);
  return s;
}

HFBDeriv hfb_local_rhs(const HFBState& s, const PhysicalParams& p, Real dx) {
  const Field1D& pa = s.phi_a;
  const Field1D& pm = s.phi_m;
  const Eigen::ArrayXcd n =
      s.g_n.diagonal().real().array().cast<Complex>();  // noncondensed density
  const Eigen::ArrayXcd ad = s.g_a.diagonal().array();  // anomalous density

  HFBDeriv d;
  d.phi_a = -kI * p.u_aa * ((pa.abs2() + 2 * n.real()) * pa) -
            kI * p.u_aa * (ad * pa.conjugate()) -
            kI * p.chi_1d * (pm * pa.conjugate());
  d.phi_m = Complex(0, -2) * std::abs(p.delta) * pm -
            kI * p.u_mm * (pm.abs2() * pm) -
            kI * (p.chi_1d / 2) * (pa.square() + ad);

  const auto ga = s.g_a.array();
  const auto gn = s.g_n.array();

  // Row broadcasts scale by functions of x, column broadcasts by functions
  // of x'; the equal-point delta becomes delta_ij/dx on the diagonal.
  d.g_a = (Complex(0, -2) * p.u_aa *
               ((ga.colwise() * n) + (ga.rowwise() * n.transpose())) -
           kI * p.u_aa * ((gn.conjugate().colwise() * ad) +
                          (gn.rowwise() * ad.transpose())) -
           kI * p.chi_1d * ((gn.conjugate().colwise() * pm) +
                            (gn.rowwise() * pm.transpose())))
              .matrix();
  d.g_a.diagonal().array() +=
      (-kI / dx) * (p.u_aa * (pa.square() + ad) + p.chi_1d * pm);

  d.g_n =
      (Complex(0, -2) * p.u_aa *
           ((gn.colwise() * n) - (gn.rowwise() * n.transpose())) -
       kI * p.u_aa * ((ga.conjugate().colwise() * ad) -
                      (ga.rowwise() * ad.conjugate().transpose())) -
       kI * p.chi_1d * ((ga.conjugate().colwise() * pm) -
                        (ga.rowwise() * pm.conjugate().transpose())))
          .matrix();
  return d;
}

HFBNumbers hfb_numbers(const HFBState& s, Real dx) {
  HFBNumbers out;
  out.n_m = dx * s.phi_m.abs2().sum();
  out.n_a = dx * (s.phi_a.abs2().sum() + s.g_n.diagonal().real().sum());
  return out;
}

HFBStepper::HFBStepper(const ValidatedConfig& cfg)
    : p_(cfg.params),
      dt_(cfg.grid.dt),
      dx_(cfg.derived.dx),
      dft_(cfg.grid.num_points, cfg.grid.box_length) {
  kin_a_h_ = dft_.kinetic_factors(dt_ / 2, p_.m_a, p_.hbar);
  kin_m_h_ = dft_.kinetic_factors(dt_ / 2, p_.m_m, p_.hbar);
  kin_a_q_ = dft_.kinetic_factors(dt_ / 4, p_.m_a, p_.hbar);
  kin_m_q_ = dft_.kinetic_factors(dt_ / 4, p_.m_m, p_.hbar);
}

Real HFBStepper::substep(HFBState& s, Real h) {
  const bool full = (h == dt_);
  const Field1D& kin_a = full ? kin_a_h_ : kin_a_q_;
  const Field1D& kin_m = full ? kin_m_h_ : kin_m_q_;
  const Field1D kin_a_conj = kin_a.conjugate();

  auto kinetic_half = [&] {
    dft_.apply_kinetic_1d(s.phi_a, kin_a);
    if (!frozen_phi_m_) dft_.apply_kinetic_1d(s.phi_m, kin_m);
    dft_.apply_kinetic_2d(s.g_a, kin_a, kin_a);        // signs (+,+)
    dft_.apply_kinetic_2d(s.g_n, kin_a, kin_a_conj);   // signs (+,-)
  };

  kinetic_half();

  // Midpoint update of the local terms.  In the frozen reference the
  // molecular profile is pinned and only rotates at -2|Delta|; the rotation
  // is applied exactly, with the sources seeing the midpoint phase.
  HFBState bar = s;
  if (frozen_phi_m_)
    bar.phi_m = s.phi_m * std::exp(-kI * std::abs(p_.delta) * h);
  for (int it = 0; it < kMidpointIters; ++it) {
    const HFBDeriv rhs = hfb_local_rhs(bar, p_, dx_);
    bar.phi_a = s.phi_a + (h / 2) * rhs.phi_a;
    if (!frozen_phi_m_) bar.phi_m = s.phi_m + (h / 2) * rhs.phi_m;
    bar.g_a = s.g_a + (h / 2) * rhs.g_a;
    bar.g_n = s.g_n + (h / 2) * rhs.g_n;
  }
  s.phi_a = 2 * bar.phi_a - s.phi_a;
  if (frozen_phi_m_)
    s.phi_m *= std::exp(Complex(0, -2) * std::abs(p_.delta) * h);
  else
    s.phi_m = 2 * bar.phi_m - s.phi_m;
  s.g_a = 2 * bar.g_a - s.g_a;
  s.g_n = 2 * bar.g_n - s.g_n;

  kinetic_half();

  // Project back onto the structural manifold and report the drift.
  const Real scale = std::max(
      {Real(1), s.g_a.cwiseAbs().maxCoeff(), s.g_n.cwiseAbs().maxCoeff()});
  const Field2D ga_sym = ((s.g_a + s.g_a.transpose()) / 2).eval();
  const Field2D gn_herm = ((s.g_n + s.g_n.adjoint()) / 2).eval();
  const Real drift =
      std::max((s.g_a - ga_sym).cwiseAbs().maxCoeff(),
               (s.g_n - gn_herm).cwiseAbs().maxCoeff()) /
      scale;
  s.g_a = ga_sym;
  s.g_n = gn_herm;

  s.t += h;
  return drift;
}

HFBStepReport HFBStepper::step(HFBState& s) {
  HFBStepReport rep;
  if (s.failed) return rep;

  HFBState saved = s;
  rep.enforcement = substep(s, dt_);
  if (rep.enforcement > enforcement_budget_) {
    s = std::move(saved);
    rep.halved = true;
    const Real first = substep(s, dt_ / 2);
    const Real second = substep(s, dt_ / 2);
    rep.enforcement = std::max(first, second);
    if (rep.enforcement > enforcement_budget_) s.failed = true;
  }
  return rep;
}

}  // namespace dissoc
