#include "dissoc/observables.hpp"

#include <cassert>
#include <cmath>

namespace dissoc {

namespace {

constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();

Eigen::Index wrap(Eigen::Index j, Eigen::Index m) {
  j %= m;
  return j < 0 ? j + m : j;
}

// Grid point sitting at x = 0 (the cloud centre) for the -L/2 + i*dx layout.
Eigen::Index centre_index(Eigen::Index m) { return m / 2; }

}  // namespace

ModePair select_modes(const DerivedQuantities& derived) {
  const Eigen::Index m = derived.k_grid.size();
  if (m < 2) return {0, 0};
  const Real dk = derived.k_grid[1];
  Eigen::Index j = static_cast<Eigen::Index>(std::lround(derived.k0 / dk));
  if (j < 0) j = 0;
  if (j > m / 2 - 1) j = m / 2 - 1;
  return {j, (m - j) % m};
}

NumberIntegrands numbers_pp(const PPState& s, Real dx) {
  const Complex na = dx * (s.phi_a * s.psi_a).sum();
  const Complex nm = dx * (s.phi_m * s.psi_m).sum();
  return {na.real(), nm.real(), na.imag(), nm.imag()};
}

NumberIntegrands numbers_twa(const TWAState& s, Real dx) {
  const Real half = static_cast<Real>(s.psi_a.size()) / 2;
  return {dx * s.psi_a.abs2().sum() - half, dx * s.psi_m.abs2().sum() - half,
          0, 0};
}

RealArray raw_nk_pp(const Field1D& psi, const Field1D& phi, Dft<Real>& dft) {
  const Field1D a = dft.to_momentum(psi, FieldSign::annihilation);
  const Field1D b = dft.to_momentum(phi, FieldSign::creation);
  return (b * a).real();
}

RealArray raw_nk_twa(const Field1D& f, Dft<Real>& dft) {
  return dft.to_momentum(f, FieldSign::annihilation).abs2();
}

Real ordering_shift_per_mode(Method m) {
  return m == Method::twa ? Real(0.5) : Real(0);
}

MomentSet MomentSet::zero(Method method, Eigen::Index num_points, bool spectra) {
  MomentSet ms;
  ms.method = method;
  if (spectra) {
    ms.n_atom_k = RealArray::Zero(num_points);
    ms.n_mol_k = RealArray::Zero(num_points);
    ms.n_atom_x = RealArray::Zero(num_points);
    ms.n_mol_x = RealArray::Zero(num_points);
  }
  return ms;
}

void MomentSet::merge(const MomentSet& other) {
  assert(method == other.method);
  assert(n_atom_k.size() == other.n_atom_k.size());
  count += other.count;
  atoms += other.atoms;
  molecules += other.molecules;
  atoms_imag += other.atoms_imag;
  molecules_imag += other.molecules_imag;
  na_peak += other.na_peak;
  bb4 += other.bb4;
  cl4 += other.cl4;
  n_plus += other.n_plus;
  n_minus += other.n_minus;
  if (with_spectra()) {
    n_atom_k += other.n_atom_k;
    n_mol_k += other.n_mol_k;
    n_atom_x += other.n_atom_x;
    n_mol_x += other.n_mol_x;
  }
}

void accumulate_pp(MomentSet& ms, const PPState& s, Dft<Real>& dft,
                   const ModePair& modes, int bin_halfwidth) {
  if (s.diverged) return;
  const Eigen::Index m = s.psi_a.size();
  const Real dx = dft.dx();

  const NumberIntegrands nums = numbers_pp(s, dx);
  ms.atoms += nums.atoms;
  ms.molecules += nums.molecules;
  ms.atoms_imag += nums.atoms_imag;
  ms.molecules_imag += nums.molecules_imag;
  const Eigen::Index c = centre_index(m);
  ms.na_peak += (s.phi_a[c] * s.psi_a[c]).real();

  const Field1D a = dft.to_momentum(s.psi_a, FieldSign::annihilation);
  const Field1D b = dft.to_momentum(s.phi_a, FieldSign::creation);

  Complex bb4 = 0, cl4 = 0, np = 0, nm = 0;
  const int h = bin_halfwidth;
  for (int o = -h; o <= h; ++o) {
    const Eigen::Index jp = wrap(modes.plus + o, m);
    const Eigen::Index jm = wrap(modes.minus - o, m);
    bb4 += b[jp] * b[jm] * a[jm] * a[jp];
    cl4 += b[jp] * b[jp] * a[jp] * a[jp];
    np += b[jp] * a[jp];
    nm += b[jm] * a[jm];
  }
  const Real bins = 2 * h + 1;
  ms.bb4 += bb4 / bins;
  ms.cl4 += cl4 / bins;
  ms.n_plus += np / bins;
  ms.n_minus += nm / bins;

  if (ms.with_spectra()) {
    ms.n_atom_k += (b * a).real();
    ms.n_mol_k += raw_nk_pp(s.psi_m, s.phi_m, dft);
    ms.n_atom_x += (s.phi_a * s.psi_a).real();
    ms.n_mol_x += (s.phi_m * s.psi_m).real();
  }
  ms.count += 1;
}

void accumulate_twa(MomentSet& ms, const TWAState& s, Dft<Real>& dft,
                    const ModePair& modes, int bin_halfwidth) {
  const Eigen::Index m = s.psi_a.size();
  const Real dx = dft.dx();

  const NumberIntegrands nums = numbers_twa(s, dx);
  ms.atoms += nums.atoms;
  ms.molecules += nums.molecules;
  const Eigen::Index c = centre_index(m);
  ms.na_peak += std::norm(s.psi_a[c]) - 1 / (2 * dx);

  const RealArray nk = raw_nk_twa(s.psi_a, dft);

  Real bb4 = 0, cl4 = 0, np = 0, nm = 0;
  const int h = bin_halfwidth;
  for (int o = -h; o <= h; ++o) {
    const Eigen::Index jp = wrap(modes.plus + o, m);
    const Eigen::Index jm = wrap(modes.minus - o, m);
    bb4 += nk[jp] * nk[jm];
    cl4 += nk[jp] * nk[jp];
    np += nk[jp];
    nm += nk[jm];
  }
  const Real bins = 2 * h + 1;
  ms.bb4 += bb4 / bins;
  ms.cl4 += cl4 / bins;
  ms.n_plus += np / bins;
  ms.n_minus += nm / bins;

  if (ms.with_spectra()) {
    ms.n_atom_k += nk;
    ms.n_mol_k += raw_nk_twa(s.psi_m, dft);
    ms.n_atom_x += s.psi_a.abs2();
    ms.n_mol_x += s.psi_m.abs2();
  }
  ms.count += 1;
}

void accumulate_hfb(MomentSet& ms, const HFBState& s, Dft<Real>& dft,
                    const ModePair& modes, int bin_halfwidth) {
  if (s.failed) return;
  const Eigen::Index m = s.phi_m.size();
  const Real dx = dft.dx();

  const HFBNumbers nums = hfb_numbers(s, dx);
  ms.atoms += nums.n_a;
  ms.molecules += nums.n_m;
  const Eigen::Index c = centre_index(m);
  ms.na_peak += std::norm(s.phi_a[c]) + s.g_n(c, c).real();

  const Field2D ga = dft.to_momentum_2d(s.g_a, FieldSign::annihilation,
                                        FieldSign::annihilation);
  const Field2D gn = dft.to_momentum_2d(s.g_n, FieldSign::annihilation,
                                        FieldSign::creation);

  Real bb4 = 0, cl4 = 0, np = 0, nm = 0;
  const int h = bin_halfwidth;
  for (int o = -h; o <= h; ++o) {
    const Eigen::Index jp = wrap(modes.plus + o, m);
    const Eigen::Index jm = wrap(modes.minus - o, m);
    const Real occ_p = gn(jp, jp).real();
    const Real occ_m = gn(jm, jm).real();
    bb4 += occ_p * occ_m + std::norm(ga(jp, jm)) + std::norm(gn(jp, jm));
    cl4 += 2 * occ_p * occ_p + std::norm(ga(jp, jp));
    np += occ_p;
    nm += occ_m;
  }
  const Real bins = 2 * h + 1;
  ms.bb4 += bb4 / bins;
  ms.cl4 += cl4 / bins;
  ms.n_plus += np / bins;
  ms.n_minus += nm / bins;

  if (ms.with_spectra()) {
    const Field1D pa = dft.to_momentum(s.phi_a, FieldSign::annihilation);
    const Field1D pm = dft.to_momentum(s.phi_m, FieldSign::annihilation);
    ms.n_atom_k += gn.diagonal().array().real() + pa.abs2();
    ms.n_mol_k += pm.abs2();
    ms.n_atom_x += s.phi_a.abs2() + s.g_n.diagonal().array().real();
    ms.n_mol_x += s.phi_m.abs2();
  }
  ms.count += 1;
}

namespace {

// Unweighted batch-means statistics over the usable (count > 0) batches.
MeanSE batch_stats(const std::vector<Real>& batch_means, Real pooled) {
  MeanSE out{pooled, 0};
  const std::size_t b = batch_means.size();
  if (b < 2) return out;
  Real mean = 0;
  for (Real v : batch_means) mean += v;
  mean /= static_cast<Real>(b);
  Real scatter = 0;
  for (Real v : batch_means) scatter += (v - mean) * (v - mean);
  out.se = std::sqrt(scatter / (static_cast<Real>(b) * static_cast<Real>(b - 1)));
  return out;
}

template <typename Get>
MeanSE estimate_with(const std::vector<MomentSet>& batches, Get get) {
  Real pooled_sum = 0;
  long pooled_count = 0;
  std::vector<Real> means;
  means.reserve(batches.size());
  for (const MomentSet& b : batches) {
    if (b.count == 0) continue;
    pooled_sum += get(b);
    pooled_count += b.count;
    means.push_back(get(b) / static_cast<Real>(b.count));
  }
  if (pooled_count == 0) return {kNaN, kNaN};
  return batch_stats(means, pooled_sum / static_cast<Real>(pooled_count));
}

}  // namespace

MeanSE scalar_estimate(const std::vector<MomentSet>& batches,
                       Real MomentSet::*field) {
  return estimate_with(batches, [field](const MomentSet& b) { return b.*field; });
}

SpectraEstimate spectra_estimate(const std::vector<MomentSet>& batches, Real dx) {
  SpectraEstimate out;
  long pooled_count = 0;
  Eigen::Index m = 0;
  Method method = Method::twa;
  for (const MomentSet& b : batches) {
    assert(b.with_spectra());
    pooled_count += b.count;
    m = b.n_atom_k.size();
    method = b.method;
  }
  const Real shift_k = ordering_shift_per_mode(method);
  const Real shift_x = shift_k / dx;

  auto reduce = [&](RealArray MomentSet::*field, Real shift) {
    ArrayEstimate est;
    est.mean = RealArray::Constant(m, kNaN);
    est.se = RealArray::Constant(m, kNaN);
    if (pooled_count == 0) return est;
    RealArray pooled = RealArray::Zero(m);
    std::vector<const RealArray*> used;
    std::vector<Real> counts;
    for (const MomentSet& b : batches) {
      if (b.count == 0) continue;
      pooled += b.*field;
      used.push_back(&(b.*field));
      counts.push_back(static_cast<Real>(b.count));
    }
    est.mean = pooled / static_cast<Real>(pooled_count) - shift;
    est.se = RealArray::Zero(m);
    if (used.size() >= 2) {
      RealArray mean_of_means = RealArray::Zero(m);
      for (std::size_t i = 0; i < used.size(); ++i)
        mean_of_means += *used[i] / counts[i];
      mean_of_means /= static_cast<Real>(used.size());
      RealArray scatter = RealArray::Zero(m);
      for (std::size_t i = 0; i < used.size(); ++i)
        scatter += (*used[i] / counts[i] - mean_of_means).square();
      est.se = (scatter / (static_cast<Real>(used.size()) *
                           static_cast<Real>(used.size() - 1)))
                   .sqrt();
    }
    return est;
  };

  out.atom_k = reduce(&MomentSet::n_atom_k, shift_k);
  out.mol_k = reduce(&MomentSet::n_mol_k, shift_k);
  out.atom_x = reduce(&MomentSet::n_atom_x, shift_x);
  out.mol_x = reduce(&MomentSet::n_mol_x, shift_x);
  return out;
}

namespace {

// Ordering-converted numerators and denominators from one set of raw means.
struct ConvertedMoments {
  Real num_bb, num_cl, np, nm;
};

ConvertedMoments convert(Method method, Complex bb4, Complex cl4, Complex np,
                         Complex nm) {
  ConvertedMoments c{bb4.real(), cl4.real(), np.real(), nm.real()};
  if (method == Method::twa) {
    // Symmetric -> normal ordering:
    //   <a+ a+ a a>       = <n n'>_W - n_W/2 - n'_W/2 + 1/4   (distinct)
    //   <a+ a+ a a>_same  = <n^2>_W - 2 n_W + 1/2
    // and the occupations lose half a quantum each.
    c.num_bb = bb4.real() - np.real() / 2 - nm.real() / 2 + Real(0.25);
    c.num_cl = cl4.real() - 2 * np.real() + Real(0.5);
    c.np = np.real() - Real(0.5);
    c.nm = nm.real() - Real(0.5);
  }
  return c;
}

}  // namespace

CorrelationResult correlation_estimate(const std::vector<MomentSet>& batches,
                                       Real signal_floor) {
  CorrelationResult out;
  out.g2_bb = {kNaN, kNaN};
  out.g2_cl = {kNaN, kNaN};
  out.n_plus = {kNaN, kNaN};
  out.n_minus = {kNaN, kNaN};
  if (batches.empty()) return out;
  const Method method = batches.front().method;

  Complex bb4_sum = 0, cl4_sum = 0, np_sum = 0, nm_sum = 0;
  long pooled_count = 0;
  std::vector<Real> bb_means, cl_means;
  for (const MomentSet& b : batches) {
    if (b.count == 0) continue;
    bb4_sum += b.bb4;
    cl4_sum += b.cl4;
    np_sum += b.n_plus;
    nm_sum += b.n_minus;
    pooled_count += b.count;
    const Real n = static_cast<Real>(b.count);
    const ConvertedMoments cb = convert(method, b.bb4 / n, b.cl4 / n,
                                        b.n_plus / n, b.n_minus / n);
    if (cb.np > 0 && cb.nm > 0) bb_means.push_back(cb.num_bb / (cb.np * cb.nm));
    if (cb.np > 0) cl_means.push_back(cb.num_cl / (cb.np * cb.np));
  }
  if (pooled_count == 0) return out;

  const Real n = static_cast<Real>(pooled_count);
  const ConvertedMoments cp =
      convert(method, bb4_sum / n, cl4_sum / n, np_sum / n, nm_sum / n);

  out.n_plus = estimate_with(batches, [method](const MomentSet& b) {
    return b.n_plus.real() -
           ordering_shift_per_mode(method) * static_cast<Real>(b.count);
  });
  out.n_minus = estimate_with(batches, [method](const MomentSet& b) {
    return b.n_minus.real() -
           ordering_shift_per_mode(method) * static_cast<Real>(b.count);
  });

  const bool stochastic = method != Method::hfb;
  bool np_ok, nm_ok;
  if (stochastic) {
    np_ok = cp.np > 0 && cp.np >= 3 * out.n_plus.se;
    nm_ok = cp.nm > 0 && cp.nm >= 3 * out.n_minus.se;
  } else {
    np_ok = cp.np > 1e-12;
    nm_ok = cp.nm > 1e-12;
  }
  out.suppressed = method == Method::twa &&
                   (cp.np < signal_floor || cp.nm < signal_floor);

  const std::size_t min_batches = stochastic ? 2 : 1;
  out.bb_defined =
      np_ok && nm_ok && bb_means.size() >= min_batches && !out.suppressed;
  out.cl_defined = np_ok && cl_means.size() >= min_batches && !out.suppressed;

  if (out.bb_defined)
    out.g2_bb = batch_stats(bb_means, cp.num_bb / (cp.np * cp.nm));
  if (out.cl_defined)
    out.g2_cl = batch_stats(cl_means, cp.num_cl / (cp.np * cp.np));
  return out;
}

CorrelationResult g2_hfb(const HFBState& s, Dft<Real>& dft,
                         const ModePair& modes, int bin_halfwidth) {
  std::vector<MomentSet> batch(1);
  batch[0] = MomentSet::zero(Method::hfb, s.phi_m.size(), false);
  accumulate_hfb(batch[0], s, dft, modes, bin_halfwidth);
  CorrelationResult out = correlation_estimate(batch, 0);
  out.t = s.t;
  return out;
}

DiffusionEstimate diffusion_time(const RealArray& times,
                                 const RealArray& peak_density, Real u_aa) {
  assert(times.size() == peak_density.size());
  if (u_aa <= 0)
    return {false, std::numeric_limits<Real>::infinity(),
            "no repulsive atom-atom interaction: diffusion time infinite"};
  for (Eigen::Index i = 0; i < times.size(); ++i) {
    if (peak_density[i] <= 0) continue;
    if (times[i] >= M_PI / (2 * u_aa * peak_density[i]))
      return {true, times[i], ""};
  }
  return {false, std::numeric_limits<Real>::infinity(),
          "no self-consistent crossing within the simulated window"};
}

Real band_mean_occupation(const RealArray& n_k, const RealArray& k_grid,
                          Real k0) {
  assert(n_k.size() == k_grid.size());
  Real sum = 0;
  long hits = 0;
  for (Eigen::Index j = 0; j < n_k.size(); ++j) {
    const Real a = std::abs(k_grid[j]);
    if (a >= Real(0.5) * k0 && a <= Real(1.5) * k0) {
      sum += n_k[j];
      ++hits;
    }
  }
  return hits == 0 ? kNaN : sum / static_cast<Real>(hits);
}

}  // namespace dissoc
