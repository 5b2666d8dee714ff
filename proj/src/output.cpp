#include "dissoc/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "dissoc/observables.hpp"

namespace dissoc {

namespace {

// Frozen table layout; the regression tests pin it byte for byte.
constexpr const char* kFractionsHeader =
    "t,Nm_frac,Nm_frac_se,Na_frac,Na_frac_se,g2_bb,g2_bb_se,g2_cl,g2_cl_se,"
    "diverged_frac,conservation_residual";

// Interaction strength separating the weak preset from the strong one used
// for the breakdown study (the weak value is ~2e-6 m/s, the strong one 32x
// that).
constexpr Real kWeakInteractionMax = 1e-5;

std::string fmt(Real v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string manifest_line(const std::vector<std::uint64_t>& hashes) {
  std::string line = "# manifest";
  for (std::uint64_t h : hashes) line += " " + manifest_hex(h);
  line += "\n";
  return line;
}

// FFT-ordered index permutation that walks k from most negative to most
// positive.
std::vector<Eigen::Index> ascending_k_order(Eigen::Index m) {
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index j = m / 2; j < m; ++j) order.push_back(j);
  for (Eigen::Index j = 0; j < m / 2; ++j) order.push_back(j);
  return order;
}

nlohmann::ordered_json finite_or_null(Real v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

std::string manifest_hex(std::uint64_t hash) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string fractions_csv(const TimeSeries& series, std::uint64_t hash) {
  std::string out = manifest_line({hash});
  out += kFractionsHeader;
  out += "\n";
  for (Eigen::Index i = 0; i < series.times.size(); ++i) {
    out += fmt(series.times[i]);
    for (Real v : {series.nm_frac[i], series.nm_frac_se[i], series.na_frac[i],
                   series.na_frac_se[i], series.g2_bb[i], series.g2_bb_se[i],
                   series.g2_cl[i], series.g2_cl_se[i],
                   series.diverged_frac[i], series.conservation_residual[i]}) {
      out += ",";
      out += fmt(v);
    }
    out += "\n";
  }
  return out;
}

std::string manifest_json(const ValidatedConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["version"] = kVersionString;
  j["manifest"] = manifest_hex(manifest_hash(cfg));
  nlohmann::ordered_json entries;
  for (const auto& [key, value] : resolved_entries(cfg)) entries[key] = value;
  j["config"] = std::move(entries);
  return j.dump(2) + "\n";
}

std::string summary_json(const ValidatedConfig& cfg, const RunResult& result) {
  const TimeSeries& s = result.series;
  const auto t_max = detect_tmax(s);
  const DiffusionEstimate diffusion =
      diffusion_time(s.times, s.na_peak, cfg.params.u_aa);

  Real worst_residual = std::numeric_limits<Real>::quiet_NaN();
  for (Eigen::Index i = 0; i < s.times.size(); ++i) {
    const Real r = std::abs(s.conservation_residual[i]);
    if (std::isfinite(r) && !(r <= worst_residual)) worst_residual = r;
  }

  const bool stochastic = cfg.run.method == Method::positive_p ||
                          cfg.run.method == Method::twa;
  const int batches =
      stochastic ? std::min<int>(cfg.run.n_batches,
                                 static_cast<int>(cfg.run.trajectories))
                 : 1;

  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["version"] = kVersionString;
  j["manifest"] = manifest_hex(manifest_hash(cfg));
  j["method"] = method_name(cfg.run.method);
  j["trajectories"] = cfg.run.trajectories;
  j["error_batches"] = batches;
  j["t_final"] = cfg.grid.t_final;
  j["t_max"] = t_max ? nlohmann::ordered_json(*t_max)
                     : nlohmann::ordered_json(nullptr);
  j["max_abs_conservation_residual"] = finite_or_null(worst_residual);
  j["final_conservation_residual"] =
      finite_or_null(s.conservation_residual[s.times.size() - 1]);
  j["final_diverged_frac"] = s.diverged_frac[s.times.size() - 1];
  j["total_divergence"] = result.total_divergence;
  j["diffusion_time"] = diffusion.finite ? nlohmann::ordered_json(diffusion.t)
                                         : nlohmann::ordered_json(nullptr);
  j["diffusion_note"] = diffusion.note;
  j["band_occupation"] = finite_or_null(result.band_occupation);
  j["twa_band_warning"] = result.twa_band_warning;
  j["wall_seconds"] = result.wall_seconds;
  return j.dump(2) + "\n";
}

std::string spectra_csv(const ValidatedConfig& cfg,
                        const TimeSeries::Snapshot& snap, std::uint64_t hash) {
  const RealArray x = position_grid(cfg.grid);
  const RealArray& k = cfg.derived.k_grid;
  const auto order = ascending_k_order(cfg.grid.num_points);
  const SpectraEstimate& sp = snap.spectra;

  std::string out = manifest_line({hash});
  out += "# t = " + fmt(snap.t) + "\n";
  out += "x,n_a_x,n_a_x_se,n_m_x,n_m_x_se,k,n_a_k,n_a_k_se,n_m_k,n_m_k_se\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Eigen::Index j = order[static_cast<std::size_t>(i)];
    out += fmt(x[i]);
    for (Real v : {sp.atom_x.mean[i], sp.atom_x.se[i], sp.mol_x.mean[i],
                   sp.mol_x.se[i]}) {
      out += ",";
      out += fmt(v);
    }
    out += ",";
    out += fmt(k[j]);
    for (Real v : {sp.atom_k.mean[j], sp.atom_k.se[j], sp.mol_k.mean[j],
                   sp.mol_k.se[j]}) {
      out += ",";
      out += fmt(v);
    }
    out += "\n";
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& report,
                           const std::vector<std::string>& method_names,
                           const std::vector<std::uint64_t>& hashes) {
  std::string out = manifest_line(hashes);
  out += "t";
  for (const auto& pair : report.pairs) {
    const std::string tag =
        method_names[pair.a] + "_vs_" + method_names[pair.b];
    out += "," + tag + "_nm_disc," + tag + "_na_disc";
  }
  out += "\n";
  for (Eigen::Index i = 0; i < report.times.size(); ++i) {
    out += fmt(report.times[i]);
    for (const auto& pair : report.pairs) {
      out += ",";
      out += fmt(pair.nm_disc[i]);
      out += ",";
      out += fmt(pair.na_disc[i]);
    }
    out += "\n";
  }
  return out;
}

int fig_index_for(const ValidatedConfig& cfg) {
  if (cfg.params.u_aa == 0) return 1;
  return cfg.params.u_aa <= kWeakInteractionMax ? 2 : 4;
}

std::string numbers_fig(const std::vector<const TimeSeries*>& series,
                        const std::vector<std::string>& method_names,
                        const std::vector<std::uint64_t>& hashes) {
  std::string out = manifest_line(hashes);
  out += "# t";
  for (const std::string& m : method_names)
    out += " " + m + "_Nm_frac " + m + "_Nm_frac_se " + m + "_Na_frac " + m +
           "_Na_frac_se";
  out += "\n";
  const RealArray& t = series.front()->times;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out += fmt(t[i]);
    for (const TimeSeries* s : series) {
      for (Real v :
           {s->nm_frac[i], s->nm_frac_se[i], s->na_frac[i], s->na_frac_se[i]}) {
        out += " ";
        out += fmt(v);
      }
    }
    out += "\n";
  }
  return out;
}

std::string correlations_fig(const std::vector<const TimeSeries*>& series,
                             const std::vector<std::string>& method_names,
                             const std::vector<std::uint64_t>& hashes) {
  std::string out = manifest_line(hashes);
  out += "# t";
  for (const std::string& m : method_names)
    out += " " + m + "_g2_bb " + m + "_g2_bb_se " + m + "_g2_cl " + m +
           "_g2_cl_se";
  out += "\n";
  const RealArray& t = series.front()->times;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out += fmt(t[i]);
    for (const TimeSeries* s : series) {
      for (Real v :
           {s->g2_bb[i], s->g2_bb_se[i], s->g2_cl[i], s->g2_cl_se[i]}) {
        out += " ";
        out += fmt(v);
      }
    }
    out += "\n";
  }
  return out;
}

std::string density_fig(const ValidatedConfig& cfg,
                        const std::vector<const TimeSeries*>& series,
                        const std::vector<std::string>& method_names,
                        const std::vector<std::uint64_t>& hashes) {
  const RealArray x = position_grid(cfg.grid);
  std::string out = manifest_line(hashes);
  out += "# final-time molecular density profiles\n";
  out += "# x";
  for (const std::string& m : method_names)
    out += " " + m + "_n_m " + m + "_n_m_se";
  out += "\n";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out += fmt(x[i]);
    for (const TimeSeries* s : series) {
      const SpectraEstimate& sp = s->snapshots.back().spectra;
      out += " ";
      out += fmt(sp.mol_x.mean[i]);
      out += " ";
      out += fmt(sp.mol_x.se[i]);
    }
    out += "\n";
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream stream(path, std::ios::binary);
  if (!stream) throw std::runtime_error("cannot open " + path.string());
  stream.write(content.data(),
               static_cast<std::streamsize>(content.size()));
  if (!stream) throw std::runtime_error("failed writing " + path.string());
}

std::string spectra_filename(Real t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "spectra_t%.6f.csv", t);
  return buf;
}

}  // namespace dissoc
