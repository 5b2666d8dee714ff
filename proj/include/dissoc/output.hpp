#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dissoc/config.hpp"
#include "dissoc/ensemble.hpp"

namespace dissoc {

// All writers are pure string producers so the formats can be regression
// tested byte for byte; write_file is the only filesystem touchpoint.
//
// Every emitted file starts with (or, for JSON, contains) the run's manifest
// hash, so files from different runs cannot be silently mixed.

std::string manifest_hex(std::uint64_t hash);

// The canonical time-series table.  Layout is frozen:
//   # manifest <16-hex>
//   t,Nm_frac,Nm_frac_se,Na_frac,Na_frac_se,g2_bb,g2_bb_se,g2_cl,g2_cl_se,
//     diverged_frac,conservation_residual
// with every number printed as %.12e.  Undefined entries print as nan.
std::string fractions_csv(const TimeSeries& series, std::uint64_t hash);

// Full resolved configuration (sorted keys), seed included, plus the code
// version string.
std::string manifest_json(const ValidatedConfig& cfg);

// Scalar health summary: sampling horizon, conservation, divergence,
// diffusion-time estimate, validity band, wall clock.  schema: 1.
std::string summary_json(const ValidatedConfig& cfg, const RunResult& result);

// One snapshot's position densities and momentum spectra, k sorted
// ascending (position rows already are).
std::string spectra_csv(const ValidatedConfig& cfg,
                        const TimeSeries::Snapshot& snap, std::uint64_t hash);

// Cross-method discrepancy table: one nm/na column pair per method pair, in
// combined-SE units.
std::string comparison_csv(const ComparisonReport& report,
                           const std::vector<std::string>& method_names,
                           const std::vector<std::uint64_t>& hashes);

// Gnuplot-ready figure analogues: whitespace-separated columns, `#` header
// naming each one.  Numbers files are indexed by interaction tier
// (fig_index_for), correlations go to fig3.dat, late-time molecular density
// profiles to fig5.dat.
int fig_index_for(const ValidatedConfig& cfg);
std::string numbers_fig(const std::vector<const TimeSeries*>& series,
                        const std::vector<std::string>& method_names,
                        const std::vector<std::uint64_t>& hashes);
std::string correlations_fig(const std::vector<const TimeSeries*>& series,
                             const std::vector<std::string>& method_names,
                             const std::vector<std::uint64_t>& hashes);
std::string density_fig(const ValidatedConfig& cfg,
                        const std::vector<const TimeSeries*>& series,
                        const std::vector<std::string>& method_names,
                        const std::vector<std::uint64_t>& hashes);

void write_file(const std::filesystem::path& path, const std::string& content);

// File name for a snapshot's spectra table, keyed by its time.
std::string spectra_filename(Real t);

}  // namespace dissoc
