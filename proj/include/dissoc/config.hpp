#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dissoc/types.hpp"

namespace dissoc {

enum class Method { positive_p, twa, hfb, undepleted };

const char* method_name(Method m);

struct PhysicalParams {
  Real m_a = 1.44e-25;    // atomic mass [kg]
  Real m_m = 2.88e-25;    // molecular mass [kg], 2*m_a
  Real chi_1d = 6.7e-3;   // atom-molecule coupling [m^(1/2) s^-1]
  Real delta = -258.0;    // detuning [s^-1], negative for dissociation
  Real u_aa = 0.0;        // atom-atom 1D interaction [m s^-1]
  Real u_am = 0.0;        // atom-molecule 1D interaction [m s^-1]
  Real u_mm = 0.0;        // molecule-molecule 1D interaction [m s^-1]
  Real n0 = 1.83e7;       // peak molecular linear density [m^-1]
  Real sigma = 5.0e-5;    // Gaussian width of the initial cloud [m]
  Real hbar = 1.054571817e-34;  // [J s]
};

struct GridSpec {
  Real box_length = 6.5e-4;      // [m]
  Eigen::Index num_points = 512; // power of two
  Real dt = 1.0e-5;              // [s]
  Real t_final = 0.2;            // [s]
  int save_stride = 200;         // steps between saved samples
};

struct RunConfig {
  Method method = Method::twa;
  int trajectories = 10'000;  // 1 for deterministic methods
  std::uint64_t master_seed = 1234;
  std::string output_dir = "out";
  Real divergence_threshold = 1e6;  // |field|^2 cutoff in units of n0
  int n_batches = 100;              // batch-means error estimation
  Real signal_floor = 0.5;          // particles/mode below which TWA g2 is suppressed
  int g2_bin_halfwidth = 0;         // optional +-n-bin average around k0
  std::vector<Real> snapshot_times; // times at which full spectra are kept
};

struct DerivedQuantities {
  Real dx = 0;            // [m]
  Real k0 = 0;            // resonant momentum [m^-1]
  Real n_m0 = 0;          // initial molecule number on the grid
  RealArray k_grid;       // FFT-ordered momenta [m^-1]
  Real total_number = 0;  // 2*n_m0
};

// Carries *all* violated constraints by name, not only the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct ValidatedConfig {
  PhysicalParams params;
  GridSpec grid;
  RunConfig run;
  DerivedQuantities derived;
};

// x_i = -L/2 + i*dx and the initial molecular density n0*exp(-x^2/sigma^2).
RealArray position_grid(const GridSpec& grid);
RealArray initial_density(const PhysicalParams& params, const GridSpec& grid);

DerivedQuantities derive(const PhysicalParams& params, const GridSpec& grid);

// Checks every invariant and throws a ValidationError naming all failures.
ValidatedConfig validate(const PhysicalParams& params, const GridSpec& grid,
                         const RunConfig& run);

// A parsed-but-not-yet-validated configuration.  `explicit_keys` remembers
// which fields the user actually set, so method-dependent defaults (e.g.
// trajectories = 1 for deterministic methods) only fill untouched fields.
struct ConfigSource {
  PhysicalParams params;
  GridSpec grid;
  RunConfig run;
  std::set<std::string> explicit_keys;
};

// Flat `key = value` text with '#' comments; unknown or malformed keys throw
// ValidationError with one diagnostic per offending line.
ConfigSource parse_config_text(const std::string& text);
ConfigSource parse_config_file(const std::string& path);

// One `--set key=value` override on top of a parsed source.
void apply_override(ConfigSource& src, const std::string& assignment);

// Fills method-dependent defaults and validates.
ValidatedConfig finalize(const ConfigSource& src);

// Canonical resolved key=value map (sorted keys, fixed number formatting):
// the hashing and manifest-serialization substrate.
std::map<std::string, std::string> resolved_entries(const ValidatedConfig& cfg);

// FNV-1a over the canonical entries (output_dir excluded, so relocating
// outputs does not change a run's identity).
std::uint64_t manifest_hash(const ValidatedConfig& cfg);

extern const char* const kVersionString;

}  // namespace dissoc
