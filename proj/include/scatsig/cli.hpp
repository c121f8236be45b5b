#pragma once

// Run configuration, argument parsing and subcommand execution for the
// scatsig command-line tool. Precedence: flags over config file over defaults.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scatsig/ffop.hpp"
#include "scatsig/scan.hpp"

namespace scatsig::cli {

enum class Command {
  FFOP_EIGS,
  TEV_SCAN,
  STEKLOFF_SCAN,
  PHASE_TRACK,
  ORACLE_TEV,
  ORACLE_STEKLOFF,
  ESTIMATE_SHIFT,
  INDEX_BOUND
};
// Names as stored in config files: "ffop-eigs", ..., "oracle-tev", "oracle-stekloff".
const char* command_name(Command c);
Command parse_command(const std::string& s);

// "lo:hi:step" or "rect reLo:reHi:imLo:imHi:n".
struct GridSpec {
  bool complex = false;
  double lo = 0.0, hi = 0.0, step = 0.0;
  scan::ComplexRect rect;
  std::vector<double> values() const;  // real grids only
};
GridSpec parse_grid(const std::string& s);

struct RunConfig {
  Command command = Command::FFOP_EIGS;
  double k = 1.0;
  forward::MediumSpec scene = forward::MediumSpec::single(1.0, 2.0);
  double B = 1.0;
  forward::SKind s_kind = forward::SKind::CURL_CURL;
  std::string quad = "16x32";
  QuadKind quad_kind = QuadKind::PRODUCT_GAUSS;
  ffop::OperatorKind kind = ffop::OperatorKind::ELECTRIC;
  cd lambda{-1.0, 0.0};  // impedance parameter for ffop-eigs
  double noise = 0.0;
  std::uint64_t seed = 42;  // noise realization
  bool alpha_auto = true;
  double alpha = 0.0;
  std::string grid;
  int z_count = 10;
  double z_radius = 0.25;
  Vec3 z_center = Vec3::Zero();
  std::uint64_t z_seed = 1;
  scan::Indicator indicator = scan::Indicator::G_NORM;
  double prominence = 1.0;
  double floor = 1e-6;
  double dip_threshold = 0.1;
  int l_max = 8;
  std::vector<double> delta_n{0.02, 0.01, 0.005};
  double r_c = 1.0;
  std::optional<double> k1;
  double n_lo = 1.5, n_hi = 8.0;
  std::string out = "out";

  // Every field, keys sorted; the form embedded in artifacts.
  nlohmann::json to_json() const;
};

// Defaults with the command-specific grid and quadrature.
RunConfig defaults_for(Command c);

// Overlays a JSON object. Unknown keys and type errors throw ConfigError
// naming the key. A string "scene" is inline JSON if it starts with '{' and a
// file path otherwise.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

// Parses JSON text; failures throw ConfigError naming the byte offset.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

// Cross-field checks; throws ConfigError.
void validate(const RunConfig& cfg);

// Thrown by parse_config for --help; carries the usage text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments exclude the program name. Throws ConfigError, IoError or HelpRequested.
RunConfig parse_config(const std::vector<std::string>& args);

struct RunReport {
  std::vector<std::string> files;  // artifacts written, in order
  std::vector<std::string> summary;  // human-readable result lines
};

// Executes the command and writes its artifacts under cfg.out.
RunReport run(const RunConfig& cfg);

// Full entry point: parse, run, print, map failures to exit codes
// (0 ok, 1 unexpected, 2 config, 3 numeric, 4 IO).
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scatsig::cli
