#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "scatsig/cli.hpp"
#include "scatsig/quadrature.hpp"

namespace scatsig::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<Command, const char*>>& command_table() {
  static const std::vector<std::pair<Command, const char*>> t{
      {Command::FFOP_EIGS, "ffop-eigs"},         {Command::TEV_SCAN, "tev-scan"},
      {Command::STEKLOFF_SCAN, "stekloff-scan"}, {Command::PHASE_TRACK, "phase-track"},
      {Command::ORACLE_TEV, "oracle-tev"},       {Command::ORACLE_STEKLOFF, "oracle-stekloff"},
      {Command::ESTIMATE_SHIFT, "estimate-shift"}, {Command::INDEX_BOUND, "index-bound"}};
  return t;
}

double to_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": expected a number, got '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(what + ": expected a number, got '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double get_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: key '" + key + "' must be a number");
  return v.get<double>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: key '" + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t get_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config: key '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& v, const std::string& key) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError("config: key '" + key + "' must be a non-negative integer");
}

const char* s_kind_name(forward::SKind s) { return s == forward::SKind::CURL_CURL ? "curl_curl" : "identity"; }
const char* quad_kind_name(QuadKind q) { return q == QuadKind::PRODUCT_GAUSS ? "product_gauss" : "equal_area"; }
const char* indicator_name(scan::Indicator i) { return i == scan::Indicator::G_NORM ? "g_norm" : "herglotz"; }

using Setter = std::function<void(RunConfig&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m{
      {"command", [](RunConfig& c, const json& v, const std::string& k) { c.command = parse_command(get_string(v, k)); }},
      {"k", [](RunConfig& c, const json& v, const std::string& k) { c.k = get_number(v, k); }},
      {"scene",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_object()) {
           c.scene = forward::medium_from_json(v);
           return;
         }
         const std::string s = get_string(v, k);
         if (!s.empty() && s.front() == '{') {
           c.scene = forward::medium_from_json(parse_json_text(s, "scene"));
         } else {
           c.scene = forward::medium_from_json(parse_json_text(read_text(s), "scene file '" + s + "'"));
         }
       }},
      {"B", [](RunConfig& c, const json& v, const std::string& k) { c.B = get_number(v, k); }},
      {"s_kind",
       [](RunConfig& c, const json& v, const std::string& k) {
         const auto s = get_string(v, k);
         if (s == "curl_curl") c.s_kind = forward::SKind::CURL_CURL;
         else if (s == "identity") c.s_kind = forward::SKind::IDENTITY;
         else throw ConfigError("config: key 's_kind' must be curl_curl or identity");
       }},
      {"quad",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.quad = get_string(v, k);
         parse_quad_spec(c.quad);
       }},
      {"quad_kind",
       [](RunConfig& c, const json& v, const std::string& k) {
         const auto s = get_string(v, k);
         if (s == "product_gauss") c.quad_kind = QuadKind::PRODUCT_GAUSS;
         else if (s == "equal_area") c.quad_kind = QuadKind::EQUAL_AREA;
         else throw ConfigError("config: key 'quad_kind' must be product_gauss or equal_area");
       }},
      {"kind", [](RunConfig& c, const json& v, const std::string& k) { c.kind = ffop::parse_kind(get_string(v, k)); }},
      {"lambda", [](RunConfig& c, const json& v, const std::string& k) { c.lambda.real(get_number(v, k)); }},
      {"lambda_im", [](RunConfig& c, const json& v, const std::string& k) { c.lambda.imag(get_number(v, k)); }},
      {"noise", [](RunConfig& c, const json& v, const std::string& k) { c.noise = get_number(v, k); }},
      {"seed", [](RunConfig& c, const json& v, const std::string& k) { c.seed = get_seed(v, k); }},
      {"alpha",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_string()) {
           const std::string s = v.get<std::string>();
           if (s == "auto") {
             c.alpha_auto = true;
             c.alpha = 0.0;
             return;
           }
           c.alpha = to_number(s, "config: key 'alpha'");
         } else if (v.is_number()) {
           c.alpha = v.get<double>();
         } else {
           throw ConfigError("config: key '" + k + "' must be \"auto\" or a number");
         }
         c.alpha_auto = false;
       }},
      {"grid",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.grid = get_string(v, k);
         if (!c.grid.empty()) parse_grid(c.grid);
       }},
      {"z_count",
       [](RunConfig& c, const json& v, const std::string& k) { c.z_count = static_cast<int>(get_integer(v, k)); }},
      {"z_radius", [](RunConfig& c, const json& v, const std::string& k) { c.z_radius = get_number(v, k); }},
      {"z_center",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (!v.is_array() || v.size() != 3) throw ConfigError("config: key '" + k + "' must be an array of 3 numbers");
         for (int i = 0; i < 3; ++i) c.z_center(i) = get_number(v[static_cast<std::size_t>(i)], k);
       }},
      {"z_seed", [](RunConfig& c, const json& v, const std::string& k) { c.z_seed = get_seed(v, k); }},
      {"indicator",
       [](RunConfig& c, const json& v, const std::string& k) {
         const auto s = get_string(v, k);
         if (s == "g_norm") c.indicator = scan::Indicator::G_NORM;
         else if (s == "herglotz") c.indicator = scan::Indicator::HERGLOTZ;
         else throw ConfigError("config: key 'indicator' must be g_norm or herglotz");
       }},
      {"prominence", [](RunConfig& c, const json& v, const std::string& k) { c.prominence = get_number(v, k); }},
      {"floor", [](RunConfig& c, const json& v, const std::string& k) { c.floor = get_number(v, k); }},
      {"dip_threshold", [](RunConfig& c, const json& v, const std::string& k) { c.dip_threshold = get_number(v, k); }},
      {"l_max", [](RunConfig& c, const json& v, const std::string& k) { c.l_max = static_cast<int>(get_integer(v, k)); }},
      {"delta_n",
       [](RunConfig& c, const json& v, const std::string& k) {
         c.delta_n.clear();
         if (v.is_number()) {
           c.delta_n.push_back(v.get<double>());
           return;
         }
         if (!v.is_array()) throw ConfigError("config: key '" + k + "' must be a number or an array of numbers");
         for (const auto& x : v) c.delta_n.push_back(get_number(x, k));
       }},
      {"r_c", [](RunConfig& c, const json& v, const std::string& k) { c.r_c = get_number(v, k); }},
      {"k1",
       [](RunConfig& c, const json& v, const std::string& k) {
         if (v.is_null()) c.k1.reset();
         else c.k1 = get_number(v, k);
       }},
      {"n_lo", [](RunConfig& c, const json& v, const std::string& k) { c.n_lo = get_number(v, k); }},
      {"n_hi", [](RunConfig& c, const json& v, const std::string& k) { c.n_hi = get_number(v, k); }},
      {"out", [](RunConfig& c, const json& v, const std::string& k) { c.out = get_string(v, k); }},
  };
  return m;
}

bool needs_grid(Command c) {
  return c == Command::TEV_SCAN || c == Command::STEKLOFF_SCAN || c == Command::PHASE_TRACK ||
         c == Command::ORACLE_TEV;
}

}  // namespace

const char* command_name(Command c) {
  for (const auto& [cmd, name] : command_table())
    if (cmd == c) return name;
  return "unknown";
}

Command parse_command(const std::string& s) {
  for (const auto& [cmd, name] : command_table())
    if (s == name) return cmd;
  throw ConfigError("unknown command '" + s + "'");
}

std::vector<double> GridSpec::values() const {
  if (complex) throw ConfigError("grid: a real grid is required");
  return scan::linear_grid(lo, hi, step);
}

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  std::string s = text;
  const std::string prefix = "rect";
  if (s.rfind(prefix, 0) == 0) {
    s = s.substr(prefix.size());
    const auto first = s.find_first_not_of(' ');
    if (first == std::string::npos || first == 0) throw ConfigError("grid: expected 'rect reLo:reHi:imLo:imHi:n'");
    const auto parts = split(s.substr(first), ':');
    if (parts.size() != 5) throw ConfigError("grid: expected 'rect reLo:reHi:imLo:imHi:n', got '" + text + "'");
    g.complex = true;
    g.rect.re_lo = to_number(parts[0], "grid");
    g.rect.re_hi = to_number(parts[1], "grid");
    g.rect.im_lo = to_number(parts[2], "grid");
    g.rect.im_hi = to_number(parts[3], "grid");
    const double n = to_number(parts[4], "grid");
    if (n != std::floor(n) || n < 2 || n > 2000) throw ConfigError("grid: rectangle size must be an integer in [2, 2000]");
    g.rect.n = static_cast<int>(n);
    if (!(g.rect.re_hi > g.rect.re_lo) || !(g.rect.im_hi > g.rect.im_lo))
      throw ConfigError("grid: rectangle bounds must increase");
    return g;
  }
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ConfigError("grid: expected 'lo:hi:step', got '" + text + "'");
  g.lo = to_number(parts[0], "grid");
  g.hi = to_number(parts[1], "grid");
  g.step = to_number(parts[2], "grid");
  scan::linear_grid(g.lo, g.hi, g.step);
  return g;
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command_name(command);
  j["k"] = k;
  j["scene"] = forward::medium_to_json(scene);
  j["B"] = B;
  j["s_kind"] = s_kind_name(s_kind);
  j["quad"] = quad;
  j["quad_kind"] = quad_kind_name(quad_kind);
  j["kind"] = ffop::kind_name(kind);
  j["lambda"] = lambda.real();
  j["lambda_im"] = lambda.imag();
  j["noise"] = noise;
  j["seed"] = seed;
  j["alpha"] = alpha_auto ? json("auto") : json(alpha);
  j["grid"] = grid;
  j["z_count"] = z_count;
  j["z_radius"] = z_radius;
  j["z_center"] = {z_center(0), z_center(1), z_center(2)};
  j["z_seed"] = z_seed;
  j["indicator"] = indicator_name(indicator);
  j["prominence"] = prominence;
  j["floor"] = floor;
  j["dip_threshold"] = dip_threshold;
  j["l_max"] = l_max;
  j["delta_n"] = delta_n;
  j["r_c"] = r_c;
  j["k1"] = k1 ? json(*k1) : json(nullptr);
  j["n_lo"] = n_lo;
  j["n_hi"] = n_hi;
  j["out"] = out;
  return j;
}

RunConfig defaults_for(Command c) {
  RunConfig r;
  r.command = c;
  switch (c) {
    case Command::TEV_SCAN:
    case Command::PHASE_TRACK:
      r.scene = forward::MediumSpec::single(1.0, 4.0);
      r.quad = "10x20";
      r.grid = "0.5:4.0:0.02";
      break;
    case Command::ORACLE_TEV:
      r.scene = forward::MediumSpec::single(1.0, 4.0);
      r.grid = "0.5:4.0:0.01";
      break;
    case Command::INDEX_BOUND:
      r.scene = forward::MediumSpec::single(1.0, 4.0);
      break;
    case Command::STEKLOFF_SCAN:
      r.quad = "12x24";
      r.grid = "-8:2:0.05";
      break;
    default:
      break;
  }
  return r;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON at byte " + std::to_string(e.byte) + " (" + e.what() + ")");
  }
}

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object at top level");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(cfg, value, key);
  }
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  c.scene.validate();
  require(c.k > 0.0 && std::isfinite(c.k), "k must be positive");
  require(c.B > 0.0 && std::isfinite(c.B), "B must be positive");
  parse_quad_spec(c.quad);
  require(c.noise >= 0.0 && std::isfinite(c.noise), "noise must be non-negative");
  require(c.alpha_auto || (c.alpha > 0.0 && std::isfinite(c.alpha)), "alpha must be positive or auto");
  require(c.z_count >= 1 && c.z_count <= 10000, "z_count must be in [1, 10000]");
  require(c.z_radius >= 0.0, "z_radius must be non-negative");
  require(c.prominence >= 0.0, "prominence must be non-negative");
  require(c.floor >= 0.0 && c.floor < 1.0, "floor must be in [0, 1)");
  require(c.dip_threshold > 0.0, "dip_threshold must be positive");
  require(c.l_max >= 1 && c.l_max <= 60, "l_max must be in [1, 60]");
  require(!c.delta_n.empty(), "delta_n must not be empty");
  require(c.r_c > 0.0, "r_c must be positive");
  require(!c.k1 || *c.k1 > 0.0, "k1 must be positive");
  require(c.n_lo > 0.0 && c.n_hi > c.n_lo, "need 0 < n_lo < n_hi");
  require(!c.out.empty(), "out must not be empty");
  if (needs_grid(c.command)) {
    require(!c.grid.empty(), std::string(command_name(c.command)) + " needs a grid");
    const auto g = parse_grid(c.grid);
    if (c.command != Command::STEKLOFF_SCAN) {
      require(!g.complex, std::string(command_name(c.command)) + " needs a real grid");
      require(g.lo > 0.0, "wave number grid must be positive");
    }
  }
}

namespace {

enum class FlagType { NUM, INT, STR, NUMS };

struct FlagDef {
  const char* flag;
  const char* key;
  FlagType type;
  const char* help;
};

const std::vector<FlagDef>& flag_table() {
  static const std::vector<FlagDef> t{
      {"--k", "k", FlagType::NUM, "wave number (default 1)"},
      {"--scene", "scene", FlagType::STR, "medium JSON file, or inline JSON starting with '{'"},
      {"--B", "B", FlagType::NUM, "radius of the auxiliary ball B"},
      {"--quad", "quad", FlagType::STR, "sphere quadrature NtxNp, e.g. 16x32"},
      {"--quad-kind", "quad_kind", FlagType::STR, "product_gauss | equal_area"},
      {"--noise", "noise", FlagType::NUM, "multiplicative noise level eps"},
      {"--seed", "seed", FlagType::INT, "noise seed"},
      {"--alpha", "alpha", FlagType::STR, "auto | positive number"},
      {"--grid", "grid", FlagType::STR, "lo:hi:step | 'rect reLo:reHi:imLo:imHi:n' (use --grid=... for negatives)"},
      {"--out", "out", FlagType::STR, "output directory"},
      {"--kind", "kind", FlagType::STR, "ffop-eigs operator: electric | magnetic | impedance | modified"},
      {"--lambda", "lambda", FlagType::NUM, "impedance parameter (real part) for ffop-eigs"},
      {"--lambda-im", "lambda_im", FlagType::NUM, "impedance parameter (imaginary part)"},
      {"--s-kind", "s_kind", FlagType::STR, "curl_curl | identity"},
      {"--z-count", "z_count", FlagType::INT, "number of interior sampling points"},
      {"--z-radius", "z_radius", FlagType::NUM, "sampling ball radius"},
      {"--z-seed", "z_seed", FlagType::INT, "sampling seed"},
      {"--indicator", "indicator", FlagType::STR, "g_norm | herglotz"},
      {"--prominence", "prominence", FlagType::NUM, "peak threshold as a multiple of the median"},
      {"--floor", "floor", FlagType::NUM, "relative eigenvalue floor for phase tracking"},
      {"--dip-threshold", "dip_threshold", FlagType::NUM, "phase dip threshold"},
      {"--l-max", "l_max", FlagType::INT, "largest degree for oracles"},
      {"--delta-n", "delta_n", FlagType::NUMS, "index perturbations for estimate-shift"},
      {"--r-c", "r_c", FlagType::NUM, "radius of the perturbed core"},
      {"--k1", "k1", FlagType::NUM, "measured first transmission eigenvalue"},
      {"--n-lo", "n_lo", FlagType::NUM, "index-bound search interval, lower end"},
      {"--n-hi", "n_hi", FlagType::NUM, "index-bound search interval, upper end"},
  };
  return t;
}

}  // namespace

RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Far field operator eigenvalue signatures for spherically symmetric scatterers", "scatsig"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override it)");
  std::map<std::string, std::string> raw;
  std::map<std::string, std::vector<std::string>> raw_list;
  std::vector<std::pair<const FlagDef*, CLI::Option*>> opts;
  for (const auto& f : flag_table()) {
    CLI::Option* o = f.type == FlagType::NUMS ? app.add_option(f.flag, raw_list[f.key], f.help)
                                              : app.add_option(f.flag, raw[f.key], f.help);
    opts.emplace_back(&f, o);
  }
  std::map<std::string, Command> subs;
  std::string oracle_target;
  const std::map<Command, std::string> about{
      {Command::FFOP_EIGS, "eigenvalues of a discretized far field operator"},
      {Command::TEV_SCAN, "indicator scan over k for transmission eigenvalues"},
      {Command::STEKLOFF_SCAN, "indicator scan over lambda for Stekloff eigenvalues"},
      {Command::PHASE_TRACK, "magnetic operator eigenvalue phases over k"},
      {Command::ESTIMATE_SHIFT, "Stekloff eigenvalue shift under an index perturbation"},
      {Command::INDEX_BOUND, "refractive index from a measured first transmission eigenvalue"}};
  for (const auto& [cmd, name] : command_table()) {
    if (cmd == Command::ORACLE_TEV || cmd == Command::ORACLE_STEKLOFF) continue;
    app.add_subcommand(name, about.at(cmd))->fallthrough();
  }
  auto* oracle = app.add_subcommand("oracle", "analytic oracle: tev | stekloff")->fallthrough();
  oracle->add_option("target", oracle_target, "tev | stekloff")->required()->check(CLI::IsMember({"tev", "stekloff"}));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("arguments: ") + e.what());
  }

  json file;
  if (!config_path.empty()) {
    file = parse_json_text(read_text(config_path), "config file '" + config_path + "'");
    if (!file.is_object()) throw ConfigError("config file '" + config_path + "': expected a JSON object");
  }
  std::optional<Command> cmd;
  for (const auto* s : app.get_subcommands()) {
    if (s->get_name() == "oracle") cmd = oracle_target == "tev" ? Command::ORACLE_TEV : Command::ORACLE_STEKLOFF;
    else cmd = parse_command(s->get_name());
  }
  if (!cmd && file.contains("command")) cmd = parse_command(get_string(file["command"], "command"));
  RunConfig cfg = defaults_for(cmd.value_or(Command::FFOP_EIGS));
  if (!file.is_null()) apply_json(cfg, file);
  cfg.command = cmd.value_or(cfg.command);

  json flags = json::object();
  for (const auto& [def, opt] : opts) {
    if (opt->count() == 0) continue;
    const std::string what = std::string("flag ") + def->flag;
    switch (def->type) {
      case FlagType::NUM:
        flags[def->key] = to_number(raw[def->key], what);
        break;
      case FlagType::INT: {
        const double v = to_number(raw[def->key], what);
        if (v != std::floor(v) || v < 0 || v > 9.007199254740992e15)
          throw ConfigError(what + ": expected a non-negative integer");
        flags[def->key] = static_cast<std::uint64_t>(v);
        break;
      }
      case FlagType::STR:
        flags[def->key] = raw[def->key];
        break;
      case FlagType::NUMS: {
        json arr = json::array();
        for (const auto& s : raw_list[def->key])
          for (const auto& part : split(s, ',')) arr.push_back(to_number(part, what));
        flags[def->key] = arr;
        break;
      }
    }
  }
  apply_json(cfg, flags);
  validate(cfg);
  return cfg;
}

}  // namespace scatsig::cli
