#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include "scatsig/cli.hpp"
#include "scatsig/csv.hpp"
#include "scatsig/oracles.hpp"
#include "scatsig/spectra.hpp"

namespace scatsig::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return csv::format_double(v); }

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v;
  return ss.str();
}

std::string fmt(cd v) {
  std::ostringstream ss;
  ss.precision(10);
  ss << v.real() << (v.imag() < 0 ? " - " : " + ") << std::abs(v.imag()) << "i";
  return ss.str();
}

class Writer {
 public:
  explicit Writer(const RunConfig& cfg) : cfg_(cfg), config_(cfg.to_json()) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec || !fs::is_directory(cfg.out)) throw IoError("cannot create output directory '" + cfg.out + "'");
  }

  csv::Table table(std::vector<std::string> header) const {
    csv::Table t;
    t.comments.push_back("config: " + config_.dump());
    t.header = std::move(header);
    return t;
  }

  void csv(const csv::Table& t, const std::string& name, RunReport& rep) const {
    const std::string p = path(name);
    csv::export_csv(t, p);
    rep.files.push_back(p);
  }

  void json_file(json body, const std::string& name, RunReport& rep) const {
    body["config"] = config_;
    const std::string p = path(name);
    csv::write_file(p, body.dump(1) + "\n");
    rep.files.push_back(p);
  }

 private:
  std::string path(const std::string& name) const { return (fs::path(cfg_.out) / name).string(); }
  const RunConfig& cfg_;
  json config_;
};

ffop::QuadPtr make_quad(const RunConfig& cfg) {
  const auto [nt, np] = parse_quad_spec(cfg.quad);
  return std::make_shared<const SphereQuadrature>(build_quadrature(cfg.quad_kind, nt, np));
}

scan::ScanConfig scan_config(const RunConfig& cfg) {
  scan::ScanConfig s;
  s.tikhonov.auto_alpha = cfg.alpha_auto;
  s.tikhonov.alpha = cfg.alpha;
  s.tikhonov.noise = cfg.noise;
  s.zs.count = cfg.z_count;
  s.zs.radius = cfg.z_radius;
  s.zs.center = cfg.z_center;
  s.zs.seed = cfg.z_seed;
  s.eps = cfg.noise;
  s.noise_seed = cfg.seed;
  s.indicator = cfg.indicator;
  return s;
}

// Homogeneous real-index ball required by the transmission oracles.
std::pair<double, double> homogeneous_real(const RunConfig& cfg) {
  if (cfg.scene.layers.size() != 1 || cfg.scene.layers[0].n.imag() != 0.0)
    throw ConfigError(std::string(command_name(cfg.command)) + ": scene must be one layer with a real index");
  return {cfg.scene.layers[0].r, cfg.scene.layers[0].n.real()};
}

void write_scan(const Writer& w, const scan::ScanResult& r, const std::string& param, const std::string& stem,
                double prominence, RunReport& rep) {
  const std::size_t nz = r.z.size();
  std::vector<std::string> header{param, "indicator_mean"};
  for (std::size_t j = 0; j < nz; ++j) header.push_back("indicator_z" + std::to_string(j + 1));
  auto t = w.table(header);
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    std::vector<std::string> row{num(r.grid[i].real()), num(r.mean[i])};
    for (std::size_t j = 0; j < nz; ++j) row.push_back(r.valid(i) ? num(r.per_z[i][j]) : num(kNaN));
    t.rows.push_back(std::move(row));
    if (!r.valid(i)) t.comments.push_back("gap: " + param + " = " + num(r.grid[i].real()) + ": " + r.gaps[i]);
  }
  w.csv(t, stem + ".csv", rep);

  auto p = w.table({param, "indicator"});
  for (auto i : scan::find_peaks(r, prominence)) {
    p.rows.push_back({num(r.grid[i].real()), num(r.mean[i])});
    rep.summary.push_back("peak " + param + " = " + fmt(r.grid[i].real()) + "  indicator " + fmt(r.mean[i]));
  }
  if (p.rows.empty()) rep.summary.push_back("no peaks above the threshold");
  w.csv(p, stem.substr(0, stem.find('_')) + "_peaks.csv", rep);
}

RunReport ffop_eigs(const RunConfig& cfg) {
  Writer w(cfg);
  RunReport rep;
  using ffop::OperatorKind;
  ffop::Scene scene;
  if (cfg.kind != OperatorKind::IMPEDANCE) scene.medium = cfg.scene;
  if (cfg.kind == OperatorKind::IMPEDANCE || cfg.kind == OperatorKind::MODIFIED)
    scene.ball = forward::ImpedanceBall{cfg.B, cfg.lambda, cfg.s_kind};
  auto F = ffop::assemble(cfg.kind, scene, cfg.k, make_quad(cfg));
  if (cfg.noise > 0.0) F = ffop::add_noise(F, cfg.noise, cfg.seed);
  const auto es = spectra::eig(F);
  const bool circle = cfg.kind == OperatorKind::ELECTRIC || cfg.kind == OperatorKind::MAGNETIC;
  std::vector<double> res(static_cast<std::size_t>(es.values.size()), kNaN);
  if (circle) res = spectra::circle_residual(es.values, cfg.kind, cfg.k);

  auto t = w.table({"re", "im", "abs", "circle_residual"});
  t.comments.push_back("operator_norm: " + num(es.norm));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const cd v = es.values(i);
    const double r = res[static_cast<std::size_t>(i)];
    t.rows.push_back({num(v.real()), num(v.imag()), num(std::abs(v)), num(r)});
    if (circle && std::abs(v) >= 1e-6 * es.norm) worst = std::max(worst, r);
  }
  w.csv(t, "eigs.csv", rep);
  rep.summary.push_back(std::string(ffop::kind_name(cfg.kind)) + " operator: " + std::to_string(es.values.size()) +
                        " eigenvalues, norm " + fmt(es.norm));
  if (circle) rep.summary.push_back("max circle residual above 1e-6 ||A||: " + fmt(worst));
  return rep;
}

RunReport tev_scan(const RunConfig& cfg) {
  Writer w(cfg);
  RunReport rep;
  const auto r = scan::tev_scan(cfg.scene, parse_grid(cfg.grid).values(), make_quad(cfg), scan_config(cfg));
  write_scan(w, r, "k", "tev_scan", cfg.prominence, rep);
  return rep;
}

RunReport stekloff_scan(const RunConfig& cfg) {
  Writer w(cfg);
  RunReport rep;
  const auto g = parse_grid(cfg.grid);
  const auto quad = make_quad(cfg);
  if (!g.complex) {
    const auto r = scan::stekloff_scan(cfg.scene, cfg.B, cfg.k, g.values(), quad, scan_config(cfg), cfg.s_kind);
    write_scan(w, r, "lambda", "stekloff_scan", cfg.prominence, rep);
    return rep;
  }
  const auto r = scan::stekloff_scan(cfg.scene, cfg.B, cfg.k, g.rect, quad, scan_config(cfg), cfg.s_kind);
  const int n = g.rect.n;
  json body;
  body["re_axis"] = g.rect.re_axis();
  body["im_axis"] = g.rect.im_axis();
  json mat = json::array();
  json gaps = json::array();
  for (int a = 0; a < n; ++a) {
    json row = json::array();
    for (int b = 0; b < n; ++b) {
      const auto i = static_cast<std::size_t>(a * n + b);
      if (r.valid(i)) {
        row.push_back(std::log10(r.mean[i]));
      } else {
        row.push_back(nullptr);
        gaps.push_back({{"re", r.grid[i].real()}, {"im", r.grid[i].imag()}, {"reason", r.gaps[i]}});
      }
    }
    mat.push_back(row);
  }
  body["log10_indicator"] = mat;
  body["layout"] = "row-major; rows follow im_axis, columns follow re_axis";
  body["gaps"] = gaps;
  json zs = json::array();
  for (const auto& z : r.z) zs.push_back({z(0), z(1), z(2)});
  body["z"] = zs;
  w.json_file(body, "stekloff_scan.json", rep);

  auto p = w.table({"lambda_re", "lambda_im", "indicator"});
  for (auto i : scan::find_peaks(r, cfg.prominence)) {
    p.rows.push_back({num(r.grid[i].real()), num(r.grid[i].imag()), num(r.mean[i])});
    rep.summary.push_back("peak lambda = " + fmt(r.grid[i]) + "  indicator " + fmt(r.mean[i]));
  }
  if (p.rows.empty()) rep.summary.push_back("no peaks above the threshold");
  w.csv(p, "stekloff_peaks.csv", rep);
  return rep;
}

RunReport phase_track(const RunConfig& cfg) {
  Writer w(cfg);
  RunReport rep;
  const auto pt = spectra::phase_track(cfg.scene, parse_grid(cfg.grid).values(), make_quad(cfg), cfg.floor);
  auto t = w.table({"k", "norm", "count", "min_plus", "min_minus"});
  auto ph = w.table({"k", "j", "re", "im"});
  for (const auto& p : pt.points) {
    t.rows.push_back({num(p.k), num(p.norm), std::to_string(p.phases.size()), num(p.min_plus), num(p.min_minus)});
    for (std::size_t j = 0; j < p.phases.size(); ++j)
      ph.rows.push_back({num(p.k), std::to_string(j), num(p.phases[j].real()), num(p.phases[j].imag())});
  }
  w.csv(t, "phase_track.csv", rep);
  w.csv(ph, "phases.csv", rep);

  // Index above one drives phases towards -1, below one towards +1.
  bool above = true, below = true;
  for (const auto& l : cfg.scene.layers) {
    above = above && l.n.real() > 1.0;
    below = below && l.n.real() < 1.0;
  }
  auto d = w.table({"k", "branch", "value"});
  auto scan_branch = [&](const char* name, auto get) {
    const auto& P = pt.points;
    for (std::size_t i = 1; i + 1 < P.size(); ++i) {
      const double v = get(P[i]);
      if (v <= cfg.dip_threshold && v < get(P[i - 1]) && v <= get(P[i + 1])) {
        d.rows.push_back({num(P[i].k), name, num(v)});
        rep.summary.push_back(std::string("dip (") + name + ") at k = " + fmt(P[i].k) + ": " + fmt(v));
      }
    }
  };
  if (!below) scan_branch("plus", [](const spectra::PhasePoint& p) { return p.min_plus; });
  if (!above) scan_branch("minus", [](const spectra::PhasePoint& p) { return p.min_minus; });
  if (d.rows.empty()) rep.summary.push_back("no dips below the threshold");
  w.csv(d, "phase_dips.csv", rep);
  return rep;
}

RunReport oracle_tev(const RunConfig& cfg) {
  const auto [a, n] = homogeneous_real(cfg);
  const auto g = parse_grid(cfg.grid);
  if (g.complex) throw ConfigError("oracle tev: needs a real k range");
  Writer w(cfg);
  RunReport rep;
  const auto roots = oracles::tev_roots(a, n, cfg.l_max, g.lo, g.hi, g.step);
  auto t = w.table({"family", "l", "value", "residual"});
  for (const auto& r : roots) {
    const double res = oracles::tev_matching_sigma_min(a, n, r.l, r.family, r.k);
    t.rows.push_back({oracles::family_name(r.family), std::to_string(r.l), num(r.k), num(res)});
  }
  w.csv(t, "tev_roots.csv", rep);
  if (roots.empty()) rep.summary.push_back("no transmission eigenvalues in range");
  for (std::size_t i = 0; i < std::min<std::size_t>(roots.size(), 5); ++i)
    rep.summary.push_back(std::string("k = ") + fmt(roots[i].k) + "  " + oracles::family_name(roots[i].family) +
                          " l=" + std::to_string(roots[i].l));
  return rep;
}

RunReport oracle_stekloff(const RunConfig& cfg) {
  Writer w(cfg);
  RunReport rep;
  const auto modes = oracles::stekloff_eigs_ball(cfg.scene, cfg.B, cfg.k, cfg.l_max, cfg.s_kind);
  auto t = w.table({"family", "l", "value_re", "value_im", "residual"});
  for (const auto& m : modes)
    t.rows.push_back({oracles::family_name(m.family), std::to_string(m.l), num(m.lambda.real()),
                      num(m.lambda.imag()), num(std::abs(m.modal_residual(m.lambda)))});
  w.csv(t, "stekloff_eigs.csv", rep);
  for (std::size_t i = 0; i < std::min<std::size_t>(modes.size(), 5); ++i)
    rep.summary.push_back("lambda = " + fmt(modes[i].lambda) + "  " + oracles::family_name(modes[i].family) +
                          " l=" + std::to_string(modes[i].l));
  return rep;
}

// Adds delta to the index inside radius rc, splitting a layer if needed.
forward::MediumSpec perturb(const forward::MediumSpec& m, double rc, double delta) {
  forward::MediumSpec out;
  double inner = 0.0;
  for (const auto& l : m.layers) {
    if (l.r <= rc) {
      out.layers.push_back({l.r, l.n + delta});
    } else if (inner < rc) {
      out.layers.push_back({rc, l.n + delta});
      out.layers.push_back(l);
    } else {
      out.layers.push_back(l);
    }
    inner = l.r;
  }
  return out;
}

RunReport estimate_shift(const RunConfig& cfg) {
  if (cfg.r_c > cfg.scene.radius()) throw ConfigError("estimate-shift: r_c must not exceed the scatterer radius");
  Writer w(cfg);
  RunReport rep;
  const auto base = oracles::stekloff_eigs_ball(cfg.scene, cfg.B, cfg.k, cfg.l_max, cfg.s_kind);
  auto t = w.table({"family", "l", "delta_n", "lambda_re", "lambda_im", "exact_re", "exact_im", "predicted_re",
                    "predicted_im", "error"});
  for (double delta : cfg.delta_n) {
    const auto moved = oracles::stekloff_eigs_ball(perturb(cfg.scene, cfg.r_c, delta), cfg.B, cfg.k, cfg.l_max,
                                                   cfg.s_kind);
    for (const auto& m : base) {
      const oracles::StekloffMode* match = nullptr;
      for (const auto& c : moved)
        if (c.family == m.family && c.l == m.l) match = &c;
      if (!match) throw NumericError("estimate-shift: perturbed mode not found");
      const cd exact = m.lambda - match->lambda;
      const cd pred = oracles::shift_estimate(m, delta, cfg.r_c, cfg.k);
      t.rows.push_back({oracles::family_name(m.family), std::to_string(m.l), num(delta), num(m.lambda.real()),
                        num(m.lambda.imag()), num(exact.real()), num(exact.imag()), num(pred.real()),
                        num(pred.imag()), num(std::abs(exact - pred))});
    }
    if (!base.empty()) {
      const auto& m = base.front();
      const auto& row = t.rows[t.rows.size() - base.size()];
      rep.summary.push_back("delta_n = " + fmt(delta) + ": first mode shift " + row[5] + ", predicted " + row[7] +
                            ", error " + row[9] + " (" + oracles::family_name(m.family) + " l=" +
                            std::to_string(m.l) + ")");
    }
  }
  w.csv(t, "shift.csv", rep);
  return rep;
}

RunReport index_bound(const RunConfig& cfg) {
  const auto [a, n] = homogeneous_real(cfg);
  Writer w(cfg);
  RunReport rep;
  const double k1 = cfg.k1 ? *cfg.k1 : oracles::first_tev(a, n, cfg.l_max);
  const double est = oracles::index_bound_from_tev(k1, a, cfg.n_lo, cfg.n_hi, cfg.l_max);
  auto t = w.table({"k1", "a", "n_lo", "n_hi", "n_est"});
  t.rows.push_back({num(k1), num(a), num(cfg.n_lo), num(cfg.n_hi), num(est)});
  w.csv(t, "index_bound.csv", rep);
  rep.summary.push_back("k1 = " + fmt(k1) + " gives n = " + fmt(est));
  return rep;
}

}  // namespace

RunReport run(const RunConfig& cfg) {
  validate(cfg);
  switch (cfg.command) {
    case Command::FFOP_EIGS: return ffop_eigs(cfg);
    case Command::TEV_SCAN: return tev_scan(cfg);
    case Command::STEKLOFF_SCAN: return stekloff_scan(cfg);
    case Command::PHASE_TRACK: return phase_track(cfg);
    case Command::ORACLE_TEV: return oracle_tev(cfg);
    case Command::ORACLE_STEKLOFF: return oracle_stekloff(cfg);
    case Command::ESTIMATE_SHIFT: return estimate_shift(cfg);
    case Command::INDEX_BOUND: return index_bound(cfg);
  }
  throw ConfigError("unknown command");
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = parse_config(args);
    const RunReport rep = run(cfg);
    for (const auto& s : rep.summary) out << s << "\n";
    for (const auto& f : rep.files) out << "wrote " << f << "\n";
    return 0;
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scatsig::cli
