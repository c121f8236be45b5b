// Acceptance run: one PASS/FAIL line per criterion. Criteria that have a CLI
// surface drive the scatsig binary and read its artifacts; the rest call the
// library directly. Exit status is the number of failed criteria (capped).

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "scatsig/csv.hpp"
#include "scatsig/oracles.hpp"
#include "scatsig/rng.hpp"
#include "scatsig/spectra.hpp"

using namespace scatsig;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3e", v);
  return b;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kN2 = R"({"layers":[{"r":1,"n_re":2}]})";
const char* kN4 = R"({"layers":[{"r":1,"n_re":4}]})";
const char* kN025 = R"({"layers":[{"r":1,"n_re":0.25}]})";
const char* kN1 = R"({"layers":[{"r":1,"n_re":1}]})";
const char* kAbs = R"({"layers":[{"r":1,"n_re":2,"n_im":2}]})";

class Cli {
 public:
  Cli(std::string exe, fs::path work) : exe_(std::move(exe)), work_(std::move(work)) {}

  // Runs a subcommand with its own output directory; records it for reruns.
  fs::path run(const std::string& name, const std::vector<std::string>& args) {
    const fs::path out = work_ / name;
    fs::remove_all(out);
    const int code = invoke(out, args);
    if (code != 0) throw std::runtime_error("scatsig " + name + " exited with status " + std::to_string(code));
    runs_.push_back({name, args, snapshot(out)});
    return out;
  }

  // Reruns every recorded command into the same directory and compares bytes.
  Outcome rerun_all() {
    std::size_t files = 0;
    for (const auto& r : runs_) {
      const fs::path out = work_ / r.name;
      fs::remove_all(out);
      if (invoke(out, r.args) != 0) return {false, r.name + " failed on rerun"};
      const auto again = snapshot(out);
      if (again.size() != r.files.size()) return {false, r.name + ": artifact set changed"};
      for (const auto& [file, bytes] : r.files) {
        const auto it = again.find(file);
        if (it == again.end() || it->second != bytes) return {false, r.name + "/" + file + " differs"};
        ++files;
      }
    }
    return {files > 0, std::to_string(runs_.size()) + " commands, " + std::to_string(files) + " artifacts identical"};
  }

 private:
  struct Record {
    std::string name;
    std::vector<std::string> args;
    std::map<std::string, std::string> files;
  };

  int invoke(const fs::path& out, const std::vector<std::string>& args) const {
    std::string cmd = quote(exe_);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " --out " + quote(out.string()) + " > " + quote(out.string() + ".log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
  }

  static std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) m[e.path().filename().string()] = slurp(e.path());
    return m;
  }

  std::string exe_;
  fs::path work_;
  std::vector<Record> runs_;
};

csv::Table table(const fs::path& p) { return csv::read_csv(p.string()); }

double col(const csv::Table& t, std::size_t row, const std::string& name) {
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == name) return csv::parse_double(t.rows[row][j]);
  throw std::runtime_error("missing column " + name);
}

double comment_value(const csv::Table& t, const std::string& key) {
  for (const auto& c : t.comments)
    if (c.rfind(key + ": ", 0) == 0) return csv::parse_double(c.substr(key.size() + 2));
  throw std::runtime_error("missing comment " + key);
}

std::vector<cd> eigenvalues(const csv::Table& t) {
  std::vector<cd> v;
  for (std::size_t i = 0; i < t.rows.size(); ++i) v.emplace_back(col(t, i, "re"), col(t, i, "im"));
  return v;
}

double nearest(const std::vector<double>& xs, double target) {
  double best = INFINITY;
  for (double x : xs) best = std::min(best, std::abs(x - target));
  return best;
}

std::vector<double> column(const csv::Table& t, const std::string& name) {
  std::vector<double> v;
  for (std::size_t i = 0; i < t.rows.size(); ++i) v.push_back(col(t, i, name));
  return v;
}

ffop::QuadPtr gauss(int nt) {
  return std::make_shared<const SphereQuadrature>(build_quadrature(QuadKind::PRODUCT_GAUSS, nt));
}

ffop::FarFieldMatrix electric(cd n, const ffop::QuadPtr& q) {
  ffop::Scene s;
  s.medium = forward::MediumSpec::single(1.0, n);
  return ffop::assemble(ffop::OperatorKind::ELECTRIC, s, 1.0, q);
}

TangentField unit_random(rng::Stream& s, const SphereQuadrature& q) {
  TangentField g(q.dim());
  for (int i = 0; i < q.dim(); ++i) g(i) = cd{s.normal(), s.normal()};
  return g / std::sqrt(ffop::inner_product(g, g, q).real());
}

// Criteria 1 and 2 share the ffop-eigs artifact layout.
Outcome circle_law(Cli& cli, const std::string& kind, double radius) {
  const auto out = cli.run("c_" + kind, {"ffop-eigs", "--kind", kind, "--scene", kN2, "--k", "1", "--quad", "16x32"});
  const auto t = table(out / "eigs.csv");
  const double norm = comment_value(t, "operator_norm");
  double worst = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (col(t, i, "abs") < 1e-6 * norm) continue;
    ++counted;
    worst = std::max(worst, col(t, i, "circle_residual"));
  }
  return {counted > 0 && worst <= 1e-3 * radius, std::to_string(counted) + " eigenvalues above floor, max residual " +
                                                       sci(worst) + " <= " + sci(1e-3 * radius)};
}

Outcome criterion3(Cli& cli) {
  const auto out = cli.run("c_absorbing", {"ffop-eigs", "--scene", kAbs, "--k", "1", "--quad", "16x32"});
  const auto t = table(out / "eigs.csv");
  const double norm = comment_value(t, "operator_norm");
  const auto v = eigenvalues(t);
  const double R = 2.0 * kPi;
  double top_worst = -INFINITY, out_worst = -INFINITY;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = std::abs(v[i] + R);
    if (i < 5) top_worst = std::max(top_worst, d);
    out_worst = std::max(out_worst, d - R);
  }
  const bool ok = v.size() >= 5 && top_worst < R - 1e-3 && out_worst <= 1e-6 * norm;
  return {ok, "top-5 max |l+2pi| = " + sci(top_worst) + " < " + sci(R - 1e-3) + "; max excess " + sci(out_worst)};
}

Outcome criterion4() {
  const auto q = gauss(16);
  const auto F = electric(2.0, q);
  const double nrm = ffop::operator_norm(F);
  rng::Stream s(404);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const auto g = unit_random(s, *q);
    const auto h = unit_random(s, *q);
    worst = std::max(worst, std::abs(spectra::energy_identity_residual(F, g, h)));
  }
  const double normal = spectra::normality_residual(F);
  return {worst <= 1e-6 * nrm * nrm && normal <= 1e-6,
          "identity residual " + sci(worst) + " <= " + sci(1e-6 * nrm * nrm) + "; normality " + sci(normal)};
}

Outcome criterion5() {
  const auto q = gauss(16);
  const auto F = electric(cd{2.0, 2.0}, q);
  const double nrm = ffop::operator_norm(F);
  const double m = spectra::lidski_positivity(F, 100, 505);
  return {m >= -1e-6 * nrm, "min Im((-ikA)g,g) = " + sci(m) + " >= " + sci(-1e-6 * nrm)};
}

Outcome criterion6() {
  const auto q = gauss(16);
  const auto F = electric(2.0, q);
  const auto ref = spectra::eig(F);
  bool ok = true;
  std::string detail;
  for (double eps : {0.01, 0.02}) {
    const auto pert = spectra::eig(ffop::add_noise(F, eps, 42));
    const double d = spectra::matched_displacement(ref.values, pert.values, 5, 1e-3 * ref.norm);
    ok = ok && d <= 5.0 * eps * ref.norm;
    detail += (detail.empty() ? "" : "; ") + std::string("eps ") + sci(eps) + ": " + sci(d) + " <= " +
              sci(5.0 * eps * ref.norm);
  }
  return {ok, detail};
}

Outcome criterion7(Cli& cli, double step, const std::string& python, const std::string& compare) {
  char grid[64];
  std::snprintf(grid, sizeof grid, "0.5:4.0:%g", step);
  const auto oracle = cli.run("c_tev_oracle", {"oracle", "tev", "--scene", kN4, "--grid", "0.5:4.0:0.01"});
  const auto roots = column(table(oracle / "tev_roots.csv"), "value");
  if (roots.empty()) return {false, "oracle found no roots"};
  const double k1 = *std::min_element(roots.begin(), roots.end());
  const auto sc = cli.run("c_tev_scan", {"tev-scan", "--scene", kN4, "--grid", grid, "--quad", "10x20"});
  const auto ph = cli.run("c_phase", {"phase-track", "--scene", kN4, "--grid", grid, "--quad", "10x20"});
  const double dp = nearest(column(table(sc / "tev_peaks.csv"), "k"), k1);
  const auto dips = table(ph / "phase_dips.csv");
  std::vector<double> plus;
  for (std::size_t i = 0; i < dips.rows.size(); ++i)
    if (dips.rows[i][1] == "plus" && col(dips, i, "value") <= 0.1) plus.push_back(col(dips, i, "k"));
  const double dd = nearest(plus, k1);
  bool script = true;
  std::string script_note;
  if (!compare.empty()) {
    const std::string cmd = quote(python) + " " + quote(compare) + " --roots " +
                            quote((oracle / "tev_roots.csv").string()) + " --peaks " +
                            quote((sc / "tev_peaks.csv").string()) + " --dips " +
                            quote((ph / "phase_dips.csv").string()) + " --tol 0.01 > /dev/null";
    script = std::system(cmd.c_str()) == 0;
    script_note = script ? "; comparison script agrees" : "; comparison script FAILED";
  }
  return {dp <= 0.01 && dd <= 0.01 && script, "step " + sci(step) + ", k1 = " + std::to_string(k1) +
                                                  ", peak distance " + sci(dp) + ", dip distance " + sci(dd) +
                                                  script_note};
}

Outcome criterion8(Cli& cli) {
  const auto a = cli.run("c_index_4", {"index-bound", "--scene", kN4});
  const auto b = cli.run("c_index_025", {"index-bound", "--scene", kN025, "--n-lo", "0.1", "--n-hi", "0.9"});
  const double e4 = std::abs(col(table(a / "index_bound.csv"), 0, "n_est") - 4.0);
  const double e025 = std::abs(col(table(b / "index_bound.csv"), 0, "n_est") - 0.25);
  return {e4 <= 1e-4 && e025 <= 1e-4, "|n_est - 4| = " + sci(e4) + ", |n_est - 0.25| = " + sci(e025)};
}

Outcome criterion9(Cli& cli) {
  // S on a quadrature: Phi diag(c) Phi^H W from the modal multipliers.
  const auto q = gauss(12);
  const int L = 8;
  ffop::ModalBasis basis(q, L);
  const int M = sphfun::mode_count(L);
  Eigen::MatrixXcd phi(q->dim(), 2 * M);
  phi.leftCols(M) = basis.U(L);
  phi.rightCols(M) = basis.V(L);
  bool mult_ok = true;
  for (double R : {0.5, 1.0, 2.0})
    for (int l = 1; l <= 50; ++l) {
      const auto c = oracles::s_modal_multiplier(l, R);
      mult_ok = mult_ok && c.c_U >= 0.0 && c.c_V >= 0.0;
    }
  Eigen::VectorXcd diag(2 * M);
  for (int l = 1; l <= L; ++l)
    for (int m = -l; m <= l; ++m) {
      const auto c = oracles::s_modal_multiplier(l, 1.0);
      diag(sphfun::mode_offset(l, m)) = c.c_U;
      diag(M + sphfun::mode_offset(l, m)) = c.c_V;
    }
  const Eigen::VectorXd w = q->frame_weights();
  const Eigen::MatrixXcd S = phi * diag.asDiagonal() * phi.adjoint() * w.asDiagonal();
  const Eigen::MatrixXcd WS = w.asDiagonal() * S;
  const double asym = (WS - WS.adjoint()).norm() / WS.norm();
  rng::Stream s(909);
  double min_form = INFINITY;
  for (int i = 0; i < 50; ++i) {
    const TangentField u = unit_random(s, *q);
    min_form = std::min(min_form, ffop::inner_product(S * u, u, *q).real());
  }

  const auto id = cli.run("c_stek_identity", {"oracle", "stekloff", "--scene", kN1, "--s-kind", "identity", "--k",
                                              "1", "--l-max", "8"});
  const auto t = table(id / "stekloff_eigs.csv");
  std::vector<cd> lam;
  for (std::size_t i = 0; i < t.rows.size(); ++i) lam.emplace_back(col(t, i, "value_re"), col(t, i, "value_im"));
  double pair_worst = 0.0;
  for (const cd& l : lam) {
    const cd image = -1.0 / l;
    double best = INFINITY;
    for (const cd& m : lam) best = std::min(best, std::abs(m - image) / std::max(1.0, std::abs(m)));
    pair_worst = std::max(pair_worst, best);
  }

  const auto cc = cli.run("c_stek_real", {"oracle", "stekloff", "--scene", kN2, "--k", "1", "--l-max", "12"});
  const auto tc = table(cc / "stekloff_eigs.csv");
  double imag_worst = 0.0;
  for (std::size_t i = 0; i < tc.rows.size(); ++i)
    imag_worst = std::max(imag_worst, std::abs(col(tc, i, "value_im")));

  const bool ok = mult_ok && asym <= 1e-12 && min_form >= -1e-12 && !lam.empty() && pair_worst <= 1e-8 &&
                  !tc.rows.empty() && imag_worst == 0.0;
  return {ok, "S asymmetry " + sci(asym) + ", min <Su,u> " + sci(min_form) + ", pairing residual " +
                  sci(pair_worst) + " over " + std::to_string(lam.size()) + " eigenvalues, max |Im| " +
                  sci(imag_worst)};
}

Outcome criterion10(Cli& cli) {
  const auto o = cli.run("c_stek_oracle", {"oracle", "stekloff", "--scene", kN2, "--B", "1", "--k", "1"});
  const auto t = table(o / "stekloff_eigs.csv");
  if (t.rows.size() < 2) return {false, "oracle returned fewer than two eigenvalues"};
  const double l1 = col(t, 0, "value_re"), l2 = col(t, 1, "value_re");
  const std::vector<std::string> base{"stekloff-scan", "--scene", kN2,     "--B",    "1",
                                      "--k",           "1",       "--quad", "10x20", "--grid=-8:2:0.05"};
  const auto clean = cli.run("c_stek_scan", base);
  auto noisy_args = base;
  for (const char* a : {"--noise", "0.01", "--seed", "3"}) noisy_args.emplace_back(a);
  const auto noisy = cli.run("c_stek_scan_noisy", noisy_args);
  const auto pc = column(table(clean / "stekloff_peaks.csv"), "lambda");
  const auto pn = column(table(noisy / "stekloff_peaks.csv"), "lambda");
  const double d1 = nearest(pc, l1), d2 = nearest(pc, l2);
  const double dn = std::min(nearest(pn, l1), nearest(pn, l2));
  return {d1 <= 0.05 + 1e-12 && d2 <= 0.05 + 1e-12 && dn <= 0.1,
          "oracle " + sci(l1) + ", " + sci(l2) + "; clean distances " + sci(d1) + ", " + sci(d2) +
              "; noisy best " + sci(dn)};
}

Outcome criterion11(Cli& cli) {
  const double re_lo = -4.3, re_hi = -1.1, im_lo = 0.0, im_hi = 0.8;
  const int n = 40;
  const auto o = cli.run("c_cstek_oracle", {"oracle", "stekloff", "--scene", kAbs, "--B", "1", "--k", "1"});
  const auto t = table(o / "stekloff_eigs.csv");
  std::vector<cd> roots;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const cd r{col(t, i, "value_re"), col(t, i, "value_im")};
    if (r.real() >= re_lo && r.real() <= re_hi && r.imag() >= im_lo && r.imag() <= im_hi) roots.push_back(r);
  }
  const auto sc = cli.run("c_cstek_scan", {"stekloff-scan", "--scene", kAbs, "--B", "1", "--k", "1", "--quad",
                                           "12x24", "--grid", "rect -4.3:-1.1:0:0.8:40"});
  const auto p = table(sc / "stekloff_peaks.csv");
  const double diag = std::hypot((re_hi - re_lo) / (n - 1), (im_hi - im_lo) / (n - 1));
  double worst = 0.0;
  for (const cd& r : roots) {
    double best = INFINITY;
    for (std::size_t i = 0; i < p.rows.size(); ++i)
      best = std::min(best, std::abs(cd{col(p, i, "lambda_re"), col(p, i, "lambda_im")} - r));
    worst = std::max(worst, best);
  }
  return {!roots.empty() && worst <= diag, std::to_string(roots.size()) + " oracle roots in the rectangle, worst distance " +
                                               sci(worst) + " <= diagonal " + sci(diag)};
}

Outcome criterion12(Cli& cli) {
  const auto o = cli.run("c_shift", {"estimate-shift", "--scene", kN2, "--B", "1", "--k", "1", "--r-c", "1",
                                     "--l-max", "4", "--delta-n", "0.02,0.01,0.005"});
  const auto t = table(o / "shift.csv");
  std::map<std::string, std::map<double, double>> err;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    err[t.rows[i][0] + " l=" + t.rows[i][1]][col(t, i, "delta_n")] = col(t, i, "error");
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& [mode, e] : err) {
    for (auto [a, b] : {std::pair{0.02, 0.01}, std::pair{0.01, 0.005}}) {
      const double ratio = e.at(a) / e.at(b);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  return {!err.empty() && lo >= 2.0 && hi <= 6.0, std::to_string(err.size()) + " modes, error ratios in [" +
                                                      sci(lo) + ", " + sci(hi) + "], required [2, 6]"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-13"};
  std::string exe, work = "acceptance_work", python = "python3", compare;
  bool full = false;
  std::vector<int> only;
  app.add_option("--scatsig", exe, "path to the scatsig binary")->required();
  app.add_option("--work", work, "scratch directory for CLI artifacts");
  app.add_option("--compare", compare, "path to compare_tev.py");
  app.add_option("--python", python, "python interpreter for the comparison script");
  app.add_flag("--full", full, "criterion 7 at step 0.005 instead of the 0.02 smoke grid");
  app.add_option("--only", only, "run only these criteria (13 reruns whatever ran)");
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work);
  Cli cli(exe, work);
  int failed = 0;
  auto report = [&](int id, const std::string& title, const std::function<Outcome()>& fn) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f s", secs);
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << " (" << o.detail
              << "; " << buf << ")" << std::endl;
  };

  report(1, "electric circle law", [&] { return circle_law(cli, "electric", 2.0 * kPi); });
  report(2, "magnetic circle law", [&] { return circle_law(cli, "magnetic", 2.0 * kPi); });
  report(3, "absorption moves eigenvalues inside", [&] { return criterion3(cli); });
  report(4, "energy identity and normality", [] { return criterion4(); });
  report(5, "Lidski positivity", [] { return criterion5(); });
  report(6, "noise stability of large eigenvalues", [] { return criterion6(); });
  report(7, "transmission eigenvalue cross-validation",
         [&] { return criterion7(cli, full ? 0.005 : 0.02, python, compare); });
  report(8, "index bound round trip", [&] { return criterion8(cli); });
  report(9, "Stekloff oracle properties", [&] { return criterion9(cli); });
  report(10, "real Stekloff detection", [&] { return criterion10(cli); });
  report(11, "complex Stekloff detection", [&] { return criterion11(cli); });
  report(12, "shift estimate order", [&] { return criterion12(cli); });
  report(13, "determinism of CLI artifacts", [&] { return cli.rerun_all(); });
  return std::min(failed, 100);
}
