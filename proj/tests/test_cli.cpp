#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "helpers.hpp"
#include "scatsig/cli.hpp"
#include "scatsig/csv.hpp"

using namespace scatsig;
using namespace scatsig::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("scatsig_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

int run_args(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = main_entry(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("csv: number formatting and exact round trip") {
  CHECK(csv::format_double(0.1) == "1.0000000000000001e-01");
  CHECK(csv::parse_double("1.0000000000000001e-01") == 0.1);
  CHECK(csv::format_double(-0.0) == "-0.0000000000000000e+00");
  CHECK(csv::format_double(std::nan("")) == "nan");
  CHECK(std::isnan(csv::parse_double("nan")));
  CHECK(csv::parse_double("-inf") == -HUGE_VAL);
  CHECK_THROWS_AS(csv::parse_double("1.0x"), std::invalid_argument);
  CHECK_THROWS_AS(csv::parse_double(""), std::invalid_argument);

  rng::Stream s(17);
  csv::Table t;
  t.header = {"re", "im", "abs", "circle_residual"};
  std::vector<std::array<double, 4>> src;
  for (int i = 0; i < 1024; ++i) {
    std::array<double, 4> row{};
    for (auto& v : row) v = s.normal() * std::pow(10.0, 40.0 * s.uniform_pm1());
    src.push_back(row);
    t.rows.push_back({csv::format_double(row[0]), csv::format_double(row[1]), csv::format_double(row[2]),
                      csv::format_double(row[3])});
  }
  const auto back = csv::parse(csv::to_string(t));
  REQUIRE(back.rows.size() == 1024);
  for (std::size_t i = 0; i < 1024; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::bit_cast<std::uint64_t>(csv::parse_double(back.rows[i][j])) ==
            std::bit_cast<std::uint64_t>(src[i][j]));
}

TEST_CASE("csv: layout, quoting and errors") {
  csv::Table empty;
  empty.header = {"a", "b"};
  CHECK(csv::to_string(empty) == "a,b\n");

  csv::Table t;
  t.comments = {"config: {\"x\":1}"};
  t.header = {"name", "value"};
  t.rows = {{"plain", "1"}, {"with,comma", "say \"hi\""}, {"two\nlines", ""}};
  const std::string text = csv::to_string(t);
  CHECK(text.find('\r') == std::string::npos);
  CHECK(text.rfind("# config: {\"x\":1}\nname,value\n", 0) == 0);
  CHECK(text.find("\"with,comma\",\"say \"\"hi\"\"\"") != std::string::npos);
  const auto back = csv::parse(text);
  CHECK(back.comments == t.comments);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);

  csv::Table ragged;
  ragged.header = {"a", "b"};
  ragged.rows = {{"1"}};
  CHECK_THROWS_AS(csv::to_string(ragged), std::invalid_argument);
  CHECK_THROWS_AS(csv::parse("a,b\n\"open,1\n"), std::invalid_argument);

  const auto dir = scratch_dir("csv");
  spit(dir / "blocker", "x");
  try {
    csv::export_csv(empty, (dir / "blocker" / "t.csv").string());
    FAIL("expected an IO error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("blocker") != std::string::npos);
  }
  CHECK_THROWS_AS(csv::read_csv((dir / "absent.csv").string()), IoError);
}

TEST_CASE("grid specifications") {
  const auto g = parse_grid("0.5:4.0:0.02");
  CHECK(!g.complex);
  CHECK(g.values().size() == 176);
  const auto r = parse_grid("rect -4.3:-1.1:0:0.8:40");
  CHECK(r.complex);
  CHECK(r.rect.re_lo == -4.3);
  CHECK(r.rect.im_hi == 0.8);
  CHECK(r.rect.n == 40);
  CHECK_THROWS_AS(r.values(), ConfigError);
  for (const char* bad : {"1:2", "a:b:c", "2:1:0.1", "1:2:0", "rect 1:2:3:4", "rect 1:0:0:1:10", "rect 0:1:0:1:2.5",
                          "rect0:1:0:1:3"})
    CHECK_THROWS_AS(parse_grid(bad), ConfigError);
}

TEST_CASE("parse_config: defaults, precedence and strict keys") {
  const auto d = parse_config({});
  CHECK(d.k == 1.0);
  CHECK(d.command == Command::FFOP_EIGS);
  CHECK(d.quad == "16x32");

  const auto t = parse_config({"tev-scan"});
  CHECK(t.quad == "10x20");
  CHECK(t.grid == "0.5:4.0:0.02");
  CHECK(t.scene.layers[0].n == cd{4.0, 0.0});

  const auto dir = scratch_dir("config");
  spit(dir / "c.json", R"({"k": 2.5, "quad": "8x16", "noise": 0.01, "alpha": 1e-8, "command": "phase-track"})");
  const std::string path = (dir / "c.json").string();
  const auto f = parse_config({"--config", path});
  CHECK(f.k == 2.5);
  CHECK(f.quad == "8x16");
  CHECK(f.command == Command::PHASE_TRACK);
  CHECK(!f.alpha_auto);
  CHECK(f.alpha == 1e-8);
  CHECK(f.grid == "0.5:4.0:0.02");

  const auto o = parse_config({"ffop-eigs", "--config", path, "--k", "3", "--alpha", "auto"});
  CHECK(o.k == 3.0);
  CHECK(o.alpha_auto);
  CHECK(o.command == Command::FFOP_EIGS);
  CHECK(o.noise == 0.01);

  const auto s = parse_config({"oracle", "stekloff", "--delta-n", "0.1,0.05", "--grid=-3:-1:0.5"});
  CHECK(s.command == Command::ORACLE_STEKLOFF);
  CHECK(s.delta_n == std::vector<double>{0.1, 0.05});

  // The offending brace is byte 21, counting from 1.
  spit(dir / "bad.json", "{\"k\": 1.0,\n \"quad\": }");
  try {
    parse_config({"--config", (dir / "bad.json").string()});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("at byte 21") != std::string::npos);
  }
  spit(dir / "unknown.json", R"({"k": 1.0, "wavenumber": 2})");
  try {
    parse_config({"--config", (dir / "unknown.json").string()});
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'wavenumber'") != std::string::npos);
  }
  spit(dir / "typed.json", R"({"z_count": "ten"})");
  CHECK_THROWS_WITH_AS(parse_config({"--config", (dir / "typed.json").string()}),
                       doctest::Contains("z_count"), ConfigError);

  CHECK_THROWS_AS(parse_config({"--k", "-1"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"--k", "one"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"--seed", "1.5"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"oracle"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"oracle", "mie"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"tev-scan", "--grid", "rect 1:2:0:1:5"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"--quad", "16x"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"--config", (dir / "absent.json").string()}), IoError);
  CHECK_THROWS_AS(parse_config({"--help"}), HelpRequested);
}

TEST_CASE("resolved config round-trips through JSON") {
  auto c = parse_config({"stekloff-scan", "--grid", "rect -4:-1:0:1:7", "--noise", "0.02", "--seed", "9", "--scene",
                         R"({"layers":[{"r":0.5,"n_re":3},{"r":0.9,"n_re":2,"n_im":0.5}]})", "--k1", "2.0"});
  c.z_center = Vec3(0.1, -0.2, 0.05);
  RunConfig back = defaults_for(Command::FFOP_EIGS);
  apply_json(back, c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.to_json().dump() == c.to_json().dump());
}

TEST_CASE("run: zero scattering, artifacts and byte-identical reruns") {
  const auto dir = scratch_dir("run");
  const std::string out = (dir / "a").string();
  REQUIRE(run_args({"ffop-eigs", "--quad", "6x12", "--scene", R"({"layers":[{"r":1,"n_re":1}]})", "--out", out}) == 0);
  const auto t = csv::read_csv(out + "/eigs.csv");
  REQUIRE(t.rows.size() == 144);
  for (const auto& row : t.rows) {
    CHECK(csv::parse_double(row[0]) == 0.0);
    CHECK(csv::parse_double(row[1]) == 0.0);
  }
  REQUIRE(!t.comments.empty());
  CHECK(t.comments[0].rfind("config: {", 0) == 0);
  const auto embedded = nlohmann::json::parse(t.comments[0].substr(8));
  CHECK(embedded["command"] == "ffop-eigs");
  CHECK(embedded["quad"] == "6x12");

  const std::vector<std::string> scan_args{"stekloff-scan", "--quad", "8x16", "--grid=-2:-1:0.1", "--noise",
                                           "0.01", "--z-count", "3", "--out", (dir / "s").string()};
  REQUIRE(run_args(scan_args) == 0);
  const std::string first = slurp(dir / "s" / "stekloff_scan.csv");
  REQUIRE(run_args(scan_args) == 0);
  CHECK(slurp(dir / "s" / "stekloff_scan.csv") == first);

  const std::vector<std::string> rect_args{"stekloff-scan", "--quad", "8x16", "--grid", "rect -3:-1:0:0.5:4",
                                           "--z-count", "2", "--out", (dir / "r").string()};
  REQUIRE(run_args(rect_args) == 0);
  const std::string js = slurp(dir / "r" / "stekloff_scan.json");
  const auto body = nlohmann::json::parse(js);
  CHECK(body["log10_indicator"].size() == 4);
  CHECK(body["re_axis"].size() == 4);
  CHECK(body["config"]["grid"] == "rect -3:-1:0:0.5:4");
  REQUIRE(run_args(rect_args) == 0);
  CHECK(slurp(dir / "r" / "stekloff_scan.json") == js);
}

TEST_CASE("run: exit codes per failure class") {
  const auto dir = scratch_dir("codes");
  std::string err;
  CHECK(run_args({"--wat"}, &err) == 2);
  CHECK(err.find("config error") != std::string::npos);
  CHECK(run_args({"index-bound", "--n-lo", "5", "--n-hi", "8", "--out", (dir / "n").string()}, &err) == 3);
  CHECK(err.find("numeric error") != std::string::npos);
  spit(dir / "blocker", "x");
  CHECK(run_args({"oracle", "stekloff", "--out", (dir / "blocker" / "sub").string()}, &err) == 4);
  CHECK(err.find("blocker") != std::string::npos);
  CHECK(run_args({"oracle", "tev", "--scene", R"({"layers":[{"r":1,"n_re":2,"n_im":1}]})", "--out",
                  (dir / "t").string()}) == 2);
  CHECK(run_args({"--help"}) == 0);
}
