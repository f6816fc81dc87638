#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hbws/experiments.hpp"

using namespace hbws;

namespace {

ExperimentConfig small_config() {
  std::istringstream is(
      "sweep = L\n"
      "grid = 2, 4\n"
      "mc_samples = 200\n"
      "seed = 11\n"
      "d = 4\n"
      "l = 4\n"
      "k = 2\n"
      "m1 = 2\n"
      "m2 = 1\n"
      "rho = 10\n"
      "zeta = 0.01\n"
      "family_kind = banked\n"
      "beamformer = line_pack\n"
      "schemes = HBwS, HBaCSI\n");
  return parse_config(is);
}

}  // namespace

TEST_CASE("config parsing: keys, comments, lists, db conversion") {
  std::istringstream is(
      "# comment line\n"
      "sweep = kappa\n"
      "grid = 0, 1, 2, 3   # inline comment\n"
      "mc_samples = 500\n"
      "seed = 99\n"
      "d = 10\n"
      "l = 20\n"
      "k = 4\n"
      "m1 = 4\n"
      "m2 = 1\n"
      "rho_db = 10\n"
      "family_kind = frankl_babai\n"
      "schemes = HBwS\n"
      "bounds = true\n"
      "\n");
  const ExperimentConfig cfg = parse_config(is);
  CHECK(cfg.sweep == "kappa");
  REQUIRE(cfg.grid.size() == 4);
  CHECK(cfg.grid[3] == 3.0);
  CHECK(cfg.rho == doctest::Approx(10.0));  // 10 dB
  CHECK(cfg.bounds_enabled);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config validation failures") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());

  ExperimentConfig bad = cfg;
  bad.grid = {4, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.grid.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.mc_samples = 50;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.schemes = {"bogus"};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.sweep = "anisotropy";  // without channel=pas
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.sweep = "kappa";  // without frankl_babai
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  std::istringstream unknown("no_such_key = 1\n");
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);
  std::istringstream malformed("sweep L\n");
  CHECK_THROWS_AS(parse_config(malformed), ConfigError);
}

TEST_CASE("csv schema is stable (golden header)") {
  CHECK(std::string(csv_header()) ==
        "sweep_var,value,scheme,mean_bits,se_bits,prelog,throughput,samples,seed,"
        "family_size,f_fs,notes,wall_time_s");
}

TEST_CASE("run: row layout, throughput consistency, determinism") {
  const ExperimentConfig cfg = small_config();
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);  // 2 grid points x 2 schemes
  CHECK(rows[0].sweep_var == "L");
  CHECK(rows[0].value == 2.0);
  CHECK(rows[0].scheme == "HBwS");
  CHECK(rows[1].scheme == "HBaCSI");
  CHECK(rows[2].value == 4.0);
  for (const auto& r : rows) {
    CHECK(!r.error);
    CHECK(r.samples == 200);
    CHECK(r.seed == 11);
    CHECK(r.throughput == doctest::Approx(r.mean_bits * r.prelog).epsilon(1e-12));
    CHECK(r.mean_bits > 0.0);
  }
  // HBwS at L=2 has the single banked subset; family_size 1
  CHECK(rows[0].family_size == 1);
  CHECK(rows[2].family_size == 4);
  CHECK(rows[2].f_fs > 0.0);

  // rerun: identical except wall time
  const auto again = run_experiment(cfg);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].mean_bits == rows[i].mean_bits);
    CHECK(again[i].se_bits == rows[i].se_bits);
    CHECK(again[i].throughput == rows[i].throughput);
    CHECK(again[i].f_fs == rows[i].f_fs);
    CHECK(again[i].notes == rows[i].notes);
  }

  // CSV text: strip the wall-time column and compare
  std::ostringstream a, b;
  write_csv(a, rows);
  write_csv(b, again);
  auto strip_last_col = [](const std::string& s) {
    std::string out;
    std::istringstream is(s);
    std::string line;
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  CHECK(strip_last_col(a.str()) == strip_last_col(b.str()));
  CHECK(a.str().substr(0, a.str().find('\n')) == csv_header());
}

TEST_CASE("run: single-point L=K sweep matches the fixed baseline") {
  std::istringstream is(
      "sweep = L\n"
      "grid = 2\n"
      "mc_samples = 3000\n"
      "seed = 5\n"
      "d = 4\nl = 2\nk = 2\nm1 = 2\nm2 = 1\nrho = 10\n"
      "family_kind = banked\n"
      "schemes = HBwS, HBaCSI\n");
  const auto rows = run_experiment(parse_config(is));
  REQUIRE(rows.size() == 2);
  const double se = std::hypot(rows[0].se_bits, rows[1].se_bits);
  CHECK(std::abs(rows[0].mean_bits - rows[1].mean_bits) <= 3.0 * se);
}

TEST_CASE("run: kappa sweep reports the construction sizes") {
  std::istringstream is(
      "sweep = kappa\n"
      "grid = 0, 1, 2, 3\n"
      "mc_samples = 100\n"
      "seed = 3\n"
      "d = 6\nl = 20\nk = 4\nm1 = 2\nm2 = 1\nrho = 10\n"
      "family_kind = frankl_babai\n"
      "schemes = HBaCSI\n");  // baseline only: fast, family still built
  ExperimentConfig cfg = parse_config(is);
  cfg.schemes = {"HBwS"};
  cfg.mc_samples = 100;
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].family_size == 5);
  CHECK(rows[1].family_size == 25);
  CHECK(rows[2].family_size == 125);
  CHECK(rows[3].family_size == 625);
}

TEST_CASE("run: a failing grid point yields an error row and continues") {
  std::istringstream is(
      "sweep = L\n"
      "grid = 1, 4\n"  // L=1 < K=2 fails, L=4 succeeds
      "mc_samples = 150\n"
      "seed = 2\n"
      "d = 4\nl = 4\nk = 2\nm1 = 2\nm2 = 1\nrho = 10\n"
      "family_kind = banked\n"
      "schemes = HBwS\n");
  const auto rows = run_experiment(parse_config(is));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].error);
  CHECK(rows[0].scheme == "error");
  CHECK(rows[0].notes.substr(0, 6) == "error:");
  CHECK(!rows[1].error);
  CHECK(rows[1].mean_bits > 0.0);
}

TEST_CASE("random family controls: containment, sizes, saturation") {
  const auto fams = sweep_random_family_control(20, 4, 1, 20, 9);
  REQUIRE(fams.size() == 20);
  const SwitchFamily all = enumerate_banked(20, 4);
  std::set<std::vector<int>> bank(all.subsets.begin(), all.subsets.end());
  bool any_differ = false;
  for (const auto& f : fams) {
    CHECK(f.size() == 25);
    f.validate();
    for (const auto& s : f.subsets) CHECK(bank.count(s) == 1);
    if (f.subsets != fams[0].subsets) any_differ = true;
  }
  CHECK(any_differ);

  // kappa=3: target 625 = |S_all|; every draw is S_all itself
  const auto sat = sweep_random_family_control(20, 4, 3, 3, 9);
  for (const auto& f : sat) CHECK(f.size() == 625);
  for (const auto& f : sat) CHECK(f.subsets == all.subsets);

  CHECK_THROWS_AS(sweep_random_family_control(8, 2, 3, 1, 0), ArgumentError);
}

TEST_CASE("zero-forcing users sweep") {
  std::istringstream is(
      "sweep = users\n"
      "grid = 1, 2\n"
      "mc_samples = 300\n"
      "seed = 4\n"
      "d = 4\nl = 8\nk = 2\nm1 = 2\nm2 = 1\nrho = 10\n"
      "family_kind = banked\n"
      "schemes = ZF-HBwS\n");
  const auto rows = run_experiment(parse_config(is));
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].error);
  CHECK(!rows[1].error);
  CHECK(rows[0].mean_bits > 0.0);
  CHECK(rows[1].mean_bits > 0.0);
}

TEST_CASE("bounds rows appear when enabled") {
  std::istringstream is(
      "sweep = L\n"
      "grid = 6\n"
      "mc_samples = 300\n"
      "seed = 6\n"
      "d = 4\nl = 6\nk = 2\nm1 = 1\nm2 = 1\nrho = 10\n"
      "family_kind = banked\n"
      "schemes = HBwS\n"
      "bounds = true\n");
  const auto rows = run_experiment(parse_config(is));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].scheme == "CLB1");
  CHECK(rows[2].scheme == "CLB-closed");
  CHECK(rows[1].mean_bits <= rows[0].mean_bits + 3.0 * std::hypot(rows[0].se_bits, rows[1].se_bits));
  CHECK(rows[2].mean_bits <= rows[0].mean_bits);
  CHECK(rows[1].notes.substr(0, 4) == "eps=");
}

TEST_CASE("matrix dump round-trips with metadata") {
  Rng rng(71);
  CMatrix m(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) m(i, j) = rng.next_cgauss();
  std::stringstream ss;
  write_matrix(ss, m, {{"D", "3"}, {"method", "line_pack"}});
  std::map<std::string, std::string> meta;
  const CMatrix back = read_matrix(ss, &meta);
  CHECK((back - m).norm() == 0.0);
  CHECK(meta.at("D") == "3");
  CHECK(meta.at("method") == "line_pack");

  std::stringstream bad("not a header\n");
  CHECK_THROWS_AS(read_matrix(bad), ArgumentError);
}

TEST_CASE("anisotropy sweep runs end to end on a small array") {
  std::istringstream is(
      "sweep = anisotropy\n"
      "grid = 1, 20\n"
      "mc_samples = 150\n"
      "seed = 8\n"
      "d = 6\nl = 4\nk = 2\nm1 = 2\nm2 = 1\nrho = 1\n"
      "family_kind = banked\n"
      "beamformer = dft\n"
      "channel = pas\n"
      "array_rows = 4\narray_cols = 5\n"
      "schemes = HBwS\n");
  const auto rows = run_experiment(parse_config(is));
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(!r.error);
    CHECK(r.mean_bits > 0.0);
  }
}
