#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hbws/beamformer.hpp"
#include "hbws/bounds.hpp"
#include "hbws/capacity.hpp"
#include "hbws/channel.hpp"
#include "hbws/common.hpp"
#include "hbws/grassmann.hpp"
#include "hbws/io.hpp"
#include "hbws/switchset.hpp"

namespace hbws {

/// One experiment: a sweep over a grid of values of a single variable, with
/// every other knob fixed. Parsed from a flat key=value text file.
struct ExperimentConfig {
  std::string sweep = "L";  // one of L, kappa, users, D, anisotropy
  std::vector<double> grid;
  long long mc_samples = 5000;
  std::uint64_t seed = 0;

  int d = 4, l = 8, k = 2, m1 = 2, m2 = 1;
  double rho = 10.0, zeta = 0.0;

  std::string family_kind = "banked";  // full | banked | frankl_babai | file
  int kappa = 0;
  std::string family_file;

  std::string beamformer = "line_pack";  // line_pack | dft | sudarshan | file
  std::string beamformer_file;
  std::string refine = "none";  // none | greedy | ascent | both

  std::string channel = "isotropic";  // isotropic | pas
  double eta = 0.0;                   // PAS anisotropy (fixed unless swept)
  int array_rows = 10, array_cols = 10;
  double xi = 1.0;  // skew exponent for anisotropic designs

  std::vector<std::string> schemes = {"HBwS", "HBaCSI", "HBiCSI"};
  bool bounds_enabled = false;
  double epsilon_c = 0.0;
  int users = 0;  // scheduled users for ZF-HBwS; 0 means all M1

  std::string output;  // CSV path; empty writes to the stream given to run()

  void validate() const {
    static const std::vector<std::string> sweeps = {"L", "kappa", "users", "D", "anisotropy"};
    if (std::find(sweeps.begin(), sweeps.end(), sweep) == sweeps.end())
      throw ConfigError("config: unknown sweep '" + sweep + "'");
    if (grid.empty()) throw ConfigError("config: grid must be nonempty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1]) throw ConfigError("config: grid must be strictly increasing");
    if (mc_samples < 100) throw ConfigError("config: mc_samples must be >= 100");
    if (d < 1 || l < 1 || k < 1 || m1 < 1 || m2 < 1)
      throw ConfigError("config: dimensions must be >= 1");
    if (k < m1 * m2) throw ConfigError("config: need k >= m1*m2");
    if (rho < 0.0 || zeta < 0.0) throw ConfigError("config: rho and zeta must be >= 0");
    static const std::vector<std::string> fams = {"full", "banked", "frankl_babai", "file"};
    if (std::find(fams.begin(), fams.end(), family_kind) == fams.end())
      throw ConfigError("config: unknown family_kind '" + family_kind + "'");
    if (family_kind == "file" && family_file.empty())
      throw ConfigError("config: family_kind=file needs family_file");
    static const std::vector<std::string> bfs = {"line_pack", "dft", "sudarshan", "file"};
    if (std::find(bfs.begin(), bfs.end(), beamformer) == bfs.end())
      throw ConfigError("config: unknown beamformer '" + beamformer + "'");
    if (beamformer == "file" && beamformer_file.empty())
      throw ConfigError("config: beamformer=file needs beamformer_file");
    static const std::vector<std::string> refs = {"none", "greedy", "ascent", "both"};
    if (std::find(refs.begin(), refs.end(), refine) == refs.end())
      throw ConfigError("config: unknown refine '" + refine + "'");
    if (channel != "isotropic" && channel != "pas")
      throw ConfigError("config: unknown channel '" + channel + "'");
    if (schemes.empty()) throw ConfigError("config: schemes must be nonempty");
    for (const auto& s : schemes)
      if (s != "HBwS" && s != "HBaCSI" && s != "HBiCSI" && s != "ZF-HBwS")
        throw ConfigError("config: unknown scheme '" + s + "'");
    if (users < 0 || users > m1) throw ConfigError("config: need 0 <= users <= m1");
    if (sweep == "anisotropy" && channel != "pas")
      throw ConfigError("config: anisotropy sweep requires channel=pas");
    if (sweep == "kappa" && family_kind != "frankl_babai")
      throw ConfigError("config: kappa sweep requires family_kind=frankl_babai");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
inline T parse_num(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out;
  if (!(is >> out) || !(is >> std::ws).eof())
    throw ConfigError("config: bad value '" + v + "' for " + key);
  return out;
}

}  // namespace detail

/// Parses the flat "key = value" dialect ('#' starts a comment; lists are
/// comma-separated). Unknown keys are errors so typos fail loudly.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "sweep") cfg.sweep = val;
    else if (key == "grid") {
      cfg.grid.clear();
      for (const auto& g : detail::split_list(val))
        cfg.grid.push_back(detail::parse_num<double>(key, g));
    } else if (key == "mc_samples") cfg.mc_samples = detail::parse_num<long long>(key, val);
    else if (key == "seed") cfg.seed = detail::parse_num<std::uint64_t>(key, val);
    else if (key == "d") cfg.d = detail::parse_num<int>(key, val);
    else if (key == "l") cfg.l = detail::parse_num<int>(key, val);
    else if (key == "k") cfg.k = detail::parse_num<int>(key, val);
    else if (key == "m1") cfg.m1 = detail::parse_num<int>(key, val);
    else if (key == "m2") cfg.m2 = detail::parse_num<int>(key, val);
    else if (key == "rho") cfg.rho = detail::parse_num<double>(key, val);
    else if (key == "rho_db") cfg.rho = std::pow(10.0, detail::parse_num<double>(key, val) / 10.0);
    else if (key == "zeta") cfg.zeta = detail::parse_num<double>(key, val);
    else if (key == "family_kind") cfg.family_kind = val;
    else if (key == "kappa") cfg.kappa = detail::parse_num<int>(key, val);
    else if (key == "family_file") cfg.family_file = val;
    else if (key == "beamformer") cfg.beamformer = val;
    else if (key == "beamformer_file") cfg.beamformer_file = val;
    else if (key == "refine") cfg.refine = val;
    else if (key == "channel") cfg.channel = val;
    else if (key == "eta") cfg.eta = detail::parse_num<double>(key, val);
    else if (key == "array_rows") cfg.array_rows = detail::parse_num<int>(key, val);
    else if (key == "array_cols") cfg.array_cols = detail::parse_num<int>(key, val);
    else if (key == "xi") cfg.xi = detail::parse_num<double>(key, val);
    else if (key == "schemes") cfg.schemes = detail::split_list(val);
    else if (key == "bounds") cfg.bounds_enabled = (val == "true" || val == "1" || val == "on");
    else if (key == "epsilon_c") cfg.epsilon_c = detail::parse_num<double>(key, val);
    else if (key == "users") cfg.users = detail::parse_num<int>(key, val);
    else if (key == "output") cfg.output = val;
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  return parse_config(is);
}

/// `trials` uniform random sub-families of the banked family, each of the same
/// size as the bounded-overlap construction for (l, k, kappa). The paired
/// comparison controls for family size when judging family quality.
inline std::vector<SwitchFamily> sweep_random_family_control(int l, int k, int kappa,
                                                             int trials, std::uint64_t seed) {
  if (trials < 1) throw ArgumentError("sweep_random_family_control: need trials >= 1");
  const SwitchFamily all = enumerate_banked(l, k);
  const std::size_t target = frankl_babai(l, k, kappa).size();
  if (target > all.size())
    throw ArgumentError("sweep_random_family_control: target size exceeds |S_all|");
  const Rng root(seed, 0x5eedfa3);
  std::vector<SwitchFamily> out;
  out.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    Rng rng = root.split(t);
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < target; ++i) {
      const std::size_t j = i + std::size_t(rng.next_below(std::uint64_t(idx.size() - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    SwitchFamily fam{l, k, {}};
    for (std::size_t i : idx) fam.subsets.push_back(all.subsets[i]);
    out.push_back(std::move(fam));
  }
  return out;
}

/// One CSV row of a sweep. wall_time_s is the only field allowed to differ
/// between reruns of the same config.
struct ResultRow {
  std::string sweep_var;
  double value = 0.0;
  std::string scheme;
  double mean_bits = 0.0;
  double se_bits = 0.0;
  double prelog = 1.0;
  double throughput = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
  std::size_t family_size = 0;
  double f_fs = 0.0;
  std::string notes;
  double wall_time_s = 0.0;
  bool error = false;
};

inline const char* csv_header() {
  return "sweep_var,value,scheme,mean_bits,se_bits,prelog,throughput,samples,seed,"
         "family_size,f_fs,notes,wall_time_s";
}

namespace detail {

struct PointSetup {
  SwitchFamily family;
  CMatrix t;  // reduced-space beamformer, canonical
  EffectiveModel model;
  SchemeConfig scheme_cfg;
  double f_fs = 0.0;
};

inline CMatrix base_beamformer(const ExperimentConfig& cfg, int d, int l, int k) {
  if (cfg.beamformer == "line_pack") {
    LinePackOptions opts;
    opts.seed = cfg.seed;
    return line_pack(d, l, opts);
  }
  if (cfg.beamformer == "dft") return dft_seed(d, l);
  if (cfg.beamformer == "sudarshan") return sudarshan_reduced(d, l, k);
  std::ifstream is(cfg.beamformer_file);
  if (!is) throw ConfigError("cannot open beamformer file " + cfg.beamformer_file);
  CMatrix t = read_matrix(is);
  if (t.rows() != d || t.cols() != l)
    throw ConfigError("beamformer file dimensions do not match (D, L)");
  return canonicalize(t);
}

inline SwitchFamily build_family(const ExperimentConfig& cfg, int l, int k, int kappa) {
  if (cfg.family_kind == "full") return enumerate_full(l, k);
  if (cfg.family_kind == "banked") return enumerate_banked(l, k);
  if (cfg.family_kind == "frankl_babai") return frankl_babai(l, k, kappa);
  std::ifstream is(cfg.family_file);
  if (!is) throw ConfigError("cannot open family file " + cfg.family_file);
  SwitchFamily fam = read_family(is);
  if (fam.l != l || fam.k != k) throw ConfigError("family file (L, K) does not match config");
  return fam;
}

/// Base designs are deterministic in (kind, d, l, k, seed), so grid points
/// sharing those parameters reuse one computation (line packing dominates
/// setup cost for sweeps that hold the shape fixed).
struct BeamformerCache {
  std::map<std::string, CMatrix> entries;
  const CMatrix& get(const ExperimentConfig& cfg, int d, int l, int k) {
    const std::string key = cfg.beamformer + "/" + std::to_string(d) + "/" + std::to_string(l) +
                            "/" + std::to_string(k);
    auto it = entries.find(key);
    if (it == entries.end()) it = entries.emplace(key, base_beamformer(cfg, d, l, k)).first;
    return it->second;
  }
};

inline PointSetup setup_point(const ExperimentConfig& cfg, double value,
                              BeamformerCache* cache = nullptr) {
  int d = cfg.d, l = cfg.l, k = cfg.k, kappa = cfg.kappa, users = cfg.users;
  double eta = cfg.eta;
  if (cfg.sweep == "L") l = int(value);
  else if (cfg.sweep == "D") d = int(value);
  else if (cfg.sweep == "kappa") kappa = int(value);
  else if (cfg.sweep == "users") users = int(value);
  else eta = value;
  if (l < k) throw ConfigError("grid point: L < K");

  PointSetup p;
  p.family = build_family(cfg, l, k, kappa);
  p.scheme_cfg.d = d;
  p.scheme_cfg.l = l;
  p.scheme_cfg.k = k;
  p.scheme_cfg.m1 = cfg.m1;
  p.scheme_cfg.m2 = cfg.m2;
  p.scheme_cfg.rho = cfg.rho;
  p.scheme_cfg.zeta = cfg.zeta;
  p.scheme_cfg.validate();
  (void)users;

  const CMatrix t0 = cache ? cache->get(cfg, d, l, k) : base_beamformer(cfg, d, l, k);
  if (cfg.channel == "isotropic") {
    p.model = effective_group_model(ChannelModel::isotropic(d, cfg.m1, cfg.m2), d);
    p.t = t0;
  } else {
    const PasSpec pas = PasSpec::three_cluster(eta);
    const ArrayGeometry geom = ArrayGeometry::uniform_planar(cfg.array_rows, cfg.array_cols);
    const CMatrix r_tx = pas_correlation(pas, geom);
    const EigenSystem es = eigendecompose_sorted(r_tx);
    ChannelModel mdl;
    mdl.e_tx = es.vectors;
    mdl.lambda_tx = es.values;
    mdl.rx_blocks.assign(cfg.m1, CMatrix::Identity(cfg.m2, cfg.m2));
    mdl.m1 = cfg.m1;
    mdl.m2 = cfg.m2;
    p.model = effective_group_model(mdl, d);
    p.t = skewed_reduced(p.model.lambda_d, t0, cfg.xi);
  }
  if (cfg.refine == "greedy" || cfg.refine == "both") p.t = greedy_permute(p.t, p.family);
  if (cfg.refine == "ascent" || cfg.refine == "both") p.t = gradient_ascent(p.t, p.family);
  p.f_fs = p.family.size() >= 2 ? f_fs_or_zero(p.t, p.family) : kHalfPi;
  return p;
}

}  // namespace detail

/// Runs the sweep and returns one row per (grid point, scheme). A failing
/// grid point yields a single error row and the sweep continues.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  detail::BeamformerCache cache;
  for (double value : cfg.grid) {
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };
    try {
      const detail::PointSetup p = detail::setup_point(cfg, value, &cache);
      const int users = cfg.sweep == "users" ? int(value) : (cfg.users ? cfg.users : cfg.m1);
      for (const std::string& name : cfg.schemes) {
        ResultRow r;
        r.sweep_var = cfg.sweep;
        r.value = value;
        r.scheme = name;
        r.seed = cfg.seed;
        r.family_size = p.family.size();
        r.f_fs = p.f_fs;
        r.notes = "family=" + cfg.family_kind + ";beamformer=" + cfg.beamformer +
                  ";refine=" + cfg.refine;
        SchemeConfig sc = p.scheme_cfg;
        CapacityEstimate est;
        if (name == "HBwS") {
          sc.scheme = Scheme::HBwS;
          est = hsnr_capacity_mc(p.t, p.family, p.model, sc, cfg.mc_samples, cfg.seed);
        } else if (name == "HBaCSI") {
          sc.scheme = Scheme::HBaCSI;
          est = baseline_capacity(Scheme::HBaCSI, p.model, sc, cfg.mc_samples, cfg.seed);
          r.family_size = 1;
          r.f_fs = 0.0;
        } else if (name == "HBiCSI") {
          sc.scheme = Scheme::HBiCSI;
          est = baseline_capacity(Scheme::HBiCSI, p.model, sc, cfg.mc_samples, cfg.seed);
          r.family_size = 1;
          r.f_fs = 0.0;
        } else {  // ZF-HBwS
          sc.scheme = Scheme::ZfHBwS;
          std::vector<int> scheduled;
          for (int u = 1; u <= users; ++u) scheduled.push_back(u);
          est = zf_sum_rate_mc(p.t, p.family, p.model, sc, scheduled, cfg.mc_samples, cfg.seed);
        }
        r.mean_bits = est.mean;
        r.se_bits = est.std_error;
        r.samples = est.samples;
        r.prelog = prelog_factor(sc);
        const CapacityEstimate tp = throughput(est, sc);
        r.throughput = tp.mean;
        r.wall_time_s = elapsed();
        rows.push_back(std::move(r));
      }
      if (cfg.bounds_enabled) {
        SchemeConfig sc = p.scheme_cfg;
        sc.scheme = Scheme::HBwS;
        EpsilonPolicy eps{cfg.epsilon_c};
        const BoundReport rep =
            bound_report(p.t, p.family, p.model, sc, cfg.mc_samples, cfg.seed, eps);
        ResultRow r1;
        r1.sweep_var = cfg.sweep;
        r1.value = value;
        r1.scheme = "CLB1";
        r1.mean_bits = rep.clb1.mean;
        r1.se_bits = rep.clb1.std_error;
        r1.samples = rep.clb1.samples;
        r1.seed = cfg.seed;
        r1.family_size = p.family.size();
        r1.f_fs = p.f_fs;
        r1.prelog = 1.0;
        r1.throughput = rep.clb1.mean;
        r1.notes = rep.epsilon_policy;
        r1.wall_time_s = elapsed();
        rows.push_back(r1);
        ResultRow r2 = r1;
        r2.scheme = "CLB-closed";
        r2.mean_bits = rep.clb_closed_value;
        r2.se_bits = 0.0;
        r2.samples = 0;
        r2.throughput = rep.clb_closed_value;
        r2.notes = rep.epsilon_policy + (rep.degenerate ? ";degenerate" : "");
        r2.wall_time_s = elapsed();
        rows.push_back(r2);
      }
    } catch (const std::exception& e) {
      ResultRow r;
      r.sweep_var = cfg.sweep;
      r.value = value;
      r.scheme = "error";
      r.seed = cfg.seed;
      std::string msg = e.what();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      r.notes = "error: " + msg;
      r.error = true;
      r.wall_time_s = elapsed();
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << std::setprecision(17);
    os << r.sweep_var << ',' << r.value << ',' << r.scheme << ',' << r.mean_bits << ','
       << r.se_bits << ',' << r.prelog << ',' << r.throughput << ',' << r.samples << ','
       << r.seed << ',' << r.family_size << ',' << r.f_fs << ',' << r.notes << ','
       << std::setprecision(6) << r.wall_time_s << '\n';
  }
}

}  // namespace hbws
