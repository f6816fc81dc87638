#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "hbws/beamformer.hpp"
#include "hbws/bounds.hpp"
#include "hbws/capacity.hpp"
#include "hbws/channel.hpp"
#include "hbws/experiments.hpp"
#include "hbws/grassmann.hpp"
#include "hbws/io.hpp"
#include "hbws/switchset.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  const hbws::ExperimentConfig cfg = hbws::parse_config_file(config_path);
  cfg.validate();
  const auto rows = hbws::run_experiment(cfg);
  if (cfg.output.empty()) {
    hbws::write_csv(std::cout, rows);
  } else {
    std::ofstream os(cfg.output, std::ios::binary);
    if (!os) throw hbws::ConfigError("cannot open output file " + cfg.output);
    hbws::write_csv(os, rows);
  }
  for (const auto& r : rows)
    if (r.error) std::cerr << "warning: grid point " << r.value << " failed: " << r.notes << "\n";
  return 0;
}

int cmd_family(int l, int k, int kappa, const std::string& out) {
  const hbws::SwitchFamily fam = hbws::frankl_babai(l, k, kappa);
  fam.validate();
  if (out.empty()) {
    hbws::write_family(std::cout, fam);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw hbws::ConfigError("cannot open output file " + out);
    hbws::write_family(os, fam);
  }
  std::cerr << "family: " << fam.size() << " subsets, max overlap "
            << hbws::max_pairwise_overlap(fam) << "\n";
  return 0;
}

int cmd_pack(int d, int l, const std::string& family_path, const std::string& refine,
             std::uint64_t seed, const std::string& out) {
  hbws::LinePackOptions opts;
  opts.seed = seed;
  hbws::CMatrix t = hbws::line_pack(d, l, opts);
  std::string method = "line_pack";
  std::uint64_t fam_hash = 0;
  if (!family_path.empty()) {
    std::ifstream is(family_path);
    if (!is) throw hbws::ConfigError("cannot open family file " + family_path);
    const hbws::SwitchFamily fam = hbws::read_family(is);
    if (fam.l != l) throw hbws::ConfigError("family L does not match --l");
    fam_hash = hbws::family_hash(fam);
    if (refine == "greedy" || refine == "both") {
      t = hbws::greedy_permute(t, fam);
      method += "+greedy";
    }
    if (refine == "ascent" || refine == "both") {
      t = hbws::gradient_ascent(t, fam);
      method += "+ascent";
    }
    std::cerr << "pack: f_fs = " << hbws::min_pairwise_fs(t, fam) << "\n";
  } else if (refine != "none") {
    throw hbws::ConfigError("--refine requires --family");
  }
  std::map<std::string, std::string> meta = {{"D", std::to_string(d)},
                                             {"L", std::to_string(l)},
                                             {"method", method},
                                             {"seed", std::to_string(seed)},
                                             {"family_hash", std::to_string(fam_hash)}};
  if (out.empty()) {
    hbws::write_matrix(std::cout, t, meta);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw hbws::ConfigError("cannot open output file " + out);
    hbws::write_matrix(os, t, meta);
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const hbws::ExperimentConfig cfg = hbws::parse_config_file(config_path);
  cfg.validate();
  std::cout << "ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid beamforming with selection: design and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment sweep from a config file");
  run->add_option("config", config_path, "Config file path")->required();

  int fam_l = 0, fam_k = 0, fam_kappa = 0;
  std::string fam_out;
  auto* family = app.add_subcommand("family", "Build a bounded-overlap switch family");
  family->add_option("--l", fam_l, "Number of input ports")->required();
  family->add_option("--k", fam_k, "Subset size (up-conversion chains)")->required();
  family->add_option("--kappa", fam_kappa, "Maximum pairwise overlap")->required();
  family->add_option("--out", fam_out, "Output file (default stdout)");

  int pk_d = 0, pk_l = 0;
  std::string pk_family, pk_refine = "none", pk_out;
  std::uint64_t pk_seed = 0;
  auto* pack = app.add_subcommand("pack", "Design a reduced-space beamformer");
  pack->add_option("--d", pk_d, "Reduced dimension")->required();
  pack->add_option("--l", pk_l, "Number of columns")->required();
  pack->add_option("--family", pk_family, "Switch family file for coupled refinement");
  pack->add_option("--refine", pk_refine, "none | greedy | ascent | both")
      ->check(CLI::IsMember({"none", "greedy", "ascent", "both"}));
  pack->add_option("--seed", pk_seed, "RNG seed");
  pack->add_option("--out", pk_out, "Output file (default stdout)");

  std::string val_path;
  auto* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("config", val_path, "Config file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path);
    if (*family) return cmd_family(fam_l, fam_k, fam_kappa, fam_out);
    if (*pack) return cmd_pack(pk_d, pk_l, pk_family, pk_refine, pk_seed, pk_out);
    if (*validate) return cmd_validate(val_path);
  } catch (const hbws::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hbws::ArgumentError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
