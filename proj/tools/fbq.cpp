// fbq: tree-structured random vector quantization simulator.
//
// Subcommands: sweep-mimo, sweep-cdma, complexity, gen-codebook, build-tree,
// predict.  Exit codes: 0 success, 2 configuration error, 3 capacity error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbq/asymptotics.hpp"
#include "fbq/harness.hpp"
#include "fbq/io.hpp"

namespace {

struct SweepFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
  std::string schemes;
  std::string bits;
};

void add_sweep_flags(CLI::App* cmd, SweepFlags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key = value config file");
  cmd->add_option("--seed", flags.seed, "master seed override");
  cmd->add_option("--trials", flags.trials, "Monte-Carlo trial count override");
  cmd->add_option("--out", flags.out, "output CSV path override");
  cmd->add_option("--scheme", flags.schemes, "comma-separated scheme list override");
  cmd->add_option("--bits", flags.bits, "comma-separated feedback-bit list override");
}

fbq::ExperimentConfig resolve_config(const SweepFlags& flags, fbq::Scenario scenario) {
  fbq::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = fbq::load_config_file(flags.config_path);
  cfg.scenario = scenario;
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.trials) cfg.trials = *flags.trials;
  if (!flags.out.empty()) cfg.out_path = flags.out;
  if (!flags.schemes.empty()) fbq::apply_config_entry(cfg, "schemes", flags.schemes);
  if (!flags.bits.empty()) fbq::apply_config_entry(cfg, "bits", flags.bits);
  cfg.validate();
  return cfg;
}

void write_rows(const std::vector<fbq::ResultRow>& rows, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << fbq::format_csv(rows);
    return;
  }
  fbq::emit_csv(rows, out_path);
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
}

int run_sweep(const SweepFlags& flags, fbq::Scenario scenario) {
  const fbq::ExperimentConfig cfg = resolve_config(flags, scenario);
  const std::vector<fbq::ResultRow> rows = cfg.scenario == fbq::Scenario::kMimo
                                               ? fbq::run_mimo_sweep(cfg)
                                               : fbq::run_cdma_sweep(cfg);
  write_rows(rows, cfg.out_path);
  return 0;
}

int run_complexity(const SweepFlags& flags) {
  fbq::ExperimentConfig cfg;
  if (!flags.config_path.empty()) cfg = fbq::load_config_file(flags.config_path);
  const fbq::Scenario scenario = cfg.scenario;
  const fbq::ExperimentConfig resolved = resolve_config(flags, scenario);
  write_rows(fbq::run_complexity_profile(resolved), resolved.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-structured RVQ beamforming/signature quantization simulator"};
  app.require_subcommand(1);

  SweepFlags mimo_flags, cdma_flags, cx_flags;
  CLI::App* sweep_mimo = app.add_subcommand("sweep-mimo", "capacity vs feedback bits, MIMO");
  add_sweep_flags(sweep_mimo, mimo_flags);
  CLI::App* sweep_cdma = app.add_subcommand("sweep-cdma", "SINR vs feedback bits, CDMA");
  add_sweep_flags(sweep_cdma, cdma_flags);
  CLI::App* complexity = app.add_subcommand("complexity", "performance vs search cost profile");
  add_sweep_flags(complexity, cx_flags);

  // gen-codebook
  std::size_t gc_dim = 4;
  unsigned gc_bits = 8;
  std::uint64_t gc_seed = 1;
  std::string gc_out = "codebook.rvq";
  CLI::App* gen = app.add_subcommand("gen-codebook", "generate and store an RVQ codebook");
  gen->add_option("--dim", gc_dim, "vector dimension N")->required();
  gen->add_option("--bits", gc_bits, "feedback bits B")->required();
  gen->add_option("--seed", gc_seed, "codebook seed");
  gen->add_option("--out", gc_out, "output container path")->required();

  // build-tree
  std::string bt_in, bt_out, bt_kind = "kd";
  CLI::App* build = app.add_subcommand("build-tree", "organize a stored codebook into a tree");
  build->add_option("--in", bt_in, "input codebook container")->required();
  build->add_option("--out", bt_out, "output container with tree block")->required();
  build->add_option("--tree", bt_kind, "kd or gla")->check(CLI::IsMember({"kd", "gla"}));

  // predict
  std::string pr_scenario = "mimo", pr_bits = "0,1,2,3,4,5,6";
  double pr_nr_bar = 1.0, pr_rho_db = 10.0, pr_k_bar = 0.5, pr_sigma2 = 0.1, pr_alpha = 1.0;
  std::size_t pr_dim = 4;
  std::string pr_out;
  CLI::App* predict = app.add_subcommand("predict", "closed-form large-system predictions");
  predict->add_option("--scenario", pr_scenario)->check(CLI::IsMember({"mimo", "cdma"}));
  predict->add_option("--bits", pr_bits, "feedback-bit list");
  predict->add_option("--dim", pr_dim, "quantized dimension (N or N_t), sets b_bar = B/dim");
  predict->add_option("--nr-bar", pr_nr_bar, "N_r/N_t");
  predict->add_option("--rho-db", pr_rho_db, "SNR in dB");
  predict->add_option("--k-bar", pr_k_bar, "K/N");
  predict->add_option("--sigma2", pr_sigma2, "noise variance");
  predict->add_option("--alpha", pr_alpha, "user-1 gain");
  predict->add_option("--out", pr_out, "output CSV path (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sweep_mimo->parsed()) return run_sweep(mimo_flags, fbq::Scenario::kMimo);
    if (sweep_cdma->parsed()) return run_sweep(cdma_flags, fbq::Scenario::kCdma);
    if (complexity->parsed()) return run_complexity(cx_flags);

    if (gen->parsed()) {
      const fbq::Codebook cb = fbq::generate_rvq(gc_dim, gc_bits, fbq::Rng(gc_seed));
      fbq::save_codebook(gc_out, cb);
      std::cout << "wrote " << cb.size() << " entries of dimension " << cb.dim() << " to "
                << gc_out << "\n";
      return 0;
    }
    if (build->parsed()) {
      const fbq::LoadedContainer in = fbq::load_container(bt_in);
      if (bt_kind == "kd") {
        fbq::save_tree(bt_out, in.codebook, fbq::build_kd_tree(in.codebook));
      } else {
        fbq::save_tree(bt_out, in.codebook, fbq::build_gla_tree(in.codebook));
      }
      std::cout << "wrote " << bt_kind << " tree over " << in.codebook.size()
                << " entries to " << bt_out << "\n";
      return 0;
    }
    if (predict->parsed()) {
      fbq::ExperimentConfig list_helper;
      fbq::apply_config_entry(list_helper, "bits", pr_bits);
      std::string csv = "scenario,B,b_bar,metric,value\n";
      char buf[256];
      for (unsigned b : list_helper.bits_sweep) {
        fbq::LargeSystemParams p;
        p.b_bar = static_cast<double>(b) / static_cast<double>(pr_dim);
        if (pr_scenario == "mimo") {
          p.nr_bar = pr_nr_bar;
          p.rho = std::pow(10.0, pr_rho_db / 10.0);
          std::snprintf(buf, sizeof(buf), "mimo,%u,%.10g,capacity_bpcu,%.10g\n", b, p.b_bar,
                        fbq::theorem1_capacity(p));
        } else {
          p.k_bar = pr_k_bar;
          p.sigma2 = pr_sigma2;
          p.alpha = pr_alpha;
          const double g = fbq::theorem2_sinr(p);
          std::snprintf(buf, sizeof(buf), "cdma,%u,%.10g,sinr_db,%.10g\n", b, p.b_bar,
                        fbq::to_db(g));
        }
        csv += buf;
      }
      if (pr_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream f(pr_out, std::ios::binary | std::ios::trunc);
        if (!f) throw fbq::ConfigError("cannot open " + pr_out);
        f << csv;
      }
      return 0;
    }
  } catch (const fbq::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const fbq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
