// dotrecon — simulate boundary photon-density measurements and reconstruct
// optical parameters with the Gauss-Newton or pilot-adaptive-Metropolis engine.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "dot/config.hpp"
#include "dot/experiment.hpp"
#include "dot/io.hpp"
#include "dot/mcmc.hpp"
#include "dot/mesh.hpp"

namespace {

std::string resolve_output(const std::string& dir) {
  if (dir.empty() || dir.front() == '/') return dir;
  const char* root = std::getenv("DOTRECON_OUT_ROOT");
  if (root && *root) return std::string(root) + "/" + dir;
  return dir;
}

struct CommonOpts {
  std::string config_path;
  long seed = -1;
  double noise_level = -1;
  std::string output;
  bool fast = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--seed", opts.seed, "override the experiment seed");
  cmd->add_option("--noise-level", opts.noise_level, "override the relative noise level");
  cmd->add_option("--out", opts.output, "override the output directory");
  cmd->add_flag("--fast", opts.fast, "short chain schedule and iteration caps");
}

dot::ExperimentConfig load_config(const CommonOpts& opts) {
  dot::ExperimentConfig cfg = dot::ExperimentConfig::from_file(opts.config_path);
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.noise_level >= 0) cfg.noise_level = opts.noise_level;
  if (!opts.output.empty()) cfg.output_dir = opts.output;
  if (opts.fast) cfg.apply_fast_profile();
  cfg.output_dir = resolve_output(cfg.output_dir);
  return cfg;
}

void print_report(const dot::ReconstructionReport& report) {
  std::cout << report.summary();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffuse optical tomography reconstruction toolkit"};
  app.require_subcommand(1);

  // mesh gen
  auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
  mesh_cmd->require_subcommand(1);
  auto* mesh_gen = mesh_cmd->add_subcommand("gen", "generate a structured disk mesh");
  double gen_radius = 25.0;
  int gen_target = 541;
  long gen_seed = 1;
  std::string gen_out = "mesh.txt";
  mesh_gen->add_option("--radius", gen_radius, "disk radius (mm)");
  mesh_gen->add_option("--target", gen_target, "target triangle count")->required();
  mesh_gen->add_option("--seed", gen_seed, "jitter seed");
  mesh_gen->add_option("--out", gen_out, "output mesh file")->required();

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate noisy boundary measurements");
  CommonOpts sim_opts;
  add_common(simulate_cmd, sim_opts);

  // reconstruct irgn|mcmc
  auto* recon_cmd = app.add_subcommand("reconstruct", "reconstruct parameters from measurements");
  recon_cmd->require_subcommand(1);
  CommonOpts recon_opts;
  std::string measurements_dir;
  auto* recon_irgn = recon_cmd->add_subcommand("irgn", "iteratively regularized Gauss-Newton");
  auto* recon_mcmc = recon_cmd->add_subcommand("mcmc", "pilot adaptive Metropolis");
  for (auto* sub : {recon_irgn, recon_mcmc}) {
    add_common(sub, recon_opts);
    sub->add_option("--measurements", measurements_dir,
                    "directory with simulate outputs (otherwise simulate inline)");
  }

  // metrics
  auto* metrics_cmd = app.add_subcommand("metrics", "relative errors between two fields");
  std::string metrics_mesh, metrics_truth, metrics_recon;
  metrics_cmd->add_option("--mesh", metrics_mesh, "mesh file")->required();
  metrics_cmd->add_option("--truth", metrics_truth, "truth field CSV")->required();
  metrics_cmd->add_option("--recon", metrics_recon, "reconstruction field CSV")->required();

  // diagnostics
  auto* diag_cmd = app.add_subcommand("diagnostics", "MCMC convergence diagnostics");
  std::string diag_chain;
  diag_cmd->add_option("--chain", diag_chain, "chain CSV from a reconstruction run")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep over the prior strength");
  CommonOpts sweep_opts;
  add_common(sweep_cmd, sweep_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (mesh_gen->parsed()) {
      const dot::Mesh mesh =
          dot::generate_disk_mesh(gen_radius, gen_target, static_cast<std::uint64_t>(gen_seed));
      dot::save_mesh(mesh, gen_out);
      std::cout << "wrote " << gen_out << ": " << mesh.triangle_count() << " triangles, "
                << mesh.node_count() << " nodes, " << mesh.boundary_edge_count()
                << " boundary edges\n";
      return 0;
    }
    if (simulate_cmd->parsed()) {
      dot::ExperimentConfig cfg = load_config(sim_opts);
      const dot::SimulationArtifacts sim = dot::simulate_measurements(cfg);
      std::filesystem::create_directories(cfg.output_dir);
      dot::save_simulation(sim, cfg, cfg.output_dir);
      dot::write_text_file(cfg.output_dir + "/manifest.txt",
                           "config_hash " + std::to_string(cfg.hash()) + "\n\n" +
                               cfg.canonical_text());
      std::cout << "simulated " << sim.noisy.source_count << " sources, xi = "
                << dot::format_double(sim.xi) << ", outputs in " << cfg.output_dir << "\n";
      return 0;
    }
    if (recon_irgn->parsed() || recon_mcmc->parsed()) {
      dot::ExperimentConfig cfg = load_config(recon_opts);
      cfg.engine = recon_irgn->parsed() ? "irgn" : "mcmc";
      dot::ReconstructionReport report;
      if (!measurements_dir.empty()) {
        const dot::SimulationArtifacts sim = dot::load_simulation(cfg, measurements_dir);
        report = dot::reconstruct(cfg, sim, true);
      } else {
        report = dot::run_experiment(cfg, true);
      }
      print_report(report);
      return 0;
    }
    if (metrics_cmd->parsed()) {
      const dot::Mesh mesh = dot::load_mesh(metrics_mesh);
      Eigen::VectorXd tD, tmu, rD, rmu;
      dot::read_field_csv(metrics_truth, tD, tmu);
      dot::read_field_csv(metrics_recon, rD, rmu);
      std::cout << "mu_relative_L1: "
                << dot::format_double(dot::relative_error(mesh, tmu, rmu, 1)) << "\n"
                << "mu_relative_L2: "
                << dot::format_double(dot::relative_error(mesh, tmu, rmu, 2)) << "\n"
                << "D_relative_L1: " << dot::format_double(dot::relative_error(mesh, tD, rD, 1))
                << "\n"
                << "D_relative_L2: " << dot::format_double(dot::relative_error(mesh, tD, rD, 2))
                << "\n";
      return 0;
    }
    if (diag_cmd->parsed()) {
      const dot::Chain chain = dot::read_chain_csv(diag_chain);
      std::cout << dot::diagnostics(chain).summary();
      return 0;
    }
    if (sweep_cmd->parsed()) {
      dot::ExperimentConfig cfg = load_config(sweep_opts);
      cfg.engine = "mcmc";
      const dot::SweepResult result = dot::run_sweep(cfg, true);
      std::cout << "prior_alpha  mu_L2  D_L2  score\n";
      for (const auto& e : result.entries)
        std::cout << e.value << "  " << e.mu_error_l2 << "  " << e.D_error_l2 << "  " << e.score
                  << "\n";
      if (result.best_index >= 0)
        std::cout << "best: prior_alpha = " << result.entries[result.best_index].value << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
