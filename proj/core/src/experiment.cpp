#include "dot/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dot/io.hpp"
#include "dot/jacobian.hpp"

namespace dot {

NoisyMeasurements add_noise(const MeasurementSet& clean, double level, std::uint64_t seed) {
  if (level < 0) throw std::runtime_error("add_noise: level must be nonnegative");
  const Eigen::VectorXd g = clean.flatten();
  const long m = g.size();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd noisy(m);
  for (long i = 0; i < m; ++i) noisy[i] = g[i] + level * std::abs(g[i]) * normal(rng);

  const double mean_abs = m ? g.cwiseAbs().mean() : 0.0;
  // sigma floor keeps the likelihood covariance positive; for a zero noise
  // level a tiny absolute floor stands in
  const double floor_sigma =
      level > 0 ? level * mean_abs : 1e-8 * std::max(mean_abs, 1e-300);
  Eigen::VectorXd sigma(m);
  for (long i = 0; i < m; ++i) sigma[i] = std::max(level * std::abs(g[i]), floor_sigma);

  NoisyMeasurements out;
  out.measurements =
      MeasurementSet::from_flat(noisy, clean.source_count, clean.boundary_node_count);
  out.measurements.sigma = sigma;
  out.xi = (g - noisy).norm();
  return out;
}

double relative_error(const Mesh& mesh, const Eigen::VectorXd& truth, const Eigen::VectorXd& recon,
                      int p) {
  if (p != 1 && p != 2) throw std::runtime_error("relative_error: p must be 1 or 2");
  if (truth.size() != mesh.triangle_count() || recon.size() != mesh.triangle_count())
    throw std::runtime_error("relative_error: field length mismatch");
  double num = 0, den = 0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double a = mesh.tri_area[t];
    num += a * std::pow(std::abs(truth[t] - recon[t]), p);
    den += a * std::pow(std::abs(truth[t]), p);
  }
  if (den == 0) throw std::runtime_error("relative_error: zero-norm truth");
  return std::pow(num / den, 1.0 / p);
}

namespace {

// boundary node angles around the area centroid, in canonical boundary order
std::vector<double> boundary_angles(const Mesh& mesh) {
  double cx = 0, cy = 0, total = 0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    cx += mesh.tri_area[t] * mesh.tri_centroid[t].x;
    cy += mesh.tri_area[t] * mesh.tri_centroid[t].y;
    total += mesh.tri_area[t];
  }
  cx /= total;
  cy /= total;
  std::vector<double> th(mesh.boundary_node_count());
  for (int b = 0; b < mesh.boundary_node_count(); ++b) {
    const Vec2 p = mesh.nodes[mesh.boundary_nodes[b]];
    th[b] = std::atan2(p.y - cy, p.x - cx);
  }
  return th;
}

}  // namespace

MeasurementSet interp_boundary_trace(const MeasurementSet& ms, const Mesh& src, const Mesh& dst) {
  if (ms.boundary_node_count != src.boundary_node_count())
    throw std::runtime_error("interp_boundary_trace: trace does not match source mesh");

  // sort source boundary samples by angle for bracketed lookup
  std::vector<double> sth = boundary_angles(src);
  std::vector<int> order(sth.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sth[a] < sth[b]; });

  const std::vector<double> dth = boundary_angles(dst);
  const int ns = static_cast<int>(order.size());

  MeasurementSet out;
  out.source_count = ms.source_count;
  out.boundary_node_count = dst.boundary_node_count();
  for (int s = 0; s < ms.source_count; ++s) {
    Eigen::VectorXcd tr(out.boundary_node_count);
    for (int b = 0; b < out.boundary_node_count; ++b) {
      const double t = dth[b];
      // upper_bound over sorted source angles, wrapping around
      int hi = static_cast<int>(
          std::upper_bound(order.begin(), order.end(), t,
                           [&](double value, int idx) { return value < sth[idx]; }) -
          order.begin());
      const int lo = (hi + ns - 1) % ns;
      hi = hi % ns;
      const double a0 = sth[order[lo]];
      double a1 = sth[order[hi]];
      double tt = t;
      if (a1 <= a0) a1 += 2 * M_PI;       // wrapped interval
      if (tt < a0) tt += 2 * M_PI;
      const double w = (a1 > a0) ? (tt - a0) / (a1 - a0) : 0.0;
      tr[b] = (1.0 - w) * ms.traces[s][order[lo]] + w * ms.traces[s][order[hi]];
    }
    out.traces.push_back(std::move(tr));
  }
  return out;
}

ParameterField DotProblem::embed(const Eigen::VectorXd& x) const {
  return embed_free(x, base, free_map);
}

Eigen::VectorXd DotProblem::theta(const Eigen::VectorXd& x) const {
  const ParameterField f = embed(x);
  system->refactor(f);
  return forward_map(*system, sources).flatten();
}

Eigen::MatrixXd DotProblem::jacobian_at(const Eigen::VectorXd& x) const {
  return adjoint_jacobian(*mesh, embed(x), wavenumber, sources, free_map).J;
}

double DotProblem::regularizer_value(const Eigen::VectorXd& x) const {
  return dot_reg(embed(x), reg, adjacency);
}

DotProblem make_dot_problem(std::shared_ptr<const Mesh> coarse, const ExperimentConfig& cfg) {
  DotProblem dp;
  dp.mesh = std::move(coarse);
  dp.wavenumber = cfg.wavenumber;
  dp.sources = trig_source_bank(*dp.mesh, cfg.source_count);
  dp.base.mesh = dp.mesh.get();
  dp.base.boundary_background = cfg.phantom.background;
  dp.base.D = Eigen::VectorXd::Constant(dp.mesh->triangle_count(), cfg.phantom.background.D);
  dp.base.mu = Eigen::VectorXd::Constant(dp.mesh->triangle_count(), cfg.phantom.background.mu);
  dp.free_map = free_parameter_index(dp.base);
  if (dp.free_map.count() == 0)
    throw std::runtime_error("experiment: reconstruction mesh has no interior triangles");
  dp.adjacency = edge_adjacency(*dp.mesh);
  dp.laplacian = graph_laplacian(*dp.mesh, dp.adjacency, dp.free_map);
  dp.background_free = pack_free(dp.base, dp.free_map);
  dp.reg = cfg.reg;

  const int n = dp.free_map.count();
  Eigen::VectorXd lower(2 * n), upper(2 * n);
  const double mu_floor = 1e-3 * cfg.phantom.background.mu;  // positivity floor for projection
  for (int i = 0; i < n; ++i) {
    lower[i] = cfg.bounds.D_min;
    upper[i] = cfg.bounds.D_max;
    lower[n + i] = mu_floor;
    upper[n + i] = cfg.bounds.mu_max;
  }
  dp.irgn_bounds = BoxBounds{lower, upper};
  dp.lower = lower;
  dp.lower.segment(n, n).setZero();  // MCMC support: mu > 0 via the positivity indicator
  dp.upper = upper;

  dp.system = std::make_shared<ForwardSystem>(*dp.mesh, dp.base, dp.wavenumber);
  return dp;
}

SimulationArtifacts simulate_measurements(const ExperimentConfig& cfg) {
  SimulationArtifacts sim;
  sim.fine = std::make_shared<const Mesh>(cfg.fine_mesh.build());
  sim.coarse = std::make_shared<const Mesh>(cfg.coarse_mesh.build());

  // structural inverse-crime guard
  if (sim.fine->triangle_count() == sim.coarse->triangle_count()) {
    bool identical = sim.fine->node_count() == sim.coarse->node_count();
    for (int i = 0; identical && i < sim.fine->node_count(); ++i)
      identical = sim.fine->nodes[i].x == sim.coarse->nodes[i].x &&
                  sim.fine->nodes[i].y == sim.coarse->nodes[i].y;
    if (identical)
      throw std::runtime_error("experiment: simulation and reconstruction meshes must differ");
  }

  sim.truth_fine = rasterize(cfg.phantom, *sim.fine, cfg.bounds);
  const SourceBank fine_sources = trig_source_bank(*sim.fine, cfg.source_count);
  const MeasurementSet ms_fine =
      forward_map(*sim.fine, sim.truth_fine, cfg.wavenumber, fine_sources);
  sim.clean = interp_boundary_trace(ms_fine, *sim.fine, *sim.coarse);

  NoisyMeasurements noisy = add_noise(sim.clean, cfg.noise_level, cfg.noise_seed());
  sim.noisy = std::move(noisy.measurements);
  sim.xi = noisy.xi;

  sim.truth_coarse_D = transfer_field(*sim.fine, sim.truth_fine.D, *sim.coarse);
  sim.truth_coarse_mu = transfer_field(*sim.fine, sim.truth_fine.mu, *sim.coarse);
  return sim;
}

namespace {

std::string source_description(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << cfg.source_count << " trigonometric boundary fluxes cos(n theta), sin(n theta), n = 1..";
  os << (cfg.source_count + 1) / 2;
  return os.str();
}

}  // namespace

void save_simulation(const SimulationArtifacts& sim, const ExperimentConfig& cfg,
                     const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_mesh(*sim.fine, dir + "/mesh_fine.txt");
  save_mesh(*sim.coarse, dir + "/mesh_coarse.txt");
  write_field_csv(dir + "/truth_fine.csv", sim.truth_fine);
  ParameterField coarse_truth;
  coarse_truth.mesh = sim.coarse.get();
  coarse_truth.D = sim.truth_coarse_D;
  coarse_truth.mu = sim.truth_coarse_mu;
  coarse_truth.boundary_background = sim.truth_fine.boundary_background;
  write_field_csv(dir + "/truth_coarse.csv", coarse_truth);
  write_measurements_csv(dir + "/measurements.csv", sim.noisy);
  MeasurementMeta meta;
  meta.wavenumber = cfg.wavenumber;
  meta.source_description = source_description(cfg);
  meta.noise_level = cfg.noise_level;
  meta.xi = sim.xi;
  meta.sigma = sim.noisy.sigma;
  write_measurement_meta(dir + "/measurements.csv.meta", meta);
}

SimulationArtifacts load_simulation(const ExperimentConfig& cfg, const std::string& dir) {
  SimulationArtifacts sim;
  sim.fine = std::make_shared<const Mesh>(load_mesh(dir + "/mesh_fine.txt"));
  sim.coarse = std::make_shared<const Mesh>(load_mesh(dir + "/mesh_coarse.txt"));
  read_field_csv(dir + "/truth_fine.csv", sim.truth_fine.D, sim.truth_fine.mu);
  sim.truth_fine.mesh = sim.fine.get();
  sim.truth_fine.boundary_background = cfg.phantom.background;
  read_field_csv(dir + "/truth_coarse.csv", sim.truth_coarse_D, sim.truth_coarse_mu);
  sim.noisy = read_measurements_csv(dir + "/measurements.csv");
  const MeasurementMeta meta = read_measurement_meta(dir + "/measurements.csv.meta");
  sim.noisy.sigma = meta.sigma;
  sim.xi = meta.xi;
  if (sim.noisy.boundary_node_count != sim.coarse->boundary_node_count())
    throw std::runtime_error("experiment: measurements do not match the coarse mesh boundary");
  return sim;
}

std::string ReconstructionReport::summary() const {
  std::ostringstream os;
  os << "engine: " << engine << "\n";
  os << "config_hash: " << config_hash << "\n";
  os << "xi: " << format_double(xi) << "\n";
  os << "residual: " << format_double(residual) << "\n";
  os << "mu_relative_L1: " << format_double(mu_error_l1) << "\n";
  os << "mu_relative_L2: " << format_double(mu_error_l2) << "\n";
  os << "D_relative_L1: " << format_double(D_error_l1) << "\n";
  os << "D_relative_L2: " << format_double(D_error_l2) << "\n";
  os << "runtime_seconds: " << runtime_seconds << "\n";
  if (engine == "irgn") {
    os << "iterations: " << irgn_iterations << "\n";
    os << "termination: " << irgn_termination << "\n";
  } else {
    os << "chain: m=" << chain_schedule.m << " M=" << chain_schedule.adaptions
       << " B=" << chain_schedule.burn_in << " N=" << chain_schedule.total << "\n";
    os << "post_pilot_acceptance: " << format_double(post_pilot_acceptance) << "\n";
  }
  return os.str();
}

ReconstructionReport reconstruct(const ExperimentConfig& cfg, const SimulationArtifacts& sim,
                                 bool write_artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  DotProblem dp = make_dot_problem(sim.coarse, cfg);
  const Eigen::VectorXd g = sim.noisy.flatten();
  const double xi = cfg.xi_override >= 0 ? cfg.xi_override : sim.xi;

  ReconstructionReport report;
  report.engine = cfg.engine;
  report.config_hash = cfg.hash();
  report.xi = xi;
  report.truth_D = sim.truth_coarse_D;
  report.truth_mu = sim.truth_coarse_mu;

  IrgnProblem ip;
  ip.theta = [&dp](const Eigen::VectorXd& x) { return dp.theta(x); };
  ip.jacobian = [&dp](const Eigen::VectorXd& x) { return dp.jacobian_at(x); };
  ip.laplacian = dp.laplacian;
  ip.anchor = dp.background_free;
  ip.bounds = dp.irgn_bounds;

  Eigen::VectorXd x;
  Chain chain;
  if (cfg.engine == "irgn") {
    const IrgnReport ir = run_irgn(ip, g, xi, cfg.irgn, dp.background_free);
    x = ir.x;
    report.irgn_iterations = ir.iterations;
    report.irgn_termination = ir.termination;
    report.discrepancy_fired = ir.discrepancy_fired;
    report.residual_history = ir.residual_norms;
    if (write_artifacts) {
      namespace fs = std::filesystem;
      fs::create_directories(cfg.output_dir);
      write_residuals_csv(cfg.output_dir + "/residuals.csv", ir);
    }
  } else {
    Eigen::VectorXd x0 = dp.background_free;
    if (cfg.mcmc.start == "irgn3") {
      IrgnConfig warm = cfg.irgn;
      warm.max_iterations = 3;
      x0 = run_irgn(ip, g, 0.0, warm, dp.background_free).x;
    }
    PosteriorSpec ps;
    ps.theta = ip.theta;
    ps.g = g;
    ps.sigma = sim.noisy.sigma;
    if (ps.sigma.size() != g.size())
      throw std::runtime_error("experiment: measurements carry no noise model");
    ps.regularizer = [&dp](const Eigen::VectorXd& v) { return dp.regularizer_value(v); };
    ps.prior_alpha = cfg.mcmc.prior_alpha;
    ps.lower = dp.lower;
    ps.upper = dp.upper;

    const int n2 = static_cast<int>(dp.background_free.size());
    Eigen::MatrixXd cov0 = Eigen::MatrixXd::Zero(n2, n2);
    for (int i = 0; i < n2; ++i) {
      const double s = cfg.mcmc.proposal_scale * dp.background_free[i];
      cov0(i, i) = s * s;
    }
    chain = run_pilot_metropolis(ps, cfg.mcmc.schedule, x0, cov0, cfg.mcmc.target_acceptance,
                                 cfg.mcmc.epsilon, cfg.chain_seed(), cfg.mcmc.thin);
    x = posterior_mean(chain);
    report.has_chain = true;
    report.chain_schedule = cfg.mcmc.schedule;
    long acc = 0, cnt = 0;
    for (long i = chain.pilot_end(); i < static_cast<long>(chain.accepted.size()); ++i, ++cnt)
      acc += chain.accepted[i];
    report.post_pilot_acceptance = cnt ? static_cast<double>(acc) / cnt : 0.0;
  }

  report.recovered = dp.embed(x);
  report.residual = (dp.theta(x) - g).norm();
  report.mu_error_l1 = relative_error(*sim.coarse, sim.truth_coarse_mu, report.recovered.mu, 1);
  report.mu_error_l2 = relative_error(*sim.coarse, sim.truth_coarse_mu, report.recovered.mu, 2);
  report.D_error_l1 = relative_error(*sim.coarse, sim.truth_coarse_D, report.recovered.D, 1);
  report.D_error_l2 = relative_error(*sim.coarse, sim.truth_coarse_D, report.recovered.D, 2);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (write_artifacts) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    export_field(*sim.coarse, report.recovered, cfg.output_dir + "/recon");
    if (report.has_chain) {
      write_chain_csv(cfg.output_dir + "/chain.csv", chain);
      std::ostringstream cov;
      cov << "epoch,cov_diag_mean\n";
      for (size_t j = 0; j < chain.cov_diag_epochs.size(); ++j)
        cov << (j + 1) << "," << format_double(chain.cov_diag_epochs[j].mean()) << "\n";
      write_text_file(cfg.output_dir + "/cov_epochs.csv", cov.str());
      try {
        write_text_file(cfg.output_dir + "/diagnostics.txt", diagnostics(chain).summary());
      } catch (const std::exception& e) {
        write_text_file(cfg.output_dir + "/diagnostics.txt",
                        std::string("diagnostics unavailable: ") + e.what() + "\n");
      }
    }
    write_text_file(cfg.output_dir + "/report.txt", report.summary());
  }
  return report;
}

ReconstructionReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts) {
  const SimulationArtifacts sim = simulate_measurements(cfg);
  if (write_artifacts) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    save_simulation(sim, cfg, cfg.output_dir);
    std::ostringstream manifest;
    manifest << "config_hash " << cfg.hash() << "\n\n" << cfg.canonical_text();
    write_text_file(cfg.output_dir + "/manifest.txt", manifest.str());
  }
  return reconstruct(cfg, sim, write_artifacts);
}

SweepResult run_sweep(const ExperimentConfig& cfg, bool write_artifacts) {
  if (cfg.sweep_prior_alpha.empty())
    throw std::runtime_error("sweep: config lists no sweep.prior_alpha grid");
  const SimulationArtifacts sim = simulate_measurements(cfg);
  SweepResult result;
  double best = 1e300;
  for (size_t i = 0; i < cfg.sweep_prior_alpha.size(); ++i) {
    ExperimentConfig point = cfg;
    point.mcmc.prior_alpha = cfg.sweep_prior_alpha[i];
    point.output_dir = cfg.output_dir + "/sweep_" + std::to_string(i);
    const ReconstructionReport rep = reconstruct(point, sim, write_artifacts);
    SweepEntry entry;
    entry.value = point.mcmc.prior_alpha;
    entry.mu_error_l2 = rep.mu_error_l2;
    entry.D_error_l2 = rep.D_error_l2;
    entry.score = 0.5 * (rep.mu_error_l2 + rep.D_error_l2);
    if (entry.score < best) {
      best = entry.score;
      result.best_index = static_cast<int>(i);
    }
    result.entries.push_back(entry);
  }
  if (write_artifacts) {
    std::ostringstream os;
    os << "prior_alpha,mu_relative_L2,D_relative_L2,score\n";
    for (const auto& e : result.entries)
      os << format_double(e.value) << "," << format_double(e.mu_error_l2) << ","
         << format_double(e.D_error_l2) << "," << format_double(e.score) << "\n";
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    write_text_file(cfg.output_dir + "/sweep.csv", os.str());
  }
  return result;
}

}  // namespace dot
