#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dot/config.hpp"
#include "dot/forward.hpp"
#include "dot/irgn.hpp"
#include "dot/mcmc.hpp"
#include "dot/mesh.hpp"
#include "dot/phantom.hpp"
#include "dot/regularizers.hpp"

namespace dot {

struct NoisyMeasurements {
  MeasurementSet measurements;  // sigma attached
  double xi = 0;                // realized ||g - g_noisy||
};

/// Relative additive Gaussian noise per flattened real component:
/// g_noisy_i = g_i + level |g_i| z_i. The recorded noise model is
/// sigma_i = level |g_i| floored at level * mean|g| (a tiny absolute floor is
/// used when level is zero so the likelihood stays well defined).
NoisyMeasurements add_noise(const MeasurementSet& clean, double level, std::uint64_t seed);

/// Triangle-area-weighted relative L_p error, p in {1, 2}.
double relative_error(const Mesh& mesh, const Eigen::VectorXd& truth, const Eigen::VectorXd& recon,
                      int p);

/// Re-samples a boundary trace between two discretizations of the same
/// simply connected domain by linear interpolation in boundary angle. This is
/// what lets measurements simulated on the fine mesh drive a reconstruction on
/// the coarse mesh without sharing the discretization.
MeasurementSet interp_boundary_trace(const MeasurementSet& ms, const Mesh& src, const Mesh& dst);

/// The coarse-mesh inverse problem: embeds free vectors into parameter fields,
/// evaluates the forward map against a cached factorization, and exposes the
/// Jacobian, regularizer, Laplacian, and bounds the engines consume.
struct DotProblem {
  std::shared_ptr<const Mesh> mesh;
  double wavenumber = 0;
  SourceBank sources;
  ParameterField base;  // constant background, pinned on boundary-adjacent triangles
  FreeIndexMap free_map;
  EdgeAdjacency adjacency;
  Eigen::SparseMatrix<double> laplacian;
  Eigen::VectorXd background_free;
  BoxBounds irgn_bounds;            // includes a small positivity floor on mu
  Eigen::VectorXd lower, upper;     // MCMC support box (mu lower bound 0, exclusive)
  RegularizerSpec reg;
  std::shared_ptr<ForwardSystem> system;

  ParameterField embed(const Eigen::VectorXd& x) const;
  Eigen::VectorXd theta(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd jacobian_at(const Eigen::VectorXd& x) const;
  double regularizer_value(const Eigen::VectorXd& x) const;
};

DotProblem make_dot_problem(std::shared_ptr<const Mesh> coarse, const ExperimentConfig& cfg);

struct SimulationArtifacts {
  std::shared_ptr<const Mesh> fine;
  std::shared_ptr<const Mesh> coarse;
  ParameterField truth_fine;
  Eigen::VectorXd truth_coarse_D;  // fine truth transferred to the coarse mesh
  Eigen::VectorXd truth_coarse_mu;
  MeasurementSet clean;  // on the coarse boundary layout
  MeasurementSet noisy;
  double xi = 0;
};

/// Simulate on the fine mesh, interpolate the trace onto the coarse boundary,
/// add noise, and transfer the truth for metric evaluation.
SimulationArtifacts simulate_measurements(const ExperimentConfig& cfg);

void save_simulation(const SimulationArtifacts& sim, const ExperimentConfig& cfg,
                     const std::string& dir);
SimulationArtifacts load_simulation(const ExperimentConfig& cfg, const std::string& dir);

struct ReconstructionReport {
  ParameterField recovered;
  Eigen::VectorXd truth_D, truth_mu;  // coarse-mesh truth used for the metrics
  double xi = 0;
  double residual = 0;  // ||theta(recovered) - g_noisy||
  double mu_error_l1 = 0, mu_error_l2 = 0;
  double D_error_l1 = 0, D_error_l2 = 0;
  double runtime_seconds = 0;
  std::string engine;
  int irgn_iterations = 0;
  std::string irgn_termination;
  bool discrepancy_fired = false;
  std::vector<double> residual_history;
  bool has_chain = false;
  McmcSchedule chain_schedule;
  double post_pilot_acceptance = 0;
  std::uint64_t config_hash = 0;

  std::string summary() const;
};

/// Reconstruction stage against existing simulation artifacts.
ReconstructionReport reconstruct(const ExperimentConfig& cfg, const SimulationArtifacts& sim,
                                 bool write_artifacts);

/// Full pipeline: simulate, reconstruct, metrics, artifact export.
ReconstructionReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts = true);

struct SweepEntry {
  double value = 0;  // grid value (prior strength)
  double mu_error_l2 = 0;
  double D_error_l2 = 0;
  double score = 0;  // mean of the two
};
struct SweepResult {
  std::vector<SweepEntry> entries;
  int best_index = -1;
};

/// Grid sweep over the prior strength, scored by relative L2 error against the
/// known simulated truth. One simulation feeds every grid point.
SweepResult run_sweep(const ExperimentConfig& cfg, bool write_artifacts);

}  // namespace dot
