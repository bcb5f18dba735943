#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dot {

/// Unnormalized log posterior: Gaussian likelihood with diagonal covariance
/// plus a regularizing prior restricted to the positive orthant (optionally
/// intersected with a box).
struct PosteriorSpec {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> theta;
  Eigen::VectorXd g;
  Eigen::VectorXd sigma;  // noise std per measurement component, > 0
  std::function<double(const Eigen::VectorXd&)> regularizer;  // may be null (R = 0)
  double prior_alpha = 0.0;
  Eigen::VectorXd lower;  // optional box bounds; emptiness means positivity only
  Eigen::VectorXd upper;

  bool in_support(const Eigen::VectorXd& x) const;
};

/// log pi(x) = -1/2 (g - theta(x))^T C^{-1} (g - theta(x)) - alpha R(x) on the
/// support, -infinity outside. A forward-solve failure is logged and treated
/// as -infinity.
double log_posterior(const Eigen::VectorXd& x, const PosteriorSpec& spec);

/// min{ exp(log pi(y) - log pi(x)), 1 } for a symmetric proposal; zero when y
/// has zero posterior density. Requires log pi(x) > -infinity.
double acceptance_prob(double log_pi_x, double log_pi_y);

/// The three-case pilot adaption rule: scales the proposal covariance by
/// (1 + epsilon), 1, or (1 - epsilon) according to whether the epoch
/// acceptance ratio exceeded, met, or fell short of the target.
Eigen::MatrixXd pam_adapt(const Eigen::MatrixXd& cov, double epoch_acceptance,
                          double target_acceptance, double epsilon);

struct McmcSchedule {
  int m = 50;            // iterations per adaption epoch
  int adaptions = 600;   // M
  long burn_in = 100000; // B
  long total = 150000;   // N

  long pilot_end() const { return static_cast<long>(m) * adaptions; }
};

/// Sample store. Samples are recorded every `thin` iterations (iteration 0,
/// the start state, is always stored); the post-burn-in running sum is exact
/// regardless of thinning.
struct Chain {
  int dim = 0;
  McmcSchedule schedule;
  std::uint64_t seed = 0;
  int thin = 1;

  std::vector<std::uint8_t> accepted;       // flag c_i for i = 1..N
  std::vector<Eigen::VectorXd> samples;     // stored states
  std::vector<long> sample_iterations;      // iteration index per stored state
  Eigen::VectorXd post_burn_sum;
  long post_burn_count = 0;
  std::vector<Eigen::VectorXd> cov_diag_epochs;  // diag of the proposal covariance per epoch
  std::vector<double> epoch_acceptance;          // bar a_j per epoch

  long pilot_end() const { return schedule.pilot_end(); }
};

/// Algorithm: random-walk Metropolis with a Gaussian proposal whose covariance
/// is rescaled by the pilot rule every m iterations during the first m*M
/// iterations and frozen afterwards. Requires 1 < m*M < B < N and a start
/// state of positive posterior density. Fully reproducible from the seed.
Chain run_pilot_metropolis(const PosteriorSpec& spec, const McmcSchedule& schedule,
                           const Eigen::VectorXd& x0, const Eigen::MatrixXd& cov0,
                           double target_acceptance, double epsilon, std::uint64_t seed,
                           int thin = 1);

/// Sample mean over iterations strictly after the burn-in.
Eigen::VectorXd posterior_mean(const Chain& chain);

struct DiagnosticsReport {
  double post_pilot_acceptance = 0;
  bool degenerate = false;
  std::vector<int> iact_coordinates;
  std::vector<double> iact;  // integrated autocorrelation (in stored-sample units)
  std::vector<double> geweke_z;
  double geweke_within3_fraction = 0;
  std::vector<double> acceptance_trace;  // windowed (per epoch of m iterations)

  std::string summary() const;
};

/// Autocorrelation, Geweke first-10%-vs-last-50% z-scores, and acceptance
/// traces over the post-burn-in samples. Requires N - B >= 1000.
DiagnosticsReport diagnostics(const Chain& chain);

}  // namespace dot
