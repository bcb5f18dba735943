#include "dot/mcmc.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dot {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

bool PosteriorSpec::in_support(const Eigen::VectorXd& x) const {
  if ((x.array() <= 0.0).any()) return false;
  if (lower.size() && (x.array() < lower.array()).any()) return false;
  if (upper.size() && (x.array() > upper.array()).any()) return false;
  return true;
}

double log_posterior(const Eigen::VectorXd& x, const PosteriorSpec& spec) {
  if (!spec.in_support(x)) return kNegInf;
  double lp = 0;
  try {
    const Eigen::VectorXd residual = spec.g - spec.theta(x);
    if (residual.size() != spec.sigma.size())
      throw std::runtime_error("log_posterior: sigma length mismatch");
    lp = -0.5 * (residual.array() / spec.sigma.array()).square().sum();
  } catch (const std::exception& e) {
    std::cerr << "[mcmc] warning: forward evaluation failed (" << e.what()
              << "); treating state as zero density\n";
    return kNegInf;
  }
  if (spec.regularizer) lp -= spec.prior_alpha * spec.regularizer(x);
  if (!std::isfinite(lp)) return kNegInf;
  return lp;
}

double acceptance_prob(double log_pi_x, double log_pi_y) {
  if (!(log_pi_x > kNegInf))
    throw std::runtime_error("acceptance_prob: current state has zero density");
  if (log_pi_y == kNegInf) return 0.0;
  const double diff = log_pi_y - log_pi_x;
  return diff >= 0 ? 1.0 : std::exp(diff);
}

Eigen::MatrixXd pam_adapt(const Eigen::MatrixXd& cov, double epoch_acceptance,
                          double target_acceptance, double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw std::runtime_error("pam_adapt: epsilon must be in (0,1)");
  if (!(epoch_acceptance >= 0 && epoch_acceptance <= 1))
    throw std::runtime_error("pam_adapt: acceptance ratio must be in [0,1]");
  if (epoch_acceptance > target_acceptance) return (1.0 + epsilon) * cov;
  if (epoch_acceptance == target_acceptance) return cov;
  return (1.0 - epsilon) * cov;
}

Chain run_pilot_metropolis(const PosteriorSpec& spec, const McmcSchedule& schedule,
                           const Eigen::VectorXd& x0, const Eigen::MatrixXd& cov0,
                           double target_acceptance, double epsilon, std::uint64_t seed,
                           int thin) {
  const int dim = static_cast<int>(x0.size());
  if (schedule.m < 1 || schedule.adaptions < 1 || schedule.pilot_end() <= 1 ||
      schedule.pilot_end() >= schedule.burn_in || schedule.burn_in >= schedule.total)
    throw std::runtime_error("mcmc: schedule must satisfy 1 < m*M < B < N");
  if (thin < 1) throw std::runtime_error("mcmc: thin must be >= 1");
  if (cov0.rows() != dim || cov0.cols() != dim)
    throw std::runtime_error("mcmc: covariance dimension mismatch");

  // diagonal covariances (the default) get O(dim) proposals
  const bool diagonal = cov0.isDiagonal(0.0);
  Eigen::MatrixXd cov = cov0;
  Eigen::MatrixXd chol;  // lower factor, dense case only
  Eigen::VectorXd diag_std;
  auto refresh_factor = [&]() {
    if (diagonal) {
      if ((cov.diagonal().array() <= 0).any())
        throw std::runtime_error("mcmc: proposal covariance is not positive definite");
      diag_std = cov.diagonal().cwiseSqrt();
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("mcmc: proposal covariance is not positive definite");
      chol = llt.matrixL();
    }
  };
  refresh_factor();

  double lp_x = log_posterior(x0, spec);
  if (!(lp_x > kNegInf)) throw std::runtime_error("mcmc: start state has zero posterior density");

  Chain chain;
  chain.dim = dim;
  chain.schedule = schedule;
  chain.seed = seed;
  chain.thin = thin;
  chain.accepted.reserve(schedule.total);
  chain.post_burn_sum = Eigen::VectorXd::Zero(dim);
  chain.samples.push_back(x0);
  chain.sample_iterations.push_back(0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Eigen::VectorXd x = x0, z(dim), y(dim);
  int epoch_accepted = 0;
  int zero_acceptance_epochs = 0;
  bool warned_zero_acceptance = false;
  const long pilot_end = schedule.pilot_end();

  for (long i = 1; i <= schedule.total; ++i) {
    for (int d = 0; d < dim; ++d) z[d] = normal(rng);
    if (diagonal)
      y = x + diag_std.cwiseProduct(z);
    else
      y = x + chol * z;
    const double u = uniform(rng);

    const double lp_y = log_posterior(y, spec);
    const double a = acceptance_prob(lp_x, lp_y);
    const bool accept = (lp_y > kNegInf) && (u <= a);
    if (accept) {
      x = y;
      lp_x = lp_y;
      ++epoch_accepted;
    }
    chain.accepted.push_back(accept ? 1 : 0);

    if (i > schedule.burn_in) {
      chain.post_burn_sum += x;
      ++chain.post_burn_count;
    }
    if (i % thin == 0 || i == schedule.total) {
      chain.samples.push_back(x);
      chain.sample_iterations.push_back(i);
    }

    if (i % schedule.m == 0) {
      const double abar = static_cast<double>(epoch_accepted) / schedule.m;
      chain.epoch_acceptance.push_back(abar);
      epoch_accepted = 0;
      if (i <= pilot_end) {
        cov = pam_adapt(cov, abar, target_acceptance, epsilon);
        refresh_factor();
        zero_acceptance_epochs = (abar == 0.0) ? zero_acceptance_epochs + 1 : 0;
        if (zero_acceptance_epochs >= 10 && !warned_zero_acceptance) {
          std::cerr << "[mcmc] warning: zero acceptance over 10 consecutive pilot epochs;"
                       " proposal calibration is off\n";
          warned_zero_acceptance = true;
        }
      }
      chain.cov_diag_epochs.push_back(cov.diagonal());
    }
  }
  return chain;
}

Eigen::VectorXd posterior_mean(const Chain& chain) {
  if (chain.post_burn_count <= 0) throw std::runtime_error("posterior_mean: nothing after burn-in");
  return chain.post_burn_sum / static_cast<double>(chain.post_burn_count);
}

namespace {

// Integrated autocorrelation via Geyer's initial positive sequence.
double integrated_autocorrelation(const std::vector<double>& v) {
  const long n = static_cast<long>(v.size());
  if (n < 4) return 1.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= n;
  const long max_lag = std::min<long>(n - 2, 1000);
  std::vector<double> gamma(max_lag + 1, 0.0);
  for (long lag = 0; lag <= max_lag; ++lag) {
    double s = 0;
    for (long i = 0; i + lag < n; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
    gamma[lag] = s / n;
  }
  if (gamma[0] <= 0) return 1.0;  // constant series
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (long t = 0; 2 * t + 1 <= max_lag; ++t) {
    double pair = (gamma[2 * t] + gamma[2 * t + 1]) / gamma[0];
    if (pair <= 0) break;                       // initial positive sequence
    pair = std::min(pair, prev_pair);           // enforce monotonicity
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return std::max(tau, 1e-12);
}

// standard error of the mean by batch means
double batch_mean_se2(const double* data, long n) {
  const int nbatch = static_cast<int>(std::min<long>(20, std::max<long>(2, n / 10)));
  const long blen = n / nbatch;
  double grand = 0;
  std::vector<double> bm(nbatch, 0.0);
  for (int b = 0; b < nbatch; ++b) {
    double s = 0;
    for (long i = 0; i < blen; ++i) s += data[b * blen + i];
    bm[b] = s / blen;
    grand += bm[b];
  }
  grand /= nbatch;
  double var = 0;
  for (int b = 0; b < nbatch; ++b) var += (bm[b] - grand) * (bm[b] - grand);
  var /= (nbatch - 1);
  return var / nbatch;
}

}  // namespace

DiagnosticsReport diagnostics(const Chain& chain) {
  const long post = chain.schedule.total - chain.schedule.burn_in;
  if (post < 1000)
    throw std::runtime_error("diagnostics: chain too short for windowing (need N - B >= 1000)");

  DiagnosticsReport rep;

  // post-pilot acceptance
  long count = 0, acc = 0;
  for (long i = chain.pilot_end(); i < static_cast<long>(chain.accepted.size()); ++i) {
    acc += chain.accepted[i];
    ++count;
  }
  rep.post_pilot_acceptance = count ? static_cast<double>(acc) / count : 0.0;
  rep.acceptance_trace = chain.epoch_acceptance;

  // stored samples strictly after burn-in
  std::vector<const Eigen::VectorXd*> pb;
  for (size_t s = 0; s < chain.samples.size(); ++s)
    if (chain.sample_iterations[s] > chain.schedule.burn_in) pb.push_back(&chain.samples[s]);
  const long n = static_cast<long>(pb.size());
  if (n < 200)
    throw std::runtime_error("diagnostics: too few stored post-burn-in samples (raise N or lower thin)");

  bool constant = true;
  for (long i = 1; i < n && constant; ++i)
    if (*pb[i] != *pb[0]) constant = false;
  rep.degenerate = constant || rep.post_pilot_acceptance == 0.0;

  // coordinate subset for the autocorrelation scan
  const int dim = chain.dim;
  std::vector<int> coords;
  if (dim <= 32)
    for (int d = 0; d < dim; ++d) coords.push_back(d);
  else
    for (int j = 0; j < 16; ++j) coords.push_back(static_cast<int>(static_cast<long>(j) * dim / 16));
  rep.iact_coordinates = coords;

  std::vector<double> series(n);
  for (int d : coords) {
    for (long i = 0; i < n; ++i) series[i] = (*pb[i])[d];
    rep.iact.push_back(integrated_autocorrelation(series));
  }

  // Geweke: first 10% vs last 50%
  const long n1 = std::max<long>(n / 10, 20);
  const long n2 = std::max<long>(n / 2, 20);
  int within = 0;
  for (int d = 0; d < dim; ++d) {
    std::vector<double> a(n1), b(n2);
    for (long i = 0; i < n1; ++i) a[i] = (*pb[i])[d];
    for (long i = 0; i < n2; ++i) b[i] = (*pb[n - n2 + i])[d];
    double m1 = 0, m2 = 0;
    for (double x : a) m1 += x;
    for (double x : b) m2 += x;
    m1 /= n1;
    m2 /= n2;
    const double se2 = batch_mean_se2(a.data(), n1) + batch_mean_se2(b.data(), n2);
    const double z = se2 > 0 ? (m1 - m2) / std::sqrt(se2) : 0.0;
    rep.geweke_z.push_back(z);
    if (std::abs(z) < 3.0) ++within;
  }
  rep.geweke_within3_fraction = dim ? static_cast<double>(within) / dim : 1.0;
  return rep;
}

std::string DiagnosticsReport::summary() const {
  std::ostringstream os;
  os << "post-pilot acceptance ratio: " << post_pilot_acceptance << "\n";
  os << "degenerate chain: " << (degenerate ? "yes" : "no") << "\n";
  os << "integrated autocorrelation (stored-sample units):\n";
  for (size_t i = 0; i < iact.size(); ++i)
    os << "  coordinate " << iact_coordinates[i] << ": " << iact[i] << "\n";
  os << "Geweke |z| < 3 fraction: " << geweke_within3_fraction << "\n";
  os << "acceptance trace windows: " << acceptance_trace.size() << "\n";
  return os.str();
}

}  // namespace dot
