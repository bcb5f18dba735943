#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dot/irgn.hpp"
#include "dot/mcmc.hpp"
#include "dot/mesh.hpp"
#include "dot/phantom.hpp"
#include "dot/regularizers.hpp"

namespace dot {

/// Where a mesh comes from: generated disk or a mesh file.
struct MeshSpec {
  enum class Kind { Generate, File };
  Kind kind = Kind::Generate;
  double radius = 25.0;
  int target = 541;
  std::uint64_t seed = 1;
  std::string path;

  Mesh build() const;
  std::string describe() const;
};

struct McmcConfig {
  McmcSchedule schedule{50, 600, 100000, 150000};
  double prior_alpha = 20.0;
  double target_acceptance = 0.234;
  double epsilon = 0.05;
  double proposal_scale = 0.01;  // proposal std per parameter, as a fraction of its background
  std::string start = "irgn3";   // "irgn3": three Gauss-Newton iterations; or "background"
  int thin = 10;
};

/// Everything an experiment run needs, parsed from the versioned key-value
/// config file (format documented in the README) plus CLI overrides.
struct ExperimentConfig {
  std::string engine = "irgn";  // irgn | mcmc
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool fast = false;

  MeshSpec fine_mesh{MeshSpec::Kind::Generate, 25.0, 2097, 11, {}};
  MeshSpec coarse_mesh{MeshSpec::Kind::Generate, 25.0, 541, 7, {}};

  double wavenumber = 2.936e-3;
  int source_count = 16;

  Phantom phantom;
  ParameterBounds bounds;

  double noise_level = 0.01;

  RegularizerSpec reg;  // backgrounds are synced to the phantom background

  IrgnConfig irgn;
  double xi_override = -1;  // < 0: use the realized noise norm

  McmcConfig mcmc;

  std::vector<double> sweep_prior_alpha;  // grid for the sweep subcommand

  static ExperimentConfig from_file(const std::string& path);

  /// Shrinks the chain schedule (m=25, M=100, B=10000, N=25000) and caps the
  /// Gauss-Newton iteration count; used by --fast and CI.
  void apply_fast_profile();

  /// Deterministic serialization of every effective value; the FNV-1a hash of
  /// this text identifies the run in output manifests.
  std::string canonical_text() const;
  std::uint64_t hash() const;

  // derived seeds, so --seed varies noise/chain realizations but not geometry
  std::uint64_t noise_seed() const { return seed * 0x9E3779B97F4A7C15ull + 1; }
  std::uint64_t chain_seed() const { return seed * 0x9E3779B97F4A7C15ull + 2; }
};

}  // namespace dot
