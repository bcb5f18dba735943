#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dot/forward.hpp"
#include "dot/irgn.hpp"
#include "dot/mcmc.hpp"
#include "dot/mesh.hpp"
#include "dot/phantom.hpp"

namespace dot {

/// Shortest round-trip-exact decimal form ("%.17g").
std::string format_double(double v);

std::uint64_t fnv1a_hash(std::string_view s);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Field CSV: header `triangle,D,mu`, one row per triangle.
void write_field_csv(const std::string& path, const ParameterField& field);
void read_field_csv(const std::string& path, Eigen::VectorXd& D, Eigen::VectorXd& mu);

/// Measurement CSV: header `source,node,re,im`; the sidecar metadata record
/// holds the wavenumber, source-bank description, flattening order, and noise
/// model (level, realized xi, per-entry sigma).
void write_measurements_csv(const std::string& path, const MeasurementSet& ms);
MeasurementSet read_measurements_csv(const std::string& path);

struct MeasurementMeta {
  double wavenumber = 0;
  std::string source_description;
  std::string flattening = "source-major, boundary-node-minor, real-then-imaginary";
  double noise_level = 0;
  double xi = 0;
  Eigen::VectorXd sigma;
};
void write_measurement_meta(const std::string& path, const MeasurementMeta& meta);
MeasurementMeta read_measurement_meta(const std::string& path);

/// Chain CSV: commented header carrying the schedule, then one row
/// `iteration,accepted,x_0,...` per stored (thinned) sample. Loading restores
/// the stored samples and windowed acceptance; posterior_mean over a loaded
/// chain averages the stored post-burn-in samples.
void write_chain_csv(const std::string& path, const Chain& chain);
Chain read_chain_csv(const std::string& path);

/// Per-iteration residual history of a Gauss-Newton run.
void write_residuals_csv(const std::string& path, const IrgnReport& report);

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<unsigned char>& rgb);

struct FieldRaster {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> rgb;  // row-major, 3 bytes per pixel
  std::vector<int> tri_index;      // triangle per pixel, -1 outside the mesh
};

/// Rasterizes a per-triangle field with a fixed colormap plus a colorbar strip
/// on the right. Deterministic in (mesh, values, size, range).
FieldRaster render_field(const Mesh& mesh, const Eigen::VectorXd& values, int width, int height,
                         double vmin, double vmax);

/// Writes `<prefix>.csv` plus `<prefix>_D.png` and `<prefix>_mu.png`.
void export_field(const Mesh& mesh, const ParameterField& field, const std::string& prefix,
                  int image_size = 360);

}  // namespace dot
