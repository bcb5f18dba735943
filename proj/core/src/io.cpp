#include "dot/io.hpp"

#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dot {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("io: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("");
    return v;
  } catch (...) {
    throw std::runtime_error(std::string("io: bad number '") + s + "' in " + what);
  }
}

}  // namespace

void write_field_csv(const std::string& path, const ParameterField& field) {
  std::ostringstream os;
  os << "triangle,D,mu\n";
  for (Eigen::Index t = 0; t < field.D.size(); ++t)
    os << t << "," << format_double(field.D[t]) << "," << format_double(field.mu[t]) << "\n";
  write_text_file(path, os.str());
}

void read_field_csv(const std::string& path, Eigen::VectorXd& D, Eigen::VectorXd& mu) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"triangle", "D", "mu"})
    throw std::runtime_error("io: bad field CSV header in " + path);
  std::vector<double> dv, mv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 3) throw std::runtime_error("io: bad field CSV row in " + path);
    dv.push_back(parse_double(cells[1], "field CSV"));
    mv.push_back(parse_double(cells[2], "field CSV"));
  }
  D = Eigen::Map<Eigen::VectorXd>(dv.data(), static_cast<Eigen::Index>(dv.size()));
  mu = Eigen::Map<Eigen::VectorXd>(mv.data(), static_cast<Eigen::Index>(mv.size()));
}

void write_measurements_csv(const std::string& path, const MeasurementSet& ms) {
  std::ostringstream os;
  os << "source,node,re,im\n";
  for (int s = 0; s < ms.source_count; ++s)
    for (int b = 0; b < ms.boundary_node_count; ++b)
      os << s << "," << b << "," << format_double(ms.traces[s][b].real()) << ","
         << format_double(ms.traces[s][b].imag()) << "\n";
  write_text_file(path, os.str());
}

MeasurementSet read_measurements_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"source", "node", "re", "im"})
    throw std::runtime_error("io: bad measurement CSV header in " + path);
  std::vector<double> re, im;
  std::vector<int> src;
  int max_source = -1, rows_in_source0 = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 4) throw std::runtime_error("io: bad measurement CSV row in " + path);
    const int s = static_cast<int>(parse_double(cells[0], "measurement CSV"));
    max_source = std::max(max_source, s);
    if (s == 0) ++rows_in_source0;
    src.push_back(s);
    re.push_back(parse_double(cells[2], "measurement CSV"));
    im.push_back(parse_double(cells[3], "measurement CSV"));
  }
  const int sources = max_source + 1;
  const int nodes = rows_in_source0;
  if (sources <= 0 || nodes <= 0 || static_cast<long>(src.size()) != static_cast<long>(sources) * nodes)
    throw std::runtime_error("io: inconsistent measurement CSV in " + path);
  MeasurementSet ms;
  ms.source_count = sources;
  ms.boundary_node_count = nodes;
  for (int s = 0; s < sources; ++s) {
    Eigen::VectorXcd tr(nodes);
    for (int b = 0; b < nodes; ++b) tr[b] = Complex(re[s * nodes + b], im[s * nodes + b]);
    ms.traces.push_back(std::move(tr));
  }
  return ms;
}

void write_measurement_meta(const std::string& path, const MeasurementMeta& meta) {
  std::ostringstream os;
  os << "dotmeta 1\n";
  os << "k = " << format_double(meta.wavenumber) << "\n";
  os << "sources = " << meta.source_description << "\n";
  os << "flattening = " << meta.flattening << "\n";
  os << "noise_level = " << format_double(meta.noise_level) << "\n";
  os << "xi = " << format_double(meta.xi) << "\n";
  os << "sigma =";
  for (Eigen::Index i = 0; i < meta.sigma.size(); ++i) os << " " << format_double(meta.sigma[i]);
  os << "\n";
  write_text_file(path, os.str());
}

MeasurementMeta read_measurement_meta(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "dotmeta 1")
    throw std::runtime_error("io: bad metadata header in " + path);
  MeasurementMeta meta;
  while (std::getline(in, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t\r");
      s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    if (key == "k") meta.wavenumber = parse_double(value, "meta k");
    else if (key == "sources") meta.source_description = value;
    else if (key == "flattening") meta.flattening = value;
    else if (key == "noise_level") meta.noise_level = parse_double(value, "meta noise_level");
    else if (key == "xi") meta.xi = parse_double(value, "meta xi");
    else if (key == "sigma") {
      std::istringstream vs(value);
      std::vector<double> sig;
      std::string tok;
      while (vs >> tok) sig.push_back(parse_double(tok, "meta sigma"));
      meta.sigma = Eigen::Map<Eigen::VectorXd>(sig.data(), static_cast<Eigen::Index>(sig.size()));
    }
  }
  return meta;
}

void write_chain_csv(const std::string& path, const Chain& chain) {
  std::ostringstream os;
  os << "# dotchain 1\n";
  os << "# dim " << chain.dim << " m " << chain.schedule.m << " M " << chain.schedule.adaptions
     << " B " << chain.schedule.burn_in << " N " << chain.schedule.total << " seed " << chain.seed
     << " thin " << chain.thin << "\n";
  os << "# epoch_acceptance";
  for (double a : chain.epoch_acceptance) os << " " << format_double(a);
  os << "\n";
  os << "iteration,accepted";
  for (int d = 0; d < chain.dim; ++d) os << ",x" << d;
  os << "\n";
  for (size_t s = 0; s < chain.samples.size(); ++s) {
    const long it = chain.sample_iterations[s];
    const int flag = (it >= 1 && it <= static_cast<long>(chain.accepted.size()))
                         ? chain.accepted[it - 1]
                         : 0;
    os << it << "," << flag;
    for (int d = 0; d < chain.dim; ++d) os << "," << format_double(chain.samples[s][d]);
    os << "\n";
  }
  write_text_file(path, os.str());
}

Chain read_chain_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "# dotchain 1")
    throw std::runtime_error("io: bad chain header in " + path);
  Chain chain;
  if (!std::getline(in, line)) throw std::runtime_error("io: truncated chain file " + path);
  {
    std::istringstream hs(line);
    std::string hash, key;
    hs >> hash;
    long val;
    while (hs >> key) {
      if (key == "m" || key == "M" || key == "B" || key == "N" || key == "dim" || key == "seed" ||
          key == "thin") {
        if (!(hs >> val)) throw std::runtime_error("io: bad chain header values in " + path);
        if (key == "dim") chain.dim = static_cast<int>(val);
        else if (key == "m") chain.schedule.m = static_cast<int>(val);
        else if (key == "M") chain.schedule.adaptions = static_cast<int>(val);
        else if (key == "B") chain.schedule.burn_in = val;
        else if (key == "N") chain.schedule.total = val;
        else if (key == "seed") chain.seed = static_cast<std::uint64_t>(val);
        else if (key == "thin") chain.thin = static_cast<int>(val);
      }
    }
  }
  if (!std::getline(in, line) || line.rfind("# epoch_acceptance", 0) != 0)
    throw std::runtime_error("io: missing epoch acceptance in " + path);
  {
    std::istringstream as(line.substr(std::strlen("# epoch_acceptance")));
    double v;
    while (as >> v) chain.epoch_acceptance.push_back(v);
  }
  if (!std::getline(in, line)) throw std::runtime_error("io: truncated chain file " + path);
  chain.post_burn_sum = Eigen::VectorXd::Zero(chain.dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != 2 + chain.dim)
      throw std::runtime_error("io: bad chain row in " + path);
    const long it = static_cast<long>(parse_double(cells[0], "chain CSV"));
    Eigen::VectorXd x(chain.dim);
    for (int d = 0; d < chain.dim; ++d) x[d] = parse_double(cells[2 + d], "chain CSV");
    chain.sample_iterations.push_back(it);
    if (it > chain.schedule.burn_in) {
      chain.post_burn_sum += x;
      ++chain.post_burn_count;
    }
    chain.samples.push_back(std::move(x));
  }
  return chain;
}

void write_residuals_csv(const std::string& path, const IrgnReport& report) {
  std::ostringstream os;
  os << "iteration,residual,alpha,step\n";
  for (size_t k = 0; k < report.residual_norms.size(); ++k) {
    os << k << "," << format_double(report.residual_norms[k]) << ",";
    os << (k < report.alphas.size() ? format_double(report.alphas[k]) : "") << ",";
    os << (k < report.steps.size() ? format_double(report.steps[k]) : "") << "\n";
  }
  write_text_file(path, os.str());
}

namespace {

void push_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void push_chunk(std::string& out, const char type[4], const std::string& data) {
  push_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  push_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

void write_png_rgb(const std::string& path, int width, int height,
                   const std::vector<unsigned char>& rgb) {
  if (static_cast<long>(rgb.size()) != 3L * width * height)
    throw std::runtime_error("io: RGB buffer size mismatch");

  std::string raw;
  raw.reserve(static_cast<size_t>(height) * (1 + 3 * width));
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter type 0 per scanline
    raw.append(reinterpret_cast<const char*>(&rgb[3L * width * y]), 3L * width);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK)
    throw std::runtime_error("io: zlib compression failed");
  compressed.resize(bound);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  push_u32(ihdr, static_cast<std::uint32_t>(width));
  push_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace
  push_chunk(png, "IHDR", ihdr);
  push_chunk(png, "IDAT", compressed);
  push_chunk(png, "IEND", "");
  write_text_file(path, png);
}

namespace {

// fixed 9-anchor viridis-like colormap
void colormap(double t, unsigned char* rgb) {
  static const double anchors[9][3] = {
      {68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
      {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
  t = std::min(std::max(t, 0.0), 1.0);
  const double pos = t * 8;
  const int i = std::min(static_cast<int>(pos), 7);
  const double f = pos - i;
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<unsigned char>(anchors[i][c] + f * (anchors[i + 1][c] - anchors[i][c]) + 0.5);
}

}  // namespace

FieldRaster render_field(const Mesh& mesh, const Eigen::VectorXd& values, int width, int height,
                         double vmin, double vmax) {
  if (values.size() != mesh.triangle_count())
    throw std::runtime_error("render_field: value count mismatch");
  const int bar_width = 14, gap = 8;
  const int plot_width = width - bar_width - gap;
  if (plot_width < 16 || height < 16) throw std::runtime_error("render_field: image too small");

  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  for (const Vec2& p : mesh.nodes) {
    lo_x = std::min(lo_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_x = std::max(hi_x, p.x);
    hi_y = std::max(hi_y, p.y);
  }
  const double scale = 0.94 * std::min(plot_width / (hi_x - lo_x), height / (hi_y - lo_y));
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  auto to_px = [&](Vec2 p) {
    return Vec2{(p.x - cx) * scale + plot_width / 2.0, (cy - p.y) * scale + height / 2.0};
  };
  auto to_world = [&](double px, double py) {
    return Vec2{(px - plot_width / 2.0) / scale + cx, cy - (py - height / 2.0) / scale};
  };

  FieldRaster r;
  r.width = width;
  r.height = height;
  r.rgb.assign(3L * width * height, 255);
  r.tri_index.assign(static_cast<size_t>(width) * height, -1);

  const double range = (vmax > vmin) ? (vmax - vmin) : 1.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 a = to_px(mesh.nodes[tri[0]]), b = to_px(mesh.nodes[tri[1]]),
               c = to_px(mesh.nodes[tri[2]]);
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(plot_width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    unsigned char color[3];
    colormap((values[t] - vmin) / range, color);
    for (int py = y0; py <= y1; ++py)
      for (int px = x0; px <= x1; ++px) {
        const Vec2 w = to_world(px + 0.5, py + 0.5);
        const Vec2 wa = mesh.nodes[tri[0]], wb = mesh.nodes[tri[1]], wc = mesh.nodes[tri[2]];
        const double tol = -1e-12 * mesh.tri_area[t];
        if (signed_area(wa, wb, w) >= tol && signed_area(wb, wc, w) >= tol &&
            signed_area(wc, wa, w) >= tol) {
          const size_t idx = static_cast<size_t>(py) * width + px;
          r.tri_index[idx] = t;
          std::memcpy(&r.rgb[3 * idx], color, 3);
        }
      }
  }

  // colorbar legend (vmax at the top)
  for (int py = 0; py < height; ++py) {
    unsigned char color[3];
    colormap(1.0 - static_cast<double>(py) / (height - 1), color);
    for (int px = plot_width + gap; px < width; ++px)
      std::memcpy(&r.rgb[3 * (static_cast<size_t>(py) * width + px)], color, 3);
  }
  return r;
}

void export_field(const Mesh& mesh, const ParameterField& field, const std::string& prefix,
                  int image_size) {
  write_field_csv(prefix + ".csv", field);
  const auto rD = render_field(mesh, field.D, image_size, image_size,
                               field.D.minCoeff(), field.D.maxCoeff());
  write_png_rgb(prefix + "_D.png", rD.width, rD.height, rD.rgb);
  const auto rmu = render_field(mesh, field.mu, image_size, image_size,
                                field.mu.minCoeff(), field.mu.maxCoeff());
  write_png_rgb(prefix + "_mu.png", rmu.width, rmu.height, rmu.rgb);
}

}  // namespace dot
