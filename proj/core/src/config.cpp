#include "dot/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dot/io.hpp"

namespace dot {

Mesh MeshSpec::build() const {
  if (kind == Kind::File) return load_mesh(path);
  return generate_disk_mesh(radius, target, seed);
}

std::string MeshSpec::describe() const {
  if (kind == Kind::File) return "file " + path;
  std::ostringstream os;
  os << "gen " << format_double(radius) << " " << target << " " << seed;
  return os.str();
}

namespace {

std::vector<std::string> split_tokens(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (...) {
    throw std::runtime_error("config: bad number '" + s + "' for " + what);
  }
  if (used != s.size()) throw std::runtime_error("config: bad number '" + s + "' for " + what);
  return v;
}

long to_long(const std::string& s, const std::string& what) {
  size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (...) {
    throw std::runtime_error("config: bad integer '" + s + "' for " + what);
  }
  if (used != s.size()) throw std::runtime_error("config: bad integer '" + s + "' for " + what);
  return v;
}

// ordered multimap of "section.key" -> values, with consumption tracking
struct KeyValues {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<bool> consumed;

  std::vector<std::string> take_all(const std::string& key) {
    std::vector<std::string> out;
    for (size_t i = 0; i < entries.size(); ++i)
      if (entries[i].first == key) {
        out.push_back(entries[i].second);
        consumed[i] = true;
      }
    return out;
  }
  bool take(const std::string& key, std::string& value) {
    auto all = take_all(key);
    if (all.empty()) return false;
    if (all.size() > 1) throw std::runtime_error("config: key '" + key + "' given more than once");
    value = all.front();
    return true;
  }
  double take_double(const std::string& key, double fallback) {
    std::string v;
    return take(key, v) ? to_double(v, key) : fallback;
  }
  long take_long(const std::string& key, long fallback) {
    std::string v;
    return take(key, v) ? to_long(v, key) : fallback;
  }
  std::string take_string(const std::string& key, std::string fallback) {
    std::string v;
    return take(key, v) ? v : fallback;
  }
};

KeyValues parse_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  KeyValues kv;
  std::string line, section;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);

    if (!header_seen) {
      if (line != "dotcfg 1")
        throw std::runtime_error("config: first line must be the version header 'dotcfg 1'");
      header_seen = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config: malformed section at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: expected 'key = value' at line " + std::to_string(lineno));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      s = (a == std::string::npos) ? "" : s.substr(a, b - a + 1);
    };
    trim(key);
    trim(value);
    if (key.empty() || value.empty())
      throw std::runtime_error("config: empty key or value at line " + std::to_string(lineno));
    kv.entries.emplace_back(section.empty() ? key : section + "." + key, value);
  }
  if (!header_seen) throw std::runtime_error("config: empty file " + path);
  kv.consumed.assign(kv.entries.size(), false);
  return kv;
}

MeshSpec parse_mesh_spec(const std::string& text, const std::string& what) {
  auto tok = split_tokens(text);
  MeshSpec spec;
  if (tok.size() == 2 && tok[0] == "file") {
    spec.kind = MeshSpec::Kind::File;
    spec.path = tok[1];
    return spec;
  }
  if (tok.size() == 4 && tok[0] == "gen") {
    spec.kind = MeshSpec::Kind::Generate;
    spec.radius = to_double(tok[1], what + " radius");
    spec.target = static_cast<int>(to_long(tok[2], what + " target"));
    spec.seed = static_cast<std::uint64_t>(to_long(tok[3], what + " seed"));
    return spec;
  }
  throw std::runtime_error("config: " + what + " must be 'gen <radius> <target> <seed>' or 'file <path>'");
}

Inclusion parse_inclusion(const std::string& text) {
  auto tok = split_tokens(text);
  if (tok.size() < 3) throw std::runtime_error("config: malformed inclusion '" + text + "'");
  Inclusion inc;
  auto num = [&](size_t i, const char* what) { return to_double(tok[i], std::string("inclusion ") + what); };
  if (tok[0] == "circle") {
    if (tok.size() != 6) throw std::runtime_error("config: circle needs cx cy r D mu");
    inc.shape = Inclusion::Shape::Circle;
    inc.center = {num(1, "cx"), num(2, "cy")};
    inc.radius = num(3, "radius");
    inc.values = {num(4, "D"), num(5, "mu")};
  } else if (tok[0] == "halfannulus") {
    if (tok.size() != 9)
      throw std::runtime_error("config: halfannulus needs cx cy r_in r_out a0_deg a1_deg D mu");
    inc.shape = Inclusion::Shape::HalfAnnulus;
    inc.center = {num(1, "cx"), num(2, "cy")};
    inc.r_in = num(3, "r_in");
    inc.r_out = num(4, "r_out");
    inc.angle0 = num(5, "a0") * M_PI / 180.0;
    inc.angle1 = num(6, "a1") * M_PI / 180.0;
    inc.values = {num(7, "D"), num(8, "mu")};
  } else if (tok[0] == "polygon") {
    if (tok.size() < 9 || (tok.size() - 3) % 2 != 0)
      throw std::runtime_error("config: polygon needs x1 y1 ... xN yN D mu with N >= 3");
    inc.shape = Inclusion::Shape::Polygon;
    for (size_t i = 1; i + 2 < tok.size(); i += 2)
      inc.vertices.push_back({num(i, "x"), num(i + 1, "y")});
    inc.values = {num(tok.size() - 2, "D"), num(tok.size() - 1, "mu")};
  } else {
    throw std::runtime_error("config: unknown inclusion shape '" + tok[0] + "'");
  }
  return inc;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  KeyValues kv = parse_key_values(path);
  ExperimentConfig cfg;

  cfg.engine = kv.take_string("experiment.engine", cfg.engine);
  if (cfg.engine != "irgn" && cfg.engine != "mcmc")
    throw std::runtime_error("config: engine must be 'irgn' or 'mcmc'");
  cfg.seed = static_cast<std::uint64_t>(kv.take_long("experiment.seed", static_cast<long>(cfg.seed)));
  cfg.output_dir = kv.take_string("experiment.output", cfg.output_dir);

  std::string mesh_text;
  if (kv.take("mesh.fine", mesh_text)) cfg.fine_mesh = parse_mesh_spec(mesh_text, "mesh.fine");
  if (kv.take("mesh.coarse", mesh_text)) cfg.coarse_mesh = parse_mesh_spec(mesh_text, "mesh.coarse");

  cfg.wavenumber = kv.take_double("forward.k", cfg.wavenumber);
  cfg.source_count = static_cast<int>(kv.take_long("forward.sources", cfg.source_count));

  std::string bg;
  if (kv.take("phantom.background", bg)) {
    auto tok = split_tokens(bg);
    if (tok.size() != 2) throw std::runtime_error("config: phantom.background needs 'D mu'");
    cfg.phantom.background = {to_double(tok[0], "background D"), to_double(tok[1], "background mu")};
  }
  cfg.phantom.inclusions.clear();
  for (const auto& text : kv.take_all("phantom.inclusion"))
    cfg.phantom.inclusions.push_back(parse_inclusion(text));

  cfg.bounds.D_min = kv.take_double("bounds.D_min", cfg.bounds.D_min);
  cfg.bounds.D_max = kv.take_double("bounds.D_max", cfg.bounds.D_max);
  cfg.bounds.mu_max = kv.take_double("bounds.mu_max", cfg.bounds.mu_max);

  cfg.noise_level = kv.take_double("noise.level", cfg.noise_level);
  if (cfg.noise_level < 0) throw std::runtime_error("config: noise level must be nonnegative");

  std::string kind = kv.take_string("regularizer.kind", "tv");
  if (kind == "lp")
    cfg.reg.kind = RegKind::Lp;
  else if (kind == "tv")
    cfg.reg.kind = RegKind::Tv;
  else if (kind == "mixed")
    cfg.reg.kind = RegKind::Mixed;
  else
    throw std::runtime_error("config: regularizer.kind must be lp, tv, or mixed");
  cfg.reg.p = kv.take_double("regularizer.p", cfg.reg.p);
  cfg.reg.alpha1 = kv.take_double("regularizer.alpha1", cfg.reg.alpha1);
  cfg.reg.alpha2 = kv.take_double("regularizer.alpha2", cfg.reg.alpha2);
  cfg.reg.beta1 = kv.take_double("regularizer.beta1", cfg.reg.beta1);
  cfg.reg.beta2 = kv.take_double("regularizer.beta2", cfg.reg.beta2);

  cfg.irgn.alpha0 = kv.take_double("irgn.alpha0", cfg.irgn.alpha0);
  cfg.irgn.decay = kv.take_double("irgn.decay", cfg.irgn.decay);
  cfg.irgn.rho = kv.take_double("irgn.rho", cfg.irgn.rho);
  cfg.irgn.s_min = kv.take_double("irgn.s_min", cfg.irgn.s_min);
  cfg.irgn.max_iterations = static_cast<int>(kv.take_long("irgn.max_iterations", cfg.irgn.max_iterations));
  cfg.irgn.max_backtracks = static_cast<int>(kv.take_long("irgn.max_backtracks", cfg.irgn.max_backtracks));
  cfg.xi_override = kv.take_double("irgn.xi_override", cfg.xi_override);

  cfg.mcmc.schedule.m = static_cast<int>(kv.take_long("mcmc.m", cfg.mcmc.schedule.m));
  cfg.mcmc.schedule.adaptions = static_cast<int>(kv.take_long("mcmc.M", cfg.mcmc.schedule.adaptions));
  cfg.mcmc.schedule.burn_in = kv.take_long("mcmc.burn_in", cfg.mcmc.schedule.burn_in);
  cfg.mcmc.schedule.total = kv.take_long("mcmc.total", cfg.mcmc.schedule.total);
  cfg.mcmc.prior_alpha = kv.take_double("mcmc.prior_alpha", cfg.mcmc.prior_alpha);
  cfg.mcmc.target_acceptance = kv.take_double("mcmc.a_o", cfg.mcmc.target_acceptance);
  cfg.mcmc.epsilon = kv.take_double("mcmc.epsilon", cfg.mcmc.epsilon);
  cfg.mcmc.proposal_scale = kv.take_double("mcmc.proposal_scale", cfg.mcmc.proposal_scale);
  cfg.mcmc.start = kv.take_string("mcmc.start", cfg.mcmc.start);
  if (cfg.mcmc.start != "irgn3" && cfg.mcmc.start != "background")
    throw std::runtime_error("config: mcmc.start must be 'irgn3' or 'background'");
  cfg.mcmc.thin = static_cast<int>(kv.take_long("mcmc.thin", cfg.mcmc.thin));

  std::string sweep;
  if (kv.take("sweep.prior_alpha", sweep))
    for (const auto& t : split_tokens(sweep))
      cfg.sweep_prior_alpha.push_back(to_double(t, "sweep.prior_alpha"));

  for (size_t i = 0; i < kv.entries.size(); ++i)
    if (!kv.consumed[i])
      throw std::runtime_error("config: unknown key '" + kv.entries[i].first + "'");

  // the regularizer scales by the expected backgrounds
  cfg.reg.mu_background = cfg.phantom.background.mu;
  cfg.reg.mus_background = 1.0 / (3.0 * cfg.phantom.background.D) - cfg.phantom.background.mu;
  if (!(cfg.reg.mus_background > 0))
    throw std::runtime_error("config: background implies nonpositive reduced scattering");
  return cfg;
}

void ExperimentConfig::apply_fast_profile() {
  fast = true;
  mcmc.schedule = McmcSchedule{25, 100, 10000, 25000};
  irgn.max_iterations = std::min(irgn.max_iterations, 60);
  mcmc.thin = std::min(mcmc.thin, 5);
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  auto d = [&](double v) { return format_double(v); };
  os << "engine " << engine << "\nseed " << seed << "\nfast " << (fast ? 1 : 0) << "\n";
  os << "mesh.fine " << fine_mesh.describe() << "\nmesh.coarse " << coarse_mesh.describe() << "\n";
  os << "k " << d(wavenumber) << "\nsources " << source_count << "\n";
  os << "background " << d(phantom.background.D) << " " << d(phantom.background.mu) << "\n";
  for (const auto& inc : phantom.inclusions) {
    os << "inclusion ";
    switch (inc.shape) {
      case Inclusion::Shape::Circle:
        os << "circle " << d(inc.center.x) << " " << d(inc.center.y) << " " << d(inc.radius);
        break;
      case Inclusion::Shape::HalfAnnulus:
        os << "halfannulus " << d(inc.center.x) << " " << d(inc.center.y) << " " << d(inc.r_in)
           << " " << d(inc.r_out) << " " << d(inc.angle0) << " " << d(inc.angle1);
        break;
      case Inclusion::Shape::Polygon:
        os << "polygon";
        for (const auto& v : inc.vertices) os << " " << d(v.x) << " " << d(v.y);
        break;
    }
    os << " " << d(inc.values.D) << " " << d(inc.values.mu) << "\n";
  }
  os << "bounds " << d(bounds.D_min) << " " << d(bounds.D_max) << " " << d(bounds.mu_max) << "\n";
  os << "noise " << d(noise_level) << "\n";
  os << "reg " << static_cast<int>(reg.kind) << " " << d(reg.p) << " " << d(reg.alpha1) << " "
     << d(reg.alpha2) << " " << d(reg.beta1) << " " << d(reg.beta2) << " " << d(reg.mu_background)
     << " " << d(reg.mus_background) << "\n";
  os << "irgn " << d(irgn.alpha0) << " " << d(irgn.decay) << " " << d(irgn.rho) << " "
     << d(irgn.s_min) << " " << irgn.max_iterations << " " << irgn.max_backtracks << " "
     << d(xi_override) << "\n";
  os << "mcmc " << mcmc.schedule.m << " " << mcmc.schedule.adaptions << " "
     << mcmc.schedule.burn_in << " " << mcmc.schedule.total << " " << d(mcmc.prior_alpha) << " "
     << d(mcmc.target_acceptance) << " " << d(mcmc.epsilon) << " " << d(mcmc.proposal_scale)
     << " " << mcmc.start << " " << mcmc.thin << "\n";
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a_hash(canonical_text()); }

}  // namespace dot
