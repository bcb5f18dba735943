#include "dot/regularizers.hpp"

#include <cmath>
#include <stdexcept>

namespace dot {

double lp_reg(const Eigen::VectorXd& y, const Eigen::VectorXd& y_background,
              const Eigen::VectorXd& weights, double p) {
  if (y.size() != y_background.size()) throw std::runtime_error("lp_reg: length mismatch");
  if (weights.size() != 0 && weights.size() != y.size())
    throw std::runtime_error("lp_reg: weight length mismatch");
  if (!(p > 0 && p <= 2)) throw std::runtime_error("lp_reg: p must lie in (0, 2]");
  double sum = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double c = weights.size() ? weights[i] : 1.0;
    if (c < 0) throw std::runtime_error("lp_reg: negative weight");
    sum += c * std::pow(std::abs(y[i] - y_background[i]), p);
  }
  return sum;
}

double tv_reg(const Eigen::VectorXd& y, const EdgeAdjacency& adjacency) {
  double sum = 0;
  for (const auto& e : adjacency.entries) {
    if (e.tri_a < 0 || e.tri_a >= y.size() || e.tri_b < 0 || e.tri_b >= y.size())
      throw std::runtime_error("tv_reg: adjacency index out of range");
    sum += e.length * std::abs(y[e.tri_a] - y[e.tri_b]);
  }
  return sum;
}

double mixed_reg(const Eigen::VectorXd& y, const Eigen::VectorXd& y_background,
                 const Eigen::VectorXd& weights, double p, const EdgeAdjacency& adjacency,
                 double alpha1, double alpha2) {
  if (!(alpha1 > 0) || !(alpha2 > 0))
    throw std::runtime_error("mixed_reg: mix weights must be positive");
  return alpha1 * lp_reg(y, y_background, weights, p) + alpha2 * tv_reg(y, adjacency);
}

double dot_reg(const ParameterField& q, const RegularizerSpec& spec,
               const EdgeAdjacency& adjacency) {
  if (!(spec.beta1 > 0) || !(spec.beta2 > 0) || std::abs(spec.beta1 + spec.beta2 - 1.0) > 1e-12)
    throw std::runtime_error("dot_reg: beta weights must be positive and sum to 1");
  if (!(spec.mu_background > 0) || !(spec.mus_background > 0))
    throw std::runtime_error("dot_reg: backgrounds must be positive");

  const Eigen::Index nt = q.D.size();
  Eigen::VectorXd y_mu(nt), y_mus(nt);
  for (Eigen::Index t = 0; t < nt; ++t) {
    if (!(q.D[t] > 0)) throw std::runtime_error("dot_reg: D must be positive (mu_s' undefined)");
    y_mu[t] = q.mu[t] / spec.mu_background;
    y_mus[t] = (1.0 / (3.0 * q.D[t]) - q.mu[t]) / spec.mus_background;
  }
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nt);

  auto inner = [&](const Eigen::VectorXd& y) {
    switch (spec.kind) {
      case RegKind::Lp:
        return lp_reg(y, ones, spec.weights, spec.p);
      case RegKind::Tv:
        return tv_reg(y, adjacency);
      case RegKind::Mixed:
        return mixed_reg(y, ones, spec.weights, spec.p, adjacency, spec.alpha1, spec.alpha2);
    }
    throw std::logic_error("dot_reg: unknown regularizer kind");
  };
  return spec.beta1 * inner(y_mu) + spec.beta2 * inner(y_mus);
}

Eigen::SparseMatrix<double> graph_laplacian(const Mesh& mesh, const EdgeAdjacency& adjacency,
                                            const FreeIndexMap& map) {
  const int n = map.count();
  std::vector<Eigen::Triplet<double>> trips;
  auto add_block = [&](int offset) {
    for (const auto& e : adjacency.entries) {
      const int pa = map.pos_of_tri[e.tri_a];
      const int pb = map.pos_of_tri[e.tri_b];
      if (pa >= 0 && pb >= 0) {
        trips.emplace_back(offset + pa, offset + pa, e.length);
        trips.emplace_back(offset + pb, offset + pb, e.length);
        trips.emplace_back(offset + pa, offset + pb, -e.length);
        trips.emplace_back(offset + pb, offset + pa, -e.length);
      } else if (pa >= 0) {
        trips.emplace_back(offset + pa, offset + pa, e.length);  // pinned neighbor anchors
      } else if (pb >= 0) {
        trips.emplace_back(offset + pb, offset + pb, e.length);
      }
    }
  };
  add_block(0);
  add_block(n);
  Eigen::SparseMatrix<double> L(2 * n, 2 * n);
  L.setFromTriplets(trips.begin(), trips.end());
  L.makeCompressed();
  return L;
}

}  // namespace dot
