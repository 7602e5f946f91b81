#include "entlab/measures.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "entlab/assignment.hpp"
#include "entlab/errors.hpp"

namespace entlab {

DiscreteMeasure::DiscreteMeasure(Eigen::MatrixXd a, Eigen::VectorXd w)
    : atoms(std::move(a)), weights(std::move(w)) {
  if (atoms.rows() < 1) throw InvalidArgument("DiscreteMeasure: dimension must be >= 1");
  if (atoms.cols() < 1) throw InvalidArgument("DiscreteMeasure: need at least one atom");
  if (weights.size() != atoms.cols()) throw InvalidArgument("DiscreteMeasure: weight count != atom count");
  if (!atoms.allFinite() || !weights.allFinite()) throw NonFinite("DiscreteMeasure: non-finite entry");
  if ((weights.array() < 0).any()) throw InvalidArgument("DiscreteMeasure: negative weight");
  if (std::abs(weights.sum() - 1.0) > kWeightTol)
    throw InvalidArgument("DiscreteMeasure: weights do not sum to 1");
  const int n = size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((atoms.col(i) - atoms.col(j)).norm() <= kAtomTol)
        throw InvalidArgument("DiscreteMeasure: duplicate atoms");
}

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& x) {
  return DiscreteMeasure(Eigen::MatrixXd(x), Eigen::VectorXd::Ones(1));
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd a) {
  const auto n = a.cols();
  return DiscreteMeasure(std::move(a), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::with_weights(Eigen::VectorXd w) const {
  DiscreteMeasure m;
  m.atoms = atoms;
  m.weights = std::move(w);
  if (m.weights.size() != atoms.cols()) throw InvalidArgument("with_weights: size mismatch");
  if ((m.weights.array() < 0).any() || std::abs(m.weights.sum() - 1.0) > kWeightTol)
    throw InvalidArgument("with_weights: not a probability vector");
  return m;
}

GaussianMeasure::GaussianMeasure(Eigen::VectorXd m, Eigen::MatrixXd c)
    : mean(std::move(m)), covariance(std::move(c)) {
  const auto d = mean.size();
  if (d < 1 || covariance.rows() != d || covariance.cols() != d)
    throw InvalidArgument("GaussianMeasure: shape mismatch");
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("GaussianMeasure: covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
  if (es.eigenvalues().minCoeff() <= 0) throw InvalidArgument("GaussianMeasure: covariance not positive definite");
}

double GaussianMeasure::alpha() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
  return 1.0 / es.eigenvalues().maxCoeff();
}

SupportInfo support_radius(const DiscreteMeasure& m) {
  SupportInfo s;
  s.radius = m.atoms.colwise().norm().maxCoeff();
  s.centered = m.mean().norm() <= 1e-9;
  return s;
}

DiscreteMeasure translate(const DiscreteMeasure& m, const Eigen::VectorXd& shift) {
  DiscreteMeasure out;
  out.atoms = m.atoms.colwise() + shift;
  out.weights = m.weights;
  return out;
}

Recentered recenter(const DiscreteMeasure& m) {
  Recentered r;
  r.shift = m.mean();
  r.measure = translate(m, -r.shift);
  return r;
}

namespace {

double w2_1d(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<int> ia(a.size()), ib(b.size());
  std::iota(ia.begin(), ia.end(), 0);
  std::iota(ib.begin(), ib.end(), 0);
  std::sort(ia.begin(), ia.end(), [&](int x, int y) { return a.atoms(0, x) < a.atoms(0, y); });
  std::sort(ib.begin(), ib.end(), [&](int x, int y) { return b.atoms(0, x) < b.atoms(0, y); });
  std::size_t i = 0, j = 0;
  double ra = a.weights[ia[0]], rb = b.weights[ib[0]];
  double cost = 0.0;
  while (i < ia.size() && j < ib.size()) {
    const double m = std::min(ra, rb);
    const double diff = a.atoms(0, ia[i]) - b.atoms(0, ib[j]);
    cost += m * diff * diff;
    ra -= m;
    rb -= m;
    // the smaller remainder is exactly zero; move past it
    if (ra <= rb) {
      if (++i < ia.size()) ra = a.weights[ia[i]];
    } else {
      if (++j < ib.size()) rb = b.weights[ib[j]];
    }
  }
  return std::sqrt(std::max(0.0, cost));
}

// Smallest N <= kMaxLatticeN with every weight an integer multiple of 1/N.
int lattice_size(const Eigen::VectorXd& wa, const Eigen::VectorXd& wb) {
  for (int n = 1; n <= kMaxLatticeN; ++n) {
    auto fits = [n](const Eigen::VectorXd& w) {
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        const double s = w[k] * n;
        if (std::abs(s - std::round(s)) > 1e-9) return false;
      }
      return true;
    };
    if (fits(wa) && fits(wb)) return n;
  }
  return 0;
}

Eigen::MatrixXd expand(const DiscreteMeasure& m, int n) {
  Eigen::MatrixXd cloud(m.dim(), n);
  int col = 0;
  for (int k = 0; k < m.size(); ++k) {
    const int reps = static_cast<int>(std::lround(m.weights[k] * n));
    for (int r = 0; r < reps; ++r) cloud.col(col++) = m.atoms.col(k);
  }
  if (col != n) throw UnsupportedInstance("wasserstein2: lattice expansion failed");
  return cloud;
}

}  // namespace

double wasserstein2(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("wasserstein2: dimension mismatch");
  if (a.dim() == 1) return w2_1d(a, b);
  const int n = lattice_size(a.weights, b.weights);
  if (n == 0) throw UnsupportedInstance("wasserstein2: d >= 2 needs weights on a common 1/N lattice");
  const Eigen::MatrixXd xa = expand(a, n), xb = expand(b, n);
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = (xa.col(i) - xb.col(j)).squaredNorm();
  const Assignment as = solve_assignment(cost);
  return std::sqrt(std::max(0.0, as.cost / n));
}

int find_atom(const DiscreteMeasure& m, const Eigen::VectorXd& x) {
  for (int k = 0; k < m.size(); ++k)
    if ((m.atoms.col(k) - x).norm() <= kAtomTol) return k;
  return -1;
}

std::vector<int> match_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim()) throw AtomMismatch("match_atoms: dimension mismatch");
  std::vector<int> idx(a.size());
  for (int i = 0; i < a.size(); ++i) {
    idx[i] = find_atom(b, a.atoms.col(i));
    if (idx[i] < 0) throw AtomMismatch("atom of the first measure not present in the second");
  }
  return idx;
}

bool same_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  return ((a.atoms - b.atoms).colwise().norm().array() <= kAtomTol).all();
}

double relative_entropy(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  const std::vector<int> idx = match_atoms(a, b);
  double h = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double p = a.weights[i];
    if (p == 0.0) continue;
    const double q = b.weights[idx[i]];
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    h += p * std::log(p / q);
  }
  return std::max(0.0, h);
}

TalagrandReport talagrand_check(const DiscreteMeasure& a, const DiscreteMeasure& b, double tau) {
  TalagrandReport r;
  const double w = wasserstein2(a, b);
  r.lhs = w * w;
  r.rhs = 2.0 * tau * relative_entropy(a, b);
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

namespace {
Eigen::MatrixXd sqrtm_spd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}
}  // namespace

double gaussian_w2(const GaussianMeasure& a, const GaussianMeasure& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("gaussian_w2: dimension mismatch");
  const Eigen::MatrixXd ra = sqrtm_spd(a.covariance);
  const Eigen::MatrixXd cross = sqrtm_spd(ra * b.covariance * ra);
  const double tr = a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  return std::sqrt(std::max(0.0, (a.mean - b.mean).squaredNorm() + tr));
}

double gaussian_relative_entropy(const GaussianMeasure& a, const GaussianMeasure& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("gaussian_relative_entropy: dimension mismatch");
  const Eigen::LLT<Eigen::MatrixXd> lb(b.covariance);
  const Eigen::LLT<Eigen::MatrixXd> la(a.covariance);
  const Eigen::VectorXd dm = b.mean - a.mean;
  const double tr = lb.solve(a.covariance).trace();
  const double quad = dm.dot(lb.solve(dm));
  auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& l) {
    return 2.0 * l.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  const double kl = 0.5 * (tr + quad - a.dim() + logdet(lb) - logdet(la));
  return std::max(0.0, kl);
}

int sample_index(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

Eigen::MatrixXd sample(const DiscreteMeasure& m, int n, CounterRng& rng) {
  if (n < 1) throw InvalidArgument("sample: n must be >= 1");
  std::vector<double> cum(m.size());
  std::partial_sum(m.weights.data(), m.weights.data() + m.size(), cum.begin());
  Eigen::MatrixXd out(m.dim(), n);
  for (int k = 0; k < n; ++k) out.col(k) = m.atoms.col(sample_index(cum, rng.uniform()));
  return out;
}

Eigen::MatrixXd sample(const GaussianMeasure& m, int n, CounterRng& rng) {
  if (n < 1) throw InvalidArgument("sample: n must be >= 1");
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(m.covariance).matrixL();
  Eigen::MatrixXd out(m.dim(), n);
  Eigen::VectorXd z(m.dim());
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < m.dim(); ++i) z[i] = rng.normal();
    out.col(k) = m.mean + l * z;
  }
  return out;
}

nlohmann::json to_json(const DiscreteMeasure& m) {
  nlohmann::json atoms = nlohmann::json::array();
  for (int k = 0; k < m.size(); ++k) {
    nlohmann::json p = nlohmann::json::array();
    for (int i = 0; i < m.dim(); ++i) p.push_back(m.atoms(i, k));
    atoms.push_back(p);
  }
  return {{"dim", m.dim()},
          {"atoms", atoms},
          {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.size())}};
}

nlohmann::json to_json(const GaussianMeasure& m) {
  nlohmann::json cov = nlohmann::json::array();
  for (int i = 0; i < m.dim(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(m.covariance(i, j));
    cov.push_back(row);
  }
  return {{"gaussian",
           {{"mean", std::vector<double>(m.mean.data(), m.mean.data() + m.dim())},
            {"covariance", cov}}}};
}

DiscreteMeasure discrete_from_json(const nlohmann::json& j) {
  const auto& atoms = j.at("atoms");
  const int n = static_cast<int>(atoms.size());
  if (n == 0) throw InvalidArgument("measure: empty atom list");
  const int d = j.contains("dim") ? j.at("dim").get<int>()
                                  : (atoms[0].is_array() ? static_cast<int>(atoms[0].size()) : 1);
  Eigen::MatrixXd a(d, n);
  for (int k = 0; k < n; ++k) {
    if (atoms[k].is_number()) {
      if (d != 1) throw InvalidArgument("measure: scalar atom in d > 1");
      a(0, k) = atoms[k].get<double>();
      continue;
    }
    if (static_cast<int>(atoms[k].size()) != d) throw InvalidArgument("measure: atom has wrong dimension");
    for (int i = 0; i < d; ++i) a(i, k) = atoms[k][i].get<double>();
  }
  Eigen::VectorXd w(n);
  if (j.contains("weights")) {
    const auto wv = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(wv.size()) != n) throw InvalidArgument("measure: weight count != atom count");
    for (int k = 0; k < n; ++k) w[k] = wv[k];
  } else {
    w.setConstant(1.0 / n);
  }
  return DiscreteMeasure(std::move(a), std::move(w));
}

Measure measure_from_json(const nlohmann::json& j) {
  if (j.contains("gaussian")) {
    const auto& g = j.at("gaussian");
    const auto mean = g.at("mean").is_array() ? g.at("mean").get<std::vector<double>>()
                                              : std::vector<double>{g.at("mean").get<double>()};
    const int d = static_cast<int>(mean.size());
    Eigen::MatrixXd cov(d, d);
    const auto& c = g.at("covariance");
    if (c.is_number()) {
      if (d != 1) throw InvalidArgument("gaussian: scalar covariance in d > 1");
      cov(0, 0) = c.get<double>();
    } else if (c.size() == static_cast<std::size_t>(d * d) && c[0].is_number()) {
      for (int i = 0; i < d * d; ++i) cov(i / d, i % d) = c[i].get<double>();
    } else {
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) cov(r, s) = c.at(r).at(s).get<double>();
    }
    return GaussianMeasure(Eigen::Map<const Eigen::VectorXd>(mean.data(), d), cov);
  }
  return discrete_from_json(j);
}

}  // namespace entlab
