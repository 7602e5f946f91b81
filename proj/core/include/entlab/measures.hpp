#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <variant>

#include "entlab/rng.hpp"
#include "entlab/types.hpp"

namespace entlab {

inline constexpr double kAtomTol = 1e-9;
inline constexpr double kWeightTol = 1e-12;

// Weighted atoms in R^d; atoms are stored column-wise (d x n).
struct DiscreteMeasure {
  Eigen::MatrixXd atoms;
  Eigen::VectorXd weights;

  DiscreteMeasure() = default;
  // Validates: nonnegative weights summing to 1, no duplicate atoms.
  DiscreteMeasure(Eigen::MatrixXd atoms, Eigen::VectorXd weights);

  int dim() const { return static_cast<int>(atoms.rows()); }
  int size() const { return static_cast<int>(atoms.cols()); }
  Vec atom(int i) const { return atoms.col(i); }
  Eigen::VectorXd mean() const { return atoms * weights; }

  static DiscreteMeasure dirac(const Eigen::VectorXd& x);
  static DiscreteMeasure uniform(Eigen::MatrixXd atoms);
  // Same atoms, new weights (validated).
  DiscreteMeasure with_weights(Eigen::VectorXd w) const;
};

struct GaussianMeasure {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  GaussianMeasure() = default;
  GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  int dim() const { return static_cast<int>(mean.size()); }
  // Smallest eigenvalue of the inverse covariance.
  double alpha() const;
};

struct SupportInfo {
  double radius = 0.0;
  bool centered = false;
};

SupportInfo support_radius(const DiscreteMeasure& m);

struct Recentered {
  DiscreteMeasure measure;
  Eigen::VectorXd shift;
};
Recentered recenter(const DiscreteMeasure& m);
DiscreteMeasure translate(const DiscreteMeasure& m, const Eigen::VectorXd& shift);

// Exact W2. d = 1: quantile coupling for any weights. d >= 2: weights must be
// multiples of a common 1/N with N <= kMaxLatticeN; the measures are expanded
// to N-point clouds and matched by exact assignment.
inline constexpr int kMaxLatticeN = 256;
double wasserstein2(const DiscreteMeasure& a, const DiscreteMeasure& b);

// Index of the atom of m at x (within kAtomTol), or -1.
int find_atom(const DiscreteMeasure& m, const Eigen::VectorXd& x);
// For each atom of a, its index in b. Throws AtomMismatch.
std::vector<int> match_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b);
bool same_atoms(const DiscreteMeasure& a, const DiscreteMeasure& b);

double relative_entropy(const DiscreteMeasure& a, const DiscreteMeasure& b);

struct TalagrandReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};
TalagrandReport talagrand_check(const DiscreteMeasure& a, const DiscreteMeasure& b, double tau);

double gaussian_w2(const GaussianMeasure& a, const GaussianMeasure& b);
double gaussian_relative_entropy(const GaussianMeasure& a, const GaussianMeasure& b);

// i.i.d. draws as columns of a d x n matrix.
Eigen::MatrixXd sample(const DiscreteMeasure& m, int n, CounterRng& rng);
Eigen::MatrixXd sample(const GaussianMeasure& m, int n, CounterRng& rng);
// Inverse-CDF draw of an index from a cumulative weight table.
int sample_index(const std::vector<double>& cumulative, double u);

using Measure = std::variant<DiscreteMeasure, GaussianMeasure>;

nlohmann::json to_json(const DiscreteMeasure& m);
nlohmann::json to_json(const GaussianMeasure& m);
Measure measure_from_json(const nlohmann::json& j);
DiscreteMeasure discrete_from_json(const nlohmann::json& j);

}  // namespace entlab
