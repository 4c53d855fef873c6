#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gnssfgo::lambda {

inline constexpr int kMaxDimension = 64;
inline constexpr double kDefaultRatioThreshold = 3.0;

/// Q = L^T diag(D) L with L unit lower triangular.
struct LdFactor {
  Eigen::MatrixXd L;
  Eigen::VectorXd D;
};

LdFactor ld_factorize(const Eigen::MatrixXd& Q);

struct Decorrelation {
  Eigen::MatrixXd Z;        // integer valued, |det Z| = 1
  Eigen::MatrixXd Q_z;      // Z^T Q Z
  LdFactor factor;          // of Q_z, after reduction
};

/// Integer Gauss transformations and pivoting of the LD factors.
Decorrelation decorrelate(const Eigen::MatrixXd& Q);

struct IlsSolution {
  std::vector<Eigen::VectorXd> candidates;  // ascending squared norm
  std::vector<double> squared_norms;
  double ratio = 1.0;
  bool fixed = false;

  const Eigen::VectorXd& best() const { return candidates.front(); }
};

struct SearchStats {
  long nodes = 0;
};

/// n best integer minimisers of (a - z)^T Q^-1 (a - z) in the z-domain
/// described by `factor`. The search radius starts at the n-th smallest
/// norm among the rounding candidate and its nearest neighbours.
IlsSolution search_ld(const LdFactor& factor, const Eigen::VectorXd& a_float, int n_candidates = 2,
                      SearchStats* stats = nullptr);

/// Decorrelate, search, back-transform.
IlsSolution search(const Eigen::VectorXd& a_float, const Eigen::MatrixXd& Q, int n_candidates = 2,
                   SearchStats* stats = nullptr);

bool ratio_test(const IlsSolution& sol, double threshold = kDefaultRatioThreshold);

/// (a - z)^T Q^-1 (a - z) evaluated directly; used for diagnostics and tests.
double squared_norm(const Eigen::VectorXd& a_float, const Eigen::VectorXd& z,
                    const Eigen::MatrixXd& Q);

struct FixResult {
  bool fixed = false;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  Eigen::VectorXd ambiguities;
  IlsSolution ils;
};

/// `cov` is the joint covariance of [pos(3), ambiguities(n)]. On a validated
/// fix, pos - Q_pa Q_aa^-1 (a - z); otherwise the float state unchanged.
FixResult fix_solution(const Eigen::Vector3d& pos_float, const Eigen::VectorXd& a_float,
                       const Eigen::MatrixXd& cov, double threshold = kDefaultRatioThreshold);

}  // namespace gnssfgo::lambda
