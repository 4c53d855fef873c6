#include "gnssfgo/lambda.hpp"

#include "gnssfgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gnssfgo::lambda {

namespace {

double round_half_up(double x) { return std::floor(x + 0.5); }

double sign(double x) { return x <= 0.0 ? -1.0 : 1.0; }

void check_dimension(Eigen::Index n) {
  if (n == 0) throw Error(ErrorCode::EmptyInput, "empty ambiguity vector");
  if (n > kMaxDimension) {
    throw Error(ErrorCode::DimensionTooLarge, std::to_string(n) + " ambiguities");
  }
}

void integer_gauss(LdFactor& f, Eigen::MatrixXd& Z, Eigen::Index i, Eigen::Index j) {
  const Eigen::Index n = f.L.rows();
  const double mu = round_half_up(f.L(i, j));
  if (mu == 0.0) return;
  for (Eigen::Index k = i; k < n; ++k) f.L(k, j) -= mu * f.L(k, i);
  for (Eigen::Index k = 0; k < n; ++k) Z(k, j) -= mu * Z(k, i);
}

void permute(LdFactor& f, Eigen::MatrixXd& Z, Eigen::Index j, double del) {
  const Eigen::Index n = f.L.rows();
  auto& L = f.L;
  auto& D = f.D;
  const double eta = D(j) / del;
  const double lam = D(j + 1) * L(j + 1, j) / del;
  D(j) = eta * D(j + 1);
  D(j + 1) = del;
  for (Eigen::Index k = 0; k < j; ++k) {
    const double a0 = L(j, k);
    const double a1 = L(j + 1, k);
    L(j, k) = -L(j + 1, j) * a0 + a1;
    L(j + 1, k) = eta * a0 + lam * a1;
  }
  L(j + 1, j) = lam;
  for (Eigen::Index k = j + 2; k < n; ++k) std::swap(L(k, j), L(k, j + 1));
  for (Eigen::Index k = 0; k < n; ++k) std::swap(Z(k, j), Z(k, j + 1));
}

// Conditional LS norm of integer vector z in the domain of `f`.
double ld_norm(const LdFactor& f, const Eigen::VectorXd& zs, const Eigen::VectorXd& z) {
  const Eigen::Index n = zs.size();
  Eigen::VectorXd zb(n);
  double dist = 0.0;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    double s = 0.0;
    for (Eigen::Index i = k + 1; i < n; ++i) s += (z(i) - zb(i)) * f.L(i, k);
    zb(k) = zs(k) + s;
    dist += (zb(k) - z(k)) * (zb(k) - z(k)) / f.D(k);
  }
  return dist;
}

// Schnorr-Euchner enumeration over the conditional LS tree; the radius shrinks
// to the m-th best norm once m candidates are held.
void depth_first_search(const LdFactor& f, const Eigen::VectorXd& zs, int m, double max_dist,
                        std::vector<Eigen::VectorXd>& found, std::vector<double>& found_norm,
                        SearchStats* stats) {
  const Eigen::Index n = zs.size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd dist(n), zb(n), z(n), step(n);
  std::size_t imax = 0;

  Eigen::Index k = n - 1;
  dist(k) = 0.0;
  zb(k) = zs(k);
  z(k) = round_half_up(zb(k));
  double y = zb(k) - z(k);
  step(k) = sign(y);
  long nodes = 0;
  constexpr long kLoopMax = 10'000'000;
  for (; nodes < kLoopMax; ++nodes) {
    const double newdist = dist(k) + y * y / f.D(k);
    if (newdist < max_dist) {
      if (k != 0) {
        dist(--k) = newdist;
        for (Eigen::Index i = 0; i <= k; ++i) {
          S(k, i) = S(k + 1, i) + (z(k + 1) - zb(k + 1)) * f.L(k + 1, i);
        }
        zb(k) = zs(k) + S(k, k);
        z(k) = round_half_up(zb(k));
        y = zb(k) - z(k);
        step(k) = sign(y);
      } else {
        if (found.size() < static_cast<std::size_t>(m)) {
          if (found.empty() || newdist > found_norm[imax]) imax = found.size();
          found.push_back(z);
          found_norm.push_back(newdist);
          if (found.size() == static_cast<std::size_t>(m)) max_dist = found_norm[imax];
        } else {
          if (newdist < found_norm[imax]) {
            found[imax] = z;
            found_norm[imax] = newdist;
            imax = static_cast<std::size_t>(
                std::max_element(found_norm.begin(), found_norm.end()) - found_norm.begin());
          }
          max_dist = found_norm[imax];
        }
        z(0) += step(0);
        y = zb(0) - z(0);
        step(0) = -step(0) - sign(step(0));
      }
    } else {
      if (k == n - 1) break;
      ++k;
      z(k) += step(k);
      y = zb(k) - z(k);
      step(k) = -step(k) - sign(step(k));
    }
  }
  if (stats) stats->nodes += nodes;
}

}  // namespace

LdFactor ld_factorize(const Eigen::MatrixXd& Q) {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n) throw Error(ErrorCode::NotPositiveDefinite, "covariance not square");
  if (!Q.isApprox(Q.transpose(), 1e-9)) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance not symmetric");
  }
  Eigen::MatrixXd A = Q;
  LdFactor f{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    f.D(i) = A(i, i);
    if (!(f.D(i) > 0.0)) throw Error(ErrorCode::NotPositiveDefinite, "LD factorization failed");
    const double a = std::sqrt(f.D(i));
    for (Eigen::Index j = 0; j <= i; ++j) f.L(i, j) = A(i, j) / a;
    for (Eigen::Index j = 0; j < i; ++j) {
      for (Eigen::Index k = 0; k <= j; ++k) A(j, k) -= f.L(i, k) * f.L(i, j);
    }
    for (Eigen::Index j = 0; j <= i; ++j) f.L(i, j) /= f.L(i, i);
  }
  return f;
}

Decorrelation decorrelate(const Eigen::MatrixXd& Q) {
  check_dimension(Q.rows());
  Decorrelation out;
  out.factor = ld_factorize(Q);
  const Eigen::Index n = Q.rows();
  out.Z = Eigen::MatrixXd::Identity(n, n);
  auto& f = out.factor;

  Eigen::Index j = n - 2;
  Eigen::Index k = n - 2;
  while (j >= 0) {
    if (j <= k) {
      for (Eigen::Index i = j + 1; i < n; ++i) integer_gauss(f, out.Z, i, j);
    }
    const double del = f.D(j) + f.L(j + 1, j) * f.L(j + 1, j) * f.D(j + 1);
    if (del + 1e-6 < f.D(j + 1)) {
      permute(f, out.Z, j, del);
      k = j;
      j = n - 2;
    } else {
      --j;
    }
  }
  out.Q_z = out.Z.transpose() * Q * out.Z;
  out.Q_z = 0.5 * (out.Q_z + out.Q_z.transpose()).eval();
  return out;
}

IlsSolution search_ld(const LdFactor& f, const Eigen::VectorXd& zs, int n_candidates,
                      SearchStats* stats) {
  const Eigen::Index n = zs.size();
  check_dimension(n);
  const int m = std::max(1, n_candidates);

  // Initial radius: the m-th smallest norm among the rounded vector and the
  // vectors that move one coordinate to its second-nearest integer.
  double max_dist = std::numeric_limits<double>::infinity();
  if (m <= n + 1) {
    Eigen::VectorXd z0 = zs.unaryExpr([](double v) { return round_half_up(v); });
    std::vector<double> norms{ld_norm(f, zs, z0)};
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd zi = z0;
      zi(i) += sign(zs(i) - z0(i));
      norms.push_back(ld_norm(f, zs, zi));
    }
    std::nth_element(norms.begin(), norms.begin() + (m - 1), norms.end());
    const double r = norms[static_cast<std::size_t>(m - 1)];
    max_dist = r + 1e-9 * std::max(r, 1.0);
  }

  std::vector<Eigen::VectorXd> found;
  std::vector<double> found_norm;
  depth_first_search(f, zs, m, max_dist, found, found_norm, stats);
  if (found.size() < static_cast<std::size_t>(m) && std::isfinite(max_dist)) {
    // Rounding slack lost a boundary candidate; redo without a radius.
    found.clear();
    found_norm.clear();
    depth_first_search(f, zs, m, std::numeric_limits<double>::infinity(), found, found_norm, stats);
  }

  std::vector<std::size_t> order(found.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return found_norm[a] < found_norm[b]; });
  IlsSolution sol;
  for (std::size_t i : order) {
    sol.candidates.push_back(found[i]);
    sol.squared_norms.push_back(found_norm[i]);
  }
  if (sol.squared_norms.size() >= 2) {
    const double best = sol.squared_norms[0];
    const double second = sol.squared_norms[1];
    sol.ratio = best > 0.0 ? second / best
                           : (second > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  sol.fixed = ratio_test(sol);
  return sol;
}

IlsSolution search(const Eigen::VectorXd& a_float, const Eigen::MatrixXd& Q, int n_candidates,
                   SearchStats* stats) {
  check_dimension(a_float.size());
  if (Q.rows() != a_float.size()) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance dimension mismatch");
  }
  const Decorrelation dec = decorrelate(Q);
  const Eigen::VectorXd zs = dec.Z.transpose() * a_float;
  IlsSolution sol = search_ld(dec.factor, zs, n_candidates, stats);
  const Eigen::MatrixXd Zt = dec.Z.transpose();
  const auto lu = Zt.fullPivLu();
  for (auto& c : sol.candidates) {
    c = lu.solve(c).unaryExpr([](double v) { return std::round(v); });
  }
  return sol;
}

bool ratio_test(const IlsSolution& sol, double threshold) {
  if (sol.candidates.size() < 2) return false;
  return sol.ratio >= threshold;
}

double squared_norm(const Eigen::VectorXd& a, const Eigen::VectorXd& z, const Eigen::MatrixXd& Q) {
  const Eigen::VectorXd d = a - z;
  return d.dot(Q.ldlt().solve(d));
}

FixResult fix_solution(const Eigen::Vector3d& pos_float, const Eigen::VectorXd& a_float,
                       const Eigen::MatrixXd& cov, double threshold) {
  const Eigen::Index na = a_float.size();
  if (cov.rows() != 3 + na || cov.cols() != 3 + na) {
    throw Error(ErrorCode::NotPositiveDefinite, "joint covariance has wrong dimension");
  }
  FixResult out;
  out.pos = pos_float;
  out.ambiguities = a_float;
  const Eigen::MatrixXd Qaa = cov.bottomRightCorner(na, na);
  out.ils = search(a_float, Qaa);
  if (!ratio_test(out.ils, threshold)) return out;

  const Eigen::VectorXd& z = out.ils.best();
  const Eigen::MatrixXd Qpa = cov.topRightCorner(3, na);
  Eigen::LLT<Eigen::MatrixXd> llt(Qaa);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "ambiguity covariance");
  }
  out.pos = pos_float - Qpa * llt.solve(a_float - z);
  out.ambiguities = z;
  out.fixed = true;
  return out;
}

}  // namespace gnssfgo::lambda
