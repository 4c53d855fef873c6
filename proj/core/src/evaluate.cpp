#include "gnssfgo/evaluate.hpp"

#include "gnssfgo/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace gnssfgo {

namespace {

double truth_interval(const GroundTruth& truth) {
  if (truth.epochs.size() < 2) return 1.0;
  std::vector<double> d;
  for (std::size_t i = 1; i < truth.epochs.size(); ++i) d.push_back(truth.epochs[i].t - truth.epochs[i - 1].t);
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
  return d[d.size() / 2];
}

// Index of the truth epoch matching t, or -1.
long match(const GroundTruth& truth, double t, double tol) {
  const auto& e = truth.epochs;
  auto it = std::lower_bound(e.begin(), e.end(), t, [](const TruthEpoch& a, double v) { return a.t < v; });
  long best = -1;
  double best_d = tol;
  for (auto c : {it, it == e.begin() ? it : it - 1}) {
    if (c == e.end()) continue;
    const double d = std::abs(c->t - t);
    if (d <= best_d) {
      best_d = d;
      best = c - e.begin();
    }
  }
  return best;
}

}  // namespace

EnuFrame truth_frame(const GroundTruth& truth) {
  if (truth.epochs.empty()) throw Error(ErrorCode::EmptyInput, "ground truth has no epochs");
  return EnuFrame(truth.epochs.front().state.pos_m);
}

void annotate_errors(std::vector<SolutionRecord>& records, const GroundTruth& truth) {
  const EnuFrame frame = truth_frame(truth);
  const double tol = 0.5 * truth_interval(truth);
  for (auto& r : records) {
    const long k = match(truth, r.t, tol);
    if (k < 0) {
      r.enu_error_m.reset();
      continue;
    }
    r.enu_error_m = frame.rotate_to_enu(r.pos_m - truth.epochs[static_cast<std::size_t>(k)].state.pos_m);
  }
}

MetricsSummary evaluate(const std::vector<SolutionRecord>& records, const GroundTruth& truth) {
  if (truth.epochs.empty()) throw Error(ErrorCode::NoOverlap, "ground truth has no epochs");
  const EnuFrame frame = truth_frame(truth);
  const double tol = 0.5 * truth_interval(truth);
  std::vector<bool> covered(truth.epochs.size(), false);
  std::vector<double> err;
  int fixed = 0;
  for (const auto& r : records) {
    const long k = match(truth, r.t, tol);
    if (k < 0 || covered[static_cast<std::size_t>(k)]) continue;
    covered[static_cast<std::size_t>(k)] = true;
    const Vec3 e = frame.rotate_to_enu(r.pos_m - truth.epochs[static_cast<std::size_t>(k)].state.pos_m);
    err.push_back(std::hypot(e.x(), e.y()));
    if (r.status == SolutionStatus::RtkFixed) ++fixed;
  }
  if (err.empty()) throw Error(ErrorCode::NoOverlap, "no solution aligns with the ground truth");

  MetricsSummary m;
  const double n = static_cast<double>(err.size());
  for (double v : err) m.mean_m += v;
  m.mean_m /= n;
  for (double v : err) m.std_m += (v - m.mean_m) * (v - m.mean_m);
  m.std_m = std::sqrt(m.std_m / n);
  m.max_m = *std::max_element(err.begin(), err.end());
  m.n_epochs = static_cast<int>(truth.epochs.size());
  m.n_solutions = static_cast<int>(err.size());
  m.availability_pct = 100.0 * n / m.n_epochs;
  m.fixed_rate_pct = 100.0 * fixed / m.n_epochs;
  return m;
}

void write_metrics_table(std::ostream& out,
                         const std::vector<std::pair<std::string, MetricsSummary>>& rows) {
  out << "method,mean_m,std_m,max_m,availability_pct,fixed_rate_pct\n";
  char buf[256];
  for (const auto& [name, m] : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.2f,%.2f\n", name.c_str(), m.mean_m, m.std_m,
                  m.max_m, m.availability_pct, m.fixed_rate_pct);
    out << buf;
  }
}

}  // namespace gnssfgo
