#pragma once

#include "gnssfgo/geometry.hpp"
#include "gnssfgo/simulator.hpp"
#include "gnssfgo/types.hpp"

#include <Eigen/Dense>

#include <random>

namespace gnssfgo::test {

inline Vec3 hong_kong() { return geodetic_to_ecef(Geodetic{0.3895, 1.9933, 10.0}); }

/// Random SPD matrix with condition number roughly bounded by `spread`.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double spread = 100.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = u(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd d(n);
  std::uniform_real_distribution<double> ld(0.0, std::log(spread));
  for (int i = 0; i < n; ++i) d(i) = 0.01 * std::exp(ld(rng));
  Eigen::MatrixXd S = Q * d.asDiagonal() * Q.transpose();
  return 0.5 * (S + S.transpose());
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

/// A zero-noise scenario, optionally static with a base station.
inline Scenario zero_noise_scenario(std::uint64_t seed, bool rtk, int epochs = 20) {
  ScenarioConfig c = rtk ? static_rtk_preset(seed) : urban_canyon_preset(Severity::High, seed);
  c = without_noise(c);
  c.duration_s = epochs;
  return generate(c);
}

}  // namespace gnssfgo::test
