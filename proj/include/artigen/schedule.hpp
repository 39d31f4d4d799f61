#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace artigen {

// DDPM noise schedule, 1-indexed by time step: index 0 holds the t=0
// boundary (alpha_bar = 1).
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;       // beta[0] unused
  std::vector<double> alpha;      // 1 - beta
  std::vector<double> alpha_bar;  // running product, alpha_bar[0] = 1
  std::vector<double> sigma;      // sigma[t]^2 = beta[t]
};

// Linear beta from 1e-4 to 2e-2 with the large-variance sigma choice.
inline NoiseSchedule make_schedule(int T) {
  if (T < 2) throw std::invalid_argument("make_schedule: need T >= 2");
  NoiseSchedule s;
  s.T = T;
  s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
  s.alpha.assign(static_cast<std::size_t>(T) + 1, 1.0);
  s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
  s.sigma.assign(static_cast<std::size_t>(T) + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    const double b = 1e-4 + (2e-2 - 1e-4) * static_cast<double>(t - 1) / (T - 1);
    s.beta[static_cast<std::size_t>(t)] = b;
    s.alpha[static_cast<std::size_t>(t)] = 1.0 - b;
    s.alpha_bar[static_cast<std::size_t>(t)] =
        s.alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - b);
    s.sigma[static_cast<std::size_t>(t)] = std::sqrt(b);
  }
  return s;
}

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
inline std::vector<double> forward_sample(std::span<const double> x0, int t,
                                          std::span<const double> eps, const NoiseSchedule& s) {
  if (x0.size() != eps.size())
    throw std::invalid_argument("forward_sample: noise dimension mismatch");
  const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
  const double ca = std::sqrt(ab), cb = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ca * x0[i] + cb * eps[i];
  return out;
}

// posterior-mean estimate of the clean sample
inline std::vector<double> estimate_x0(std::span<const double> x_t, int t,
                                       std::span<const double> eps_hat, const NoiseSchedule& s) {
  const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
  const double inv = 1.0 / std::sqrt(ab), cb = std::sqrt(1.0 - ab);
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - cb * eps_hat[i]) * inv;
  return out;
}

// one ancestral reverse step; z must be zero at t = 1
inline std::vector<double> reverse_step(std::span<const double> x_t, int t,
                                        std::span<const double> eps_hat, std::span<const double> z,
                                        const NoiseSchedule& s) {
  const double a = s.alpha[static_cast<std::size_t>(t)];
  const double ab = s.alpha_bar[static_cast<std::size_t>(t)];
  const double c = (1.0 - a) / std::sqrt(1.0 - ab);
  const double inv = 1.0 / std::sqrt(a);
  const double sg = s.sigma[static_cast<std::size_t>(t)];
  std::vector<double> out(x_t.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (x_t[i] - c * eps_hat[i]) * inv + sg * z[i];
  return out;
}

}  // namespace artigen
