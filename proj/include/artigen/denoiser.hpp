#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "artigen/schedule.hpp"

namespace artigen {

enum class DenoiserKind { oracle_gaussian, oracle_mixture, trained };

// Configuration of a noise-prediction backend. Oracles carry closed-form
// Gaussian (mixture) parameters of the data distribution; trained networks
// carry the architecture sizes.
struct DenoiserSpec {
  DenoiserKind kind = DenoiserKind::oracle_gaussian;

  // oracle parameters (one component for oracle_gaussian)
  std::vector<std::vector<double>> means;
  std::vector<double> weights;
  std::vector<double> sigmas;

  // trained-network parameters
  int layers = 4;
  int width = 128;
  int heads = 4;
  int category_vocab = 0;
  int K = 8;
  int F = 8;

  void validate() const {
    if (kind == DenoiserKind::trained) {
      if (layers < 1 || width < 1 || heads < 1 || width % heads != 0)
        throw std::invalid_argument("DenoiserSpec: invalid trained-network sizes");
      return;
    }
    if (means.empty() || means.size() != weights.size() || means.size() != sigmas.size())
      throw std::invalid_argument("DenoiserSpec: oracle component lists inconsistent");
    if (kind == DenoiserKind::oracle_gaussian && means.size() != 1)
      throw std::invalid_argument("DenoiserSpec: oracle_gaussian takes one component");
    double wsum = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("DenoiserSpec: negative mixture weight");
      wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-9)
      throw std::invalid_argument("DenoiserSpec: mixture weights must sum to 1");
    for (double s : sigmas)
      if (s <= 0.0) throw std::invalid_argument("DenoiserSpec: sigma must be positive");
    for (const auto& m : means)
      if (m.size() != means[0].size())
        throw std::invalid_argument("DenoiserSpec: component dimension mismatch");
  }
};

// Noise-prediction backend. eps_input_vjp computes (d eps / d x)^T g for the
// full-chain guidance mode; backends without input-gradient support keep the
// default and full_chain fails with a capability error.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual int dim() const = 0;
  virtual void eps(std::span<const double> x_t, int t, std::optional<int> category,
                   std::span<double> out) const = 0;
  virtual bool supports_input_gradient() const { return false; }
  virtual void eps_input_vjp(std::span<const double> /*x_t*/, int /*t*/,
                             std::optional<int> /*category*/, std::span<const double> /*g*/,
                             std::span<double> /*out*/) const {
    throw std::invalid_argument("denoiser backend does not support input gradients");
  }
};

// eps_hat = -sqrt(1 - abar_t) * score of the diffused oracle density.
inline void oracle_eps(std::span<const double> x_t, int t, const DenoiserSpec& spec,
                       const NoiseSchedule& sched, std::span<double> out) {
  if (spec.kind == DenoiserKind::trained)
    throw std::invalid_argument("oracle_eps: spec holds a trained backend");
  spec.validate();
  const std::size_t D = x_t.size();
  const double ab = sched.alpha_bar[static_cast<std::size_t>(t)];
  const double sab = std::sqrt(ab), root1m = std::sqrt(1.0 - ab);
  const std::size_t C = spec.means.size();

  if (C == 1) {
    const double v = ab * spec.sigmas[0] * spec.sigmas[0] + 1.0 - ab;
    for (std::size_t i = 0; i < D; ++i)
      out[i] = root1m * (x_t[i] - sab * spec.means[0][i]) / v;
    return;
  }

  // responsibilities via log-sum-exp
  std::vector<double> logr(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double v = ab * spec.sigmas[c] * spec.sigmas[c] + 1.0 - ab;
    double sq = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double d = x_t[i] - sab * spec.means[c][i];
      sq += d * d;
    }
    logr[c] = std::log(spec.weights[c]) - 0.5 * static_cast<double>(D) * std::log(v) -
              0.5 * sq / v;
  }
  double mx = logr[0];
  for (double l : logr) mx = std::max(mx, l);
  double Z = 0.0;
  for (double& l : logr) {
    l = std::exp(l - mx);
    Z += l;
  }
  for (std::size_t i = 0; i < D; ++i) out[i] = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double r = logr[c] / Z;
    const double v = ab * spec.sigmas[c] * spec.sigmas[c] + 1.0 - ab;
    for (std::size_t i = 0; i < D; ++i)
      out[i] += r * root1m * (x_t[i] - sab * spec.means[c][i]) / v;
  }
}

class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(DenoiserSpec spec, NoiseSchedule schedule)
      : spec_(std::move(spec)), sched_(std::move(schedule)) {
    spec_.validate();
    if (spec_.kind == DenoiserKind::trained)
      throw std::invalid_argument("OracleDenoiser: spec holds a trained backend");
  }

  int dim() const override { return static_cast<int>(spec_.means[0].size()); }

  void eps(std::span<const double> x_t, int t, std::optional<int>,
           std::span<double> out) const override {
    oracle_eps(x_t, t, spec_, sched_, out);
  }

  bool supports_input_gradient() const override { return true; }

  void eps_input_vjp(std::span<const double> x_t, int t, std::optional<int>,
                     std::span<const double> g, std::span<double> out) const override {
    const std::size_t D = x_t.size();
    const double ab = sched_.alpha_bar[static_cast<std::size_t>(t)];
    const double sab = std::sqrt(ab), root1m = std::sqrt(1.0 - ab);
    const std::size_t C = spec_.means.size();
    if (C == 1) {
      const double v = ab * spec_.sigmas[0] * spec_.sigmas[0] + 1.0 - ab;
      for (std::size_t i = 0; i < D; ++i) out[i] = root1m / v * g[i];
      return;
    }
    // eps = -root1m * sum_c r_c s_c with s_c = -(x - m_c)/v_c;
    // grad r_c = r_c (s_c - sbar), so
    // J^T g = -root1m [ sum_c r_c (s_c - sbar) (s_c . g) - (sum_c r_c / v_c) g ]
    std::vector<double> logr(C), vs(C);
    std::vector<std::vector<double>> s(C, std::vector<double>(D));
    for (std::size_t c = 0; c < C; ++c) {
      const double v = ab * spec_.sigmas[c] * spec_.sigmas[c] + 1.0 - ab;
      vs[c] = v;
      double sq = 0.0;
      for (std::size_t i = 0; i < D; ++i) {
        const double d = x_t[i] - sab * spec_.means[c][i];
        s[c][i] = -d / v;
        sq += d * d;
      }
      logr[c] = std::log(spec_.weights[c]) - 0.5 * static_cast<double>(D) * std::log(v) -
                0.5 * sq / v;
    }
    double mx = logr[0];
    for (double l : logr) mx = std::max(mx, l);
    double Z = 0.0;
    for (double& l : logr) {
      l = std::exp(l - mx);
      Z += l;
    }
    std::vector<double> sbar(D, 0.0);
    double rinv = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double r = logr[c] / Z;
      rinv += r / vs[c];
      for (std::size_t i = 0; i < D; ++i) sbar[i] += r * s[c][i];
    }
    for (std::size_t i = 0; i < D; ++i) out[i] = rinv * g[i];
    for (std::size_t c = 0; c < C; ++c) {
      const double r = logr[c] / Z;
      double sg = 0.0;
      for (std::size_t i = 0; i < D; ++i) sg += s[c][i] * g[i];
      for (std::size_t i = 0; i < D; ++i) out[i] -= r * (s[c][i] - sbar[i]) * sg;
    }
    for (std::size_t i = 0; i < D; ++i) out[i] *= root1m;
  }

 private:
  DenoiserSpec spec_;
  NoiseSchedule sched_;
};

}  // namespace artigen
