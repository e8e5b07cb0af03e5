#pragma once
// Parameter initialization, Adam, and finite-difference gradient verification.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "logo/errors.hpp"
#include "logo/rng.hpp"
#include "logo/tensor.hpp"

namespace logo {

// Uniform [−b, b] with b = sqrt(6 / (fan_in + fan_out)).
// 1-D shapes use fan_in = fan_out = extent; for ≥3-D shapes the trailing
// extents form the receptive field multiplying both fans.
inline Tensor xavier_init(std::vector<std::size_t> shape, std::uint64_t seed) {
  if (shape.empty()) throw ZeroExtent("xavier_init: empty shape");
  for (std::size_t e : shape) {
    if (e == 0) throw ZeroExtent("xavier_init: zero extent in " + Tensor::shape_string(shape));
  }
  double fan_in = 0, fan_out = 0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else {
    double receptive = 1;
    for (std::size_t i = 2; i < shape.size(); ++i) receptive *= static_cast<double>(shape[i]);
    fan_out = static_cast<double>(shape[0]) * receptive;
    fan_in = static_cast<double>(shape[1]) * receptive;
  }
  double b = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-b, b);
  return t;
}

struct AdamState {
  Tensor m, v;
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState for_shape(const std::vector<std::size_t>& shape) {
    AdamState s;
    s.m = Tensor(shape);
    s.v = Tensor(shape);
    return s;
  }
};

// Classic Adam with bias correction; weight decay enters as an L2 term on the
// gradient (g ← g + wd·θ) before the moment updates.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
                      double weight_decay) {
  require_same_shape(param, grad, "adam_step");
  require_same_shape(param, state.m, "adam_step(state)");
  state.step += 1;
  double b1 = state.beta1, b2 = state.beta2;
  double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad[i] + weight_decay * param[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    double mhat = state.m[i] / corr1;
    double vhat = state.v[i] / corr2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

// A differentiable program over named external parameters.
struct DiffProgram {
  // Scalar loss at the current parameter values.
  std::function<double()> loss;
  // Loss plus analytic gradients per parameter name, at the current values.
  std::function<std::map<std::string, Tensor>()> gradients;
};

// Compares reverse-mode gradients against central differences, coordinate by
// coordinate. Returns the maximum relative error with an absolute floor of
// 1e-8 in the denominator. When the total coordinate count exceeds
// max_coords, a seeded subsample is checked instead.
inline double check_gradients(const DiffProgram& prog,
                              const std::vector<std::pair<std::string, Tensor*>>& params,
                              double eps, std::size_t max_coords = static_cast<std::size_t>(-1),
                              std::uint64_t seed = 0) {
  std::map<std::string, Tensor> analytic = prog.gradients();
  std::size_t total = 0;
  for (const auto& [name, t] : params) {
    (void)name;
    total += t->size();
  }
  double keep_prob = total > max_coords
                         ? static_cast<double>(max_coords) / static_cast<double>(total)
                         : 1.0;
  Rng rng(derive_seed(seed, "gradcheck.subsample"));
  double worst = 0.0;
  for (const auto& [name, tensor] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end()) throw Error("check_gradients: no gradient for " + name);
    const Tensor& ga = it->second;
    require_same_shape(*tensor, ga, "check_gradients");
    for (std::size_t i = 0; i < tensor->size(); ++i) {
      if (keep_prob < 1.0 && rng.next_unit() >= keep_prob) continue;
      double saved = (*tensor)[i];
      (*tensor)[i] = saved + eps;
      double up = prog.loss();
      (*tensor)[i] = saved - eps;
      double down = prog.loss();
      (*tensor)[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NonFiniteLoss("check_gradients: non-finite loss at " + name + "[" +
                            std::to_string(i) + "]");
      }
      double numeric = (up - down) / (2.0 * eps);
      double a = ga[i];
      double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      double rel = std::fabs(a - numeric) / denom;
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace logo
