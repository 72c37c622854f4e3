#pragma once

#include <random>

#include "coldbound/nnet.hpp"
#include "coldbound/random.hpp"

namespace coldbound::testing {

inline ArchSpec make_arch(std::vector<int> widths, OutputHead head = OutputHead::identity, bool bias = true) {
  ArchSpec a;
  a.widths = std::move(widths);
  a.head = head;
  a.bias = bias;
  return a;
}

inline ArchSpec linear_arch(int dim) { return make_arch({dim, 1}, OutputHead::identity, false); }

inline FlatParams random_params(const ArchSpec& arch, Rng& rng, double scale = 1.0) {
  return FlatParams(arch, standard_normal_vector(arch.param_count(), rng) * scale);
}

inline Sample random_sample(const ArchSpec& arch, Rng& rng) {
  Sample s;
  s.x = standard_normal_vector(arch.input_dim(), rng);
  if (arch.head == OutputHead::softmax) {
    std::uniform_int_distribution<int> pick(0, arch.output_dim() - 1);
    s.y = pick(rng);
  } else {
    s.y = standard_normal_vector(1, rng)[0];
  }
  return s;
}

/// Random architecture with up to `max_hidden` hidden layers of width <= max_width.
inline ArchSpec random_arch(Rng& rng, int max_hidden, int max_width, int max_out, bool allow_softmax = true) {
  std::uniform_int_distribution<int> width(1, max_width);
  std::uniform_int_distribution<int> layers(0, max_hidden);
  std::uniform_int_distribution<int> coin(0, 1);
  ArchSpec a;
  a.widths.push_back(width(rng));
  const int h = layers(rng);
  for (int i = 0; i < h; ++i) a.widths.push_back(width(rng));
  const bool softmax = allow_softmax && coin(rng) == 1;
  a.widths.push_back(softmax ? std::uniform_int_distribution<int>(2, std::max(2, max_out))(rng) : 1);
  a.head = softmax ? OutputHead::softmax : OutputHead::identity;
  return a;
}

/// Central finite differences of `f` at params, step h.
template <typename F>
Eigen::VectorXd finite_difference(const FlatParams& params, F f, double h = 1e-5) {
  Eigen::VectorXd g(params.size());
  for (Eigen::Index j = 0; j < params.size(); ++j) {
    Eigen::VectorXd up = params.values(), down = params.values();
    up[j] += h;
    down[j] -= h;
    g[j] = (f(params.with_values(up)) - f(params.with_values(down))) / (2.0 * h);
  }
  return g;
}

}  // namespace coldbound::testing
