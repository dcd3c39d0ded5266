// Copyright 2026 The dclssr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcls/optim.hpp"

#include <cmath>

#include "dcls/common.hpp"

namespace dcls::optim {

double HalvingSchedule::at(long iteration) const {
  require(interval > 0, "halving interval must be positive");
  require(iteration >= 0, "iteration must be >= 0");
  return lr_init * std::ldexp(1.0, -static_cast<int>(iteration / interval));
}

Adam::Adam(const nn::ParameterSet& params, AdamConfig cfg) : cfg_(cfg) {
  require(cfg_.beta1 >= 0 && cfg_.beta1 < 1 && cfg_.beta2 >= 0 && cfg_.beta2 < 1,
          "Adam betas must lie in [0, 1)");
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params[i].value().size(), 0.0);
    v_.emplace_back(params[i].value().size(), 0.0);
  }
}

void Adam::step(nn::ParameterSet& params, double lr) {
  require(params.size() == m_.size(), "parameter set changed under the optimizer");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Var p = params[i];
    const nn::Tensor& g = p.grad();
    if (g.size() != p.value().size()) continue;
    auto& m = m_[i];
    auto& v = v_[i];
    auto& w = p.mutable_value().data;
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1 - cfg_.beta1) * g.data[j];
      v[j] = cfg_.beta2 * v[j] + (1 - cfg_.beta2) * g.data[j] * g.data[j];
      w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }
}

double grad_norm(const nn::ParameterSet& params) {
  double acc = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (double g : params[i].grad().data) acc += g * g;
  return std::sqrt(acc);
}

double clip_grad_norm(nn::ParameterSet& params, double max_norm) {
  require(max_norm > 0, "clip norm must be positive");
  const double norm = grad_norm(params);
  if (norm > max_norm && std::isfinite(norm)) {
    const double f = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i) {
      nn::Var p = params[i];
      for (double& g : p.node()->grad.data) g *= f;
    }
  }
  return norm;
}

}  // namespace dcls::optim
