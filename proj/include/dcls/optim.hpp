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

#pragma once

#include <vector>

#include "dcls/nn.hpp"

namespace dcls::optim {

/// Step-halving schedule: lr(t) = lr_init * 0.5^floor(t / interval).
struct HalvingSchedule {
  double lr_init = 4e-4;
  int interval = 200000;

  double at(long iteration) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter set.
class Adam {
 public:
  Adam(const nn::ParameterSet& params, AdamConfig cfg = {});

  /// One update from the gradients currently stored on the parameters.
  /// Parameters without a gradient are left alone.
  void step(nn::ParameterSet& params, double lr);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

/// Global L2 norm of all parameter gradients.
double grad_norm(const nn::ParameterSet& params);

/// Rescales gradients so their global norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_grad_norm(nn::ParameterSet& params, double max_norm);

}  // namespace dcls::optim
