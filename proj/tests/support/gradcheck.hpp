// Copyright 2026 The Text2Scene Authors.
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

#include <functional>
#include <vector>

#include "text2scene/autograd.hpp"

namespace text2scene::testing {

struct GradCheck {
  double max_relative_error = 0;
  std::size_t checked = 0;
};

// Compares backward() of the scalar `loss` against central differences
// for up to `per_tensor` entries of every tensor (evenly strided).
GradCheck check_gradients(const std::function<nn::Var()>& loss, const std::vector<nn::Var>& inputs,
                          double eps = 1e-5, std::size_t per_tensor = 24);

}  // namespace text2scene::testing
