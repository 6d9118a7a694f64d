/*
 * Copyright 2026 The TAML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TAML_OPTIMIZER_HPP_
#define TAML_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <string>

#include "taml/controller.hpp"
#include "taml/error.hpp"

namespace taml {

enum class OptimizerKind { kAdam, kSgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct OptimizerStateT {
  OptimizerKind kind = OptimizerKind::kAdam;
  std::uint64_t step = 0;
  // Empty for SGD.
  ControllerTensors<Scalar> first_moment;
  ControllerTensors<Scalar> second_moment;
};
using OptimizerState = OptimizerStateT<double>;

template <typename Scalar>
OptimizerStateT<Scalar> init_optimizer_state(const ControllerParamsT<Scalar>& params,
                                             OptimizerKind kind) {
  OptimizerStateT<Scalar> state;
  state.kind = kind;
  if (kind == OptimizerKind::kAdam) {
    state.first_moment = zeros_like(params.tensors);
    state.second_moment = zeros_like(params.tensors);
  }
  return state;
}

// One gradient ASCENT step. The update is computed on copies and committed
// only if every resulting value is finite; otherwise params and state are
// unchanged and NumericError is thrown. Version increments on success.
template <typename Scalar>
void apply_update(ControllerParamsT<Scalar>& params,
                  const ControllerTensors<Scalar>& grads,
                  OptimizerStateT<Scalar>& state, const OptimizerConfig& config) {
  if (!same_shapes(params.tensors, grads)) {
    throw ConfigError("gradient shapes do not match controller parameters");
  }
  if (state.kind != config.kind) {
    throw ConfigError("optimizer state kind does not match optimizer config");
  }
  if (!all_finite(grads)) {
    throw NumericError("gradient contains non-finite values");
  }
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  ControllerTensors<Scalar> next = params.tensors;

  if (config.kind == OptimizerKind::kSgd) {
    visit_tensors([&](const std::string&, auto& p, const auto& g) { p += lr * g; },
                  next, grads);
    if (!all_finite(next)) {
      throw NumericError("update would introduce non-finite parameters");
    }
  } else {
    if (!same_shapes(params.tensors, state.first_moment) ||
        !same_shapes(params.tensors, state.second_moment)) {
      throw ConfigError("optimizer state shapes do not match controller parameters");
    }
    const Scalar b1 = static_cast<Scalar>(config.beta1);
    const Scalar b2 = static_cast<Scalar>(config.beta2);
    const Scalar eps = static_cast<Scalar>(config.epsilon);
    const std::uint64_t step = state.step + 1;
    const Scalar correction1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step));
    const Scalar correction2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step));
    ControllerTensors<Scalar> m = state.first_moment;
    ControllerTensors<Scalar> v = state.second_moment;
    visit_tensors(
        [&](const std::string&, auto& p, auto& mt, auto& vt, const auto& g) {
          mt = b1 * mt + (Scalar(1) - b1) * g;
          vt.array() = b2 * vt.array() + (Scalar(1) - b2) * g.array().square();
          p.array() += lr * (mt.array() / correction1) /
                       ((vt.array() / correction2).sqrt() + eps);
        },
        next, m, v, grads);
    // Task-embedding rows are lookups: a row with no gradient this step keeps
    // its value and moments, so an update only moves the sampled task's row.
    const auto& gt = grads.task_embeddings;
    for (Eigen::Index r = 0; r < gt.rows(); ++r) {
      if (gt.row(r).isZero(Scalar(0))) {
        next.task_embeddings.row(r) = params.tensors.task_embeddings.row(r);
        m.task_embeddings.row(r) = state.first_moment.task_embeddings.row(r);
        v.task_embeddings.row(r) = state.second_moment.task_embeddings.row(r);
      }
    }
    if (!all_finite(next) || !all_finite(m) || !all_finite(v)) {
      throw NumericError("update would introduce non-finite parameters");
    }
    state.first_moment = std::move(m);
    state.second_moment = std::move(v);
  }
  params.tensors = std::move(next);
  state.step += 1;
  params.version += 1;
}

}  // namespace taml

#endif  // TAML_OPTIMIZER_HPP_
