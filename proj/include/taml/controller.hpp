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

#ifndef TAML_CONTROLLER_HPP_
#define TAML_CONTROLLER_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "taml/error.hpp"
#include "taml/search_space.hpp"
#include "taml/seeding.hpp"

namespace taml {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct ControllerConfig {
  int embedding_size = 25;
  int hidden_size = 50;
  int num_layers = 2;
  double init_range = 0.05;
  // When false the task half of the step input is a constant zero vector and
  // task embeddings receive no gradient.
  bool task_conditioning = true;
};

// One gated recurrent layer; gate rows are stacked as [input, forget, output,
// candidate], each hidden_size tall.
template <typename Scalar>
struct LstmWeights {
  MatrixX<Scalar> input;
  MatrixX<Scalar> recurrent;
  VectorX<Scalar> bias;
};

// Every trainable tensor of the controller. Also used as the gradient and
// optimizer-moment container, always shape-matched to the parameters.
template <typename Scalar>
struct ControllerTensors {
  VectorX<Scalar> start_embedding;                 // E
  MatrixX<Scalar> task_embeddings;                 // n_tasks x E
  std::vector<MatrixX<Scalar>> action_embeddings;  // options_d x E
  std::vector<LstmWeights<Scalar>> layers;
  MatrixX<Scalar> skip;                            // H x 2E
  std::vector<MatrixX<Scalar>> output_weights;     // options_d x H
  std::vector<VectorX<Scalar>> output_biases;      // options_d
};

// Calls f(name, t0.x, t1.x, ...) for every tensor x, in a fixed order. The
// order is part of the checkpoint format and of the init stream.
template <typename F, typename First, typename... Rest>
void visit_tensors(F&& f, First& first, Rest&... rest) {
  f(std::string("start_embedding"), first.start_embedding,
    rest.start_embedding...);
  f(std::string("task_embeddings"), first.task_embeddings,
    rest.task_embeddings...);
  for (std::size_t d = 0; d < first.action_embeddings.size(); ++d) {
    f("action_embeddings/" + std::to_string(d), first.action_embeddings[d],
      rest.action_embeddings[d]...);
  }
  for (std::size_t l = 0; l < first.layers.size(); ++l) {
    const std::string prefix = "lstm/" + std::to_string(l) + "/";
    f(prefix + "input", first.layers[l].input, rest.layers[l].input...);
    f(prefix + "recurrent", first.layers[l].recurrent,
      rest.layers[l].recurrent...);
    f(prefix + "bias", first.layers[l].bias, rest.layers[l].bias...);
  }
  f(std::string("skip"), first.skip, rest.skip...);
  for (std::size_t d = 0; d < first.output_weights.size(); ++d) {
    const std::string prefix = "output/" + std::to_string(d) + "/";
    f(prefix + "weight", first.output_weights[d], rest.output_weights[d]...);
    f(prefix + "bias", first.output_biases[d], rest.output_biases[d]...);
  }
}

template <typename Scalar>
ControllerTensors<Scalar> zeros_like(const ControllerTensors<Scalar>& like) {
  ControllerTensors<Scalar> out = like;
  visit_tensors([](const std::string&, auto& t) { t.setZero(); }, out);
  return out;
}

template <typename Scalar>
bool all_finite(const ControllerTensors<Scalar>& tensors) {
  bool finite = true;
  visit_tensors(
      [&](const std::string&, const auto& t) { finite = finite && t.allFinite(); },
      tensors);
  return finite;
}

template <typename Scalar>
bool same_shapes(const ControllerTensors<Scalar>& a,
                 const ControllerTensors<Scalar>& b) {
  if (a.action_embeddings.size() != b.action_embeddings.size() ||
      a.layers.size() != b.layers.size() ||
      a.output_weights.size() != b.output_weights.size()) {
    return false;
  }
  bool same = true;
  visit_tensors(
      [&](const std::string&, const auto& x, const auto& y) {
        same = same && x.rows() == y.rows() && x.cols() == y.cols();
      },
      a, b);
  return same;
}

template <typename Scalar>
std::size_t parameter_count(const ControllerTensors<Scalar>& tensors) {
  std::size_t n = 0;
  visit_tensors([&](const std::string&, const auto& t) { n += t.size(); },
                tensors);
  return n;
}

template <typename Scalar = double>
struct ControllerParamsT {
  ControllerConfig config;
  ControllerTensors<Scalar> tensors;
  // Incremented by every accepted update.
  std::uint64_t version = 0;

  int num_tasks() const { return static_cast<int>(tensors.task_embeddings.rows()); }
  int num_dimensions() const {
    return static_cast<int>(tensors.output_weights.size());
  }
  int option_count(int d) const {
    return static_cast<int>(tensors.output_weights[d].rows());
  }
  std::vector<int> option_counts() const {
    std::vector<int> counts;
    for (int d = 0; d < num_dimensions(); ++d) counts.push_back(option_count(d));
    return counts;
  }
  int embedding_size() const { return static_cast<int>(tensors.start_embedding.size()); }
  int hidden_size() const { return static_cast<int>(tensors.skip.rows()); }
};

using ControllerParams = ControllerParamsT<double>;
using GradientSet = ControllerTensors<double>;

template <typename Scalar>
struct PolicyRolloutT {
  int task_id = 0;
  ModelSpec spec;
  std::vector<Scalar> step_log_probs;
  Scalar total_log_prob = 0;
  // Sum of per-step action-distribution entropies, in nats.
  Scalar total_entropy = 0;
  std::uint64_t parameter_version = 0;
};
using PolicyRollout = PolicyRolloutT<double>;

template <typename Scalar>
struct SequenceScoreT {
  Scalar total_log_prob = 0;
  std::vector<Scalar> step_log_probs;
  Scalar total_entropy = 0;
};
using SequenceScore = SequenceScoreT<double>;

namespace detail {

template <typename Scalar>
struct LayerCache {
  VectorX<Scalar> in_gate, forget_gate, out_gate, candidate;
  VectorX<Scalar> cell, tanh_cell, hidden;
};

template <typename Scalar>
struct StepCache {
  VectorX<Scalar> input;  // [task embedding; previous-action embedding]
  std::vector<LayerCache<Scalar>> layers;
  VectorX<Scalar> top;    // top hidden + skip(input)
  VectorX<Scalar> log_probs;
  VectorX<Scalar> probs;
  Scalar entropy = 0;
  int action = 0;
};

template <typename Scalar>
VectorX<Scalar> sigmoid(const VectorX<Scalar>& x) {
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}

inline void check_task(int task_id, int num_tasks) {
  if (task_id < 0 || task_id >= num_tasks) {
    throw ConfigError("unknown task id " + std::to_string(task_id) + " (" +
                      std::to_string(num_tasks) + " tasks)");
  }
}

template <typename Scalar>
void check_spec(const ControllerParamsT<Scalar>& params, const ModelSpec& spec) {
  if (static_cast<int>(spec.choices.size()) != params.num_dimensions()) {
    throw ConfigError("spec length " + std::to_string(spec.choices.size()) +
                      " does not match controller with " +
                      std::to_string(params.num_dimensions()) + " dimensions");
  }
  for (int d = 0; d < params.num_dimensions(); ++d) {
    if (spec.choices[d] < 0 || spec.choices[d] >= params.option_count(d)) {
      throw ConfigError("choice " + std::to_string(spec.choices[d]) +
                        " out of range for dimension " + std::to_string(d));
    }
  }
}

// Unrolls the controller for `steps` actions. choose(d, probs) returns the
// action taken at step d.
template <typename Scalar, typename Chooser>
std::vector<StepCache<Scalar>> unroll(const ControllerParamsT<Scalar>& params,
                                      int task_id, int steps,
                                      Chooser&& choose) {
  const auto& w = params.tensors;
  const int E = params.embedding_size();
  const int H = params.hidden_size();
  const int L = static_cast<int>(w.layers.size());

  std::vector<StepCache<Scalar>> out(steps);
  const VectorX<Scalar> zero_h = VectorX<Scalar>::Zero(H);
  for (int d = 0; d < steps; ++d) {
    auto& s = out[d];
    s.input.resize(2 * E);
    if (params.config.task_conditioning) {
      s.input.head(E) = w.task_embeddings.row(task_id).transpose();
    } else {
      s.input.head(E).setZero();
    }
    if (d == 0) {
      s.input.tail(E) = w.start_embedding;
    } else {
      s.input.tail(E) =
          w.action_embeddings[d - 1].row(out[d - 1].action).transpose();
    }

    s.layers.resize(L);
    const VectorX<Scalar>* layer_in = &s.input;
    for (int l = 0; l < L; ++l) {
      const auto& lw = w.layers[l];
      const VectorX<Scalar>& h_prev = d == 0 ? zero_h : out[d - 1].layers[l].hidden;
      const VectorX<Scalar>& c_prev = d == 0 ? zero_h : out[d - 1].layers[l].cell;
      VectorX<Scalar> pre = lw.bias;
      pre.noalias() += lw.input * *layer_in;
      pre.noalias() += lw.recurrent * h_prev;

      auto& c = s.layers[l];
      c.in_gate = sigmoid<Scalar>(pre.segment(0, H));
      c.forget_gate = sigmoid<Scalar>(pre.segment(H, H));
      c.out_gate = sigmoid<Scalar>(pre.segment(2 * H, H));
      c.candidate = pre.segment(3 * H, H).array().tanh().matrix();
      c.cell = c.forget_gate.cwiseProduct(c_prev) +
               c.in_gate.cwiseProduct(c.candidate);
      c.tanh_cell = c.cell.array().tanh().matrix();
      c.hidden = c.out_gate.cwiseProduct(c.tanh_cell);
      layer_in = &c.hidden;
    }

    s.top = *layer_in;
    s.top.noalias() += w.skip * s.input;
    VectorX<Scalar> logits = w.output_biases[d];
    logits.noalias() += w.output_weights[d] * s.top;
    const Scalar max_logit = logits.maxCoeff();
    const Scalar log_norm =
        max_logit + std::log((logits.array() - max_logit).exp().sum());
    s.log_probs = (logits.array() - log_norm).matrix();
    s.probs = s.log_probs.array().exp().matrix();
    s.entropy = -(s.probs.array() * s.log_probs.array()).sum();
    s.action = choose(d, s.probs);
  }
  return out;
}

}  // namespace detail

// All tensors i.i.d. uniform on [-init_range, init_range], drawn in
// visit_tensors order (column-major within a tensor). Version starts at 0.
template <typename Scalar = double>
ControllerParamsT<Scalar> init_params(const SearchSpace& space, int num_tasks,
                                      const ControllerConfig& config, Rng& rng) {
  if (num_tasks < 1) throw ConfigError("controller needs at least one task");
  if (config.embedding_size < 1 || config.hidden_size < 1 || config.num_layers < 1) {
    throw ConfigError("controller sizes must be positive");
  }
  if (!(config.init_range >= 0) || !std::isfinite(config.init_range)) {
    throw ConfigError("init_range must be finite and non-negative");
  }
  const int E = config.embedding_size;
  const int H = config.hidden_size;
  const int D = space.num_dimensions();

  ControllerParamsT<Scalar> params;
  params.config = config;
  auto& t = params.tensors;
  t.start_embedding.resize(E);
  t.task_embeddings.resize(num_tasks, E);
  for (int d = 0; d < D; ++d) {
    t.action_embeddings.emplace_back(space.option_count(d), E);
    t.output_weights.emplace_back(space.option_count(d), H);
    t.output_biases.emplace_back(space.option_count(d));
  }
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = l == 0 ? 2 * E : H;
    t.layers.push_back({MatrixX<Scalar>(4 * H, in), MatrixX<Scalar>(4 * H, H),
                        VectorX<Scalar>(4 * H)});
  }
  t.skip.resize(H, 2 * E);

  std::uniform_real_distribution<double> uniform(-config.init_range,
                                                 config.init_range);
  visit_tensors(
      [&](const std::string&, auto& x) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          x.data()[i] = static_cast<Scalar>(uniform(rng));
        }
      },
      t);
  return params;
}

// Samples one action per dimension, feeding each sampled action back as the
// next step's input.
template <typename Scalar>
PolicyRolloutT<Scalar> sample_rollout(const ControllerParamsT<Scalar>& params,
                                      int task_id, Rng& rng) {
  detail::check_task(task_id, params.num_tasks());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto steps = detail::unroll(
      params, task_id, params.num_dimensions(),
      [&](int, const VectorX<Scalar>& probs) {
        const Scalar u = static_cast<Scalar>(unit(rng));
        Scalar cumulative = 0;
        int last_positive = 0;
        for (int k = 0; k < probs.size(); ++k) {
          if (probs[k] > 0) last_positive = k;
          cumulative += probs[k];
          if (u < cumulative) return k;
        }
        return last_positive;
      });

  PolicyRolloutT<Scalar> rollout;
  rollout.task_id = task_id;
  rollout.parameter_version = params.version;
  for (const auto& s : steps) {
    rollout.spec.choices.push_back(s.action);
    rollout.step_log_probs.push_back(s.log_probs[s.action]);
    rollout.total_log_prob += s.log_probs[s.action];
    rollout.total_entropy += s.entropy;
  }
  return rollout;
}

// Teacher-forced score of `spec`; same dynamics as sample_rollout.
template <typename Scalar>
SequenceScoreT<Scalar> log_prob(const ControllerParamsT<Scalar>& params,
                                int task_id, const ModelSpec& spec) {
  detail::check_task(task_id, params.num_tasks());
  detail::check_spec(params, spec);
  auto steps = detail::unroll(params, task_id, params.num_dimensions(),
                              [&](int d, const auto&) { return spec.choices[d]; });
  SequenceScoreT<Scalar> score;
  for (const auto& s : steps) {
    score.step_log_probs.push_back(s.log_probs[s.action]);
    score.total_log_prob += s.log_probs[s.action];
    score.total_entropy += s.entropy;
  }
  return score;
}

// Action distribution of dimension prefix.size() given the earlier actions.
template <typename Scalar>
VectorX<Scalar> step_distribution(const ControllerParamsT<Scalar>& params,
                                  int task_id, const std::vector<int>& prefix) {
  detail::check_task(task_id, params.num_tasks());
  const int steps = static_cast<int>(prefix.size()) + 1;
  if (steps > params.num_dimensions()) {
    throw ConfigError("prefix covers every dimension");
  }
  auto cache = detail::unroll(params, task_id, steps, [&](int d, const auto&) {
    return d < static_cast<int>(prefix.size()) ? prefix[d] : 0;
  });
  return cache.back().probs;
}

// Greedy argmax action at every step (lowest index on ties).
template <typename Scalar>
ModelSpec greedy_spec(const ControllerParamsT<Scalar>& params, int task_id) {
  detail::check_task(task_id, params.num_tasks());
  auto steps = detail::unroll(params, task_id, params.num_dimensions(),
                              [](int, const VectorX<Scalar>& probs) {
                                Eigen::Index best = 0;
                                probs.maxCoeff(&best);
                                return static_cast<int>(best);
                              });
  ModelSpec spec;
  for (const auto& s : steps) spec.choices.push_back(s.action);
  return spec;
}

// Exact gradient, by backpropagation through the unrolled sequence, of
//   coefficient * log pi(spec | task) + entropy_weight * sum_d H(pi_d)
// where H(pi_d) is the entropy of step d's distribution along `spec`.
template <typename Scalar>
ControllerTensors<Scalar> policy_gradient(const ControllerParamsT<Scalar>& params,
                                          int task_id, const ModelSpec& spec,
                                          Scalar coefficient,
                                          Scalar entropy_weight) {
  detail::check_task(task_id, params.num_tasks());
  detail::check_spec(params, spec);
  if (!std::isfinite(static_cast<double>(coefficient)) ||
      !std::isfinite(static_cast<double>(entropy_weight))) {
    throw NumericError("policy gradient coefficient is not finite");
  }

  const auto& w = params.tensors;
  const int D = params.num_dimensions();
  const int E = params.embedding_size();
  const int H = params.hidden_size();
  const int L = static_cast<int>(w.layers.size());
  auto steps = detail::unroll(params, task_id, D,
                              [&](int d, const auto&) { return spec.choices[d]; });

  ControllerTensors<Scalar> g = zeros_like(w);
  const VectorX<Scalar> zero_h = VectorX<Scalar>::Zero(H);
  std::vector<VectorX<Scalar>> dh_next(L, zero_h), dc_next(L, zero_h);
  VectorX<Scalar> dpre(4 * H);

  for (int d = D - 1; d >= 0; --d) {
    const auto& s = steps[d];
    VectorX<Scalar> dlogits = -coefficient * s.probs;
    dlogits[s.action] += coefficient;
    if (entropy_weight != Scalar(0)) {
      dlogits.array() -= entropy_weight * s.probs.array() *
                         (s.log_probs.array() + s.entropy);
    }
    g.output_weights[d].noalias() += dlogits * s.top.transpose();
    g.output_biases[d] += dlogits;
    const VectorX<Scalar> dtop = w.output_weights[d].transpose() * dlogits;
    g.skip.noalias() += dtop * s.input.transpose();
    VectorX<Scalar> dinput = w.skip.transpose() * dtop;

    VectorX<Scalar> dh_above = dtop;
    for (int l = L - 1; l >= 0; --l) {
      const auto& c = s.layers[l];
      const VectorX<Scalar>& h_prev = d == 0 ? zero_h : steps[d - 1].layers[l].hidden;
      const VectorX<Scalar>& c_prev = d == 0 ? zero_h : steps[d - 1].layers[l].cell;
      const VectorX<Scalar>& layer_in = l == 0 ? s.input : s.layers[l - 1].hidden;

      const VectorX<Scalar> dh = dh_above + dh_next[l];
      const VectorX<Scalar> dcell =
          dc_next[l] + (dh.array() * c.out_gate.array() *
                        (Scalar(1) - c.tanh_cell.array().square()))
                           .matrix();
      const auto i = c.in_gate.array();
      const auto f = c.forget_gate.array();
      const auto o = c.out_gate.array();
      const auto cand = c.candidate.array();
      dpre.segment(0, H) = (dcell.array() * cand * i * (Scalar(1) - i)).matrix();
      dpre.segment(H, H) =
          (dcell.array() * c_prev.array() * f * (Scalar(1) - f)).matrix();
      dpre.segment(2 * H, H) =
          (dh.array() * c.tanh_cell.array() * o * (Scalar(1) - o)).matrix();
      dpre.segment(3 * H, H) =
          (dcell.array() * i * (Scalar(1) - cand.square())).matrix();
      dc_next[l] = (dcell.array() * f).matrix();

      auto& lg = g.layers[l];
      lg.input.noalias() += dpre * layer_in.transpose();
      lg.recurrent.noalias() += dpre * h_prev.transpose();
      lg.bias += dpre;
      dh_next[l].noalias() = w.layers[l].recurrent.transpose() * dpre;
      if (l > 0) {
        dh_above.noalias() = w.layers[l].input.transpose() * dpre;
      } else {
        dinput.noalias() += w.layers[l].input.transpose() * dpre;
      }
    }

    if (params.config.task_conditioning) {
      g.task_embeddings.row(task_id) += dinput.head(E).transpose();
    }
    if (d == 0) {
      g.start_embedding += dinput.tail(E);
    } else {
      g.action_embeddings[d - 1].row(spec.choices[d - 1]) +=
          dinput.tail(E).transpose();
    }
  }
  return g;
}

// Appends a task-embedding row drawn uniform on [-init_range, init_range];
// every other tensor is left untouched. Returns the new task id.
template <typename Scalar>
int add_task_embedding(ControllerParamsT<Scalar>& params, Rng& rng) {
  auto& table = params.tensors.task_embeddings;
  const Eigen::Index id = table.rows();
  table.conservativeResize(id + 1, Eigen::NoChange);
  std::uniform_real_distribution<double> uniform(-params.config.init_range,
                                                 params.config.init_range);
  for (Eigen::Index j = 0; j < table.cols(); ++j) {
    table(id, j) = static_cast<Scalar>(uniform(rng));
  }
  return static_cast<int>(id);
}

}  // namespace taml

#endif  // TAML_CONTROLLER_HPP_
