#pragma once

// Small training problems shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include "lasdi/rom.hpp"
#include "lasdi/train.hpp"
#include "support.hpp"

namespace lasdi::testing {

/// Smooth synthetic trajectory with n_u components and the given times.
inline fom::Trajectory smooth_trajectory(int n_u, const Eigen::VectorXd& times, double phase,
                                         fom::ParameterPoint theta = {0.1, 1.0}) {
  fom::Trajectory t;
  t.theta = theta;
  t.times = times;
  t.states.resize(times.size(), n_u);
  for (Eigen::Index j = 0; j < times.size(); ++j)
    for (int i = 0; i < n_u; ++i)
      t.states(j, i) = 0.5 * std::sin(0.7 * i + phase + 1.3 * times(j)) *
                       std::exp(-0.4 * times(j)) + 0.1 * std::cos(0.3 * i * phase);
  return t;
}

/// Encoder/decoder of a single affine layer each, set to the identity.
inline rom::AutoencoderModel identity_autoencoder(int n) {
  auto m = rom::make_autoencoder(n, {}, n, 0);
  m.encoder.weights[0] = ad::Matrix::Identity(n, n);
  m.decoder.weights[0] = ad::Matrix::Identity(n, n);
  return m;
}

/// Everything needed to evaluate the training losses on one tape.
struct ToyProblem {
  rom::AutoencoderModel model;
  std::vector<rom::LatentCoefficients> coeffs;
  std::vector<train::TrainingData> data;
};

/// N_u = 9, L = 2, two trajectories of three frames (one nonuniform), random
/// nonzero coefficients.
inline ToyProblem toy_problem(std::uint64_t seed = 1) {
  ToyProblem p;
  p.model = rom::make_autoencoder(9, {6}, 2, seed, 3.0);
  std::mt19937_64 rng(seed);
  Eigen::VectorXd t1(3), t2(3);
  t1 << 0.0, 0.5, 1.0;
  t2 << 0.0, 0.3, 1.0;
  p.data.push_back(train::TrainingData::prepare(smooth_trajectory(9, t1, 0.2, {0.1, 1.0})));
  p.data.push_back(train::TrainingData::prepare(smooth_trajectory(9, t2, 1.1, {0.2, 0.5})));
  for (int i = 0; i < 2; ++i) {
    rom::LatentCoefficients c;
    c.A = random_matrix(2, 2, rng, -0.5, 0.5);
    c.b = random_matrix(2, 1, rng, -0.5, 0.5);
    p.coeffs.push_back(c);
  }
  return p;
}

/// Every trainable block of a toy problem, in a fixed order. b vectors are
/// exposed through `b_rows` (1 x L), which callers copy back before use.
struct ParameterView {
  std::vector<ad::Matrix*> blocks;
  std::vector<ad::Matrix> b_rows;
};

inline ParameterView parameter_view(ToyProblem& p) {
  ParameterView v;
  for (auto* net : {&p.model.encoder, &p.model.decoder})
    for (std::size_t l = 0; l < net->num_layers(); ++l) {
      v.blocks.push_back(&net->weights[l]);
      v.blocks.push_back(&net->biases[l]);
    }
  v.b_rows.reserve(p.coeffs.size());
  for (auto& c : p.coeffs) v.b_rows.push_back(c.b.transpose());
  for (std::size_t i = 0; i < p.coeffs.size(); ++i) {
    v.blocks.push_back(&p.coeffs[i].A);
    v.blocks.push_back(&v.b_rows[i]);
  }
  return v;
}

inline void sync_b(ToyProblem& p, const ParameterView& v) {
  for (std::size_t i = 0; i < p.coeffs.size(); ++i) p.coeffs[i].b = v.b_rows[i].transpose();
}

struct OnTape {
  rom::AutoencoderOnTape model;
  train::Coefficients coeffs;
};

inline OnTape attach_all(ad::Tape& tape, const ToyProblem& p) {
  OnTape o{rom::attach(tape, p.model), {}};
  for (const auto& c : p.coeffs) o.coeffs.push_back(rom::attach(tape, c));
  return o;
}

/// Gradients of the attached blocks in parameter_view order.
inline std::vector<ad::Matrix> tape_gradients(const OnTape& o) {
  std::vector<ad::Matrix> g;
  for (const auto* net : {&o.model.encoder, &o.model.decoder})
    for (std::size_t l = 0; l < net->weights.size(); ++l) {
      g.push_back(net->weights[l].grad());
      g.push_back(net->biases[l].grad());
    }
  for (const auto& c : o.coeffs) {
    g.push_back(c.A.grad());
    g.push_back(c.b.grad());
  }
  return g;
}

}  // namespace lasdi::testing
