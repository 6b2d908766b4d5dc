#pragma once

#include <cstdint>

#include "qnpg/mdp.hpp"

namespace qnpg {

/// Random sparse MDP: for every (s, a) exactly `support_size` distinct target
/// states, each reached with probability 1/support_size, and rewards
/// r_s^a = U_s^a · U_s with independent U[0, 1) draws.
struct SynthSpec {
  Eigen::Index num_states = 200;
  Eigen::Index num_actions = 50;
  Eigen::Index support_size = 20;
  double discount = 0.99;
  std::uint64_t seed = 1;

  /// Throws SpecError.
  void validate() const;
};

/**
 * Deterministic in `spec`. Draw order (all from CounterRng(seed, stream)):
 *
 *   stream 1: U_s^a, s-major then a
 *   stream 2: U_s
 *   stream 3: supports; for s, for a: a partial Fisher-Yates shuffle of
 *             [0, |S|) restarted from the identity, swapping position i with
 *             i + below(|S| − i) for i < support_size
 *
 * Targets are stored in ascending order; each holds the double nearest to
 * 1/support_size except the last, which is 1 minus the sum of the others so
 * the row sums to exactly 1.0 in that order. Self-transitions are allowed.
 */
MdpModel generate_synthetic(const SynthSpec& spec);

}  // namespace qnpg
