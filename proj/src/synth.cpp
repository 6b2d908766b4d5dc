#include "qnpg/synth.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "qnpg/errors.hpp"
#include "qnpg/rng.hpp"

namespace qnpg {

void SynthSpec::validate() const {
  std::ostringstream msg;
  if (num_states < 1 || num_actions < 1) {
    msg << "need at least one state and one action";
  } else if (support_size < 1 || support_size > num_states) {
    msg << "support size " << support_size << " must lie in [1, "
        << num_states << "]";
  } else if (!(discount > 0.0 && discount < 1.0)) {
    msg << "discount " << discount << " is outside (0, 1)";
  } else {
    return;
  }
  throw SpecError(msg.str());
}

MdpModel generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.num_states;
  const Eigen::Index m = spec.num_actions;
  const Eigen::Index k = spec.support_size;

  MdpModel model;
  model.num_states = n;
  model.num_actions = m;
  model.discount = spec.discount;

  CounterRng action_draws(spec.seed, 1);
  CounterRng state_draws(spec.seed, 2);
  CounterRng support_draws(spec.seed, 3);

  Eigen::MatrixXd action_factor(n, m);
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) {
      action_factor(s, a) = action_draws.next_double();
    }
  }
  model.rewards.resize(n, m);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double state_factor = state_draws.next_double();
    model.rewards.row(s) = action_factor.row(s) * state_factor;
  }

  const double share = 1.0 / static_cast<double>(k);
  std::vector<double> probs(static_cast<std::size_t>(k), share);
  double partial = 0.0;
  for (Eigen::Index i = 0; i + 1 < k; ++i) partial += probs[i];
  probs.back() = 1.0 - partial;

  // Triplets per action, collected state by state.
  std::vector<std::vector<Eigen::Triplet<double>>> entries(
      static_cast<std::size_t>(m));
  for (auto& e : entries) e.reserve(static_cast<std::size_t>(n * k));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> chosen(static_cast<std::size_t>(k));
  for (Eigen::Index s = 0; s < n; ++s) {
    for (Eigen::Index a = 0; a < m; ++a) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      for (Eigen::Index i = 0; i < k; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               support_draws.next_below(
                                   static_cast<std::uint64_t>(n - i)));
        std::swap(order[i], order[j]);
      }
      std::copy_n(order.begin(), k, chosen.begin());
      std::sort(chosen.begin(), chosen.end());
      for (Eigen::Index i = 0; i < k; ++i) {
        entries[a].emplace_back(s, chosen[i], probs[i]);
      }
    }
  }
  model.transitions.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index a = 0; a < m; ++a) {
    SparseMatrix p(n, n);
    p.setFromTriplets(entries[a].begin(), entries[a].end());
    p.makeCompressed();
    model.transitions.push_back(std::move(p));
  }
  return model;
}

}  // namespace qnpg
