#ifndef DCDC_CHAIN_HPP
#define DCDC_CHAIN_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "dcdc/geometry.hpp"
#include "dcdc/rng.hpp"

namespace dcdc {

// One realized random mapping f: the drawn randomness is captured in the
// closures. apply_fn must map the domain box into itself; lipschitz_fn
// returns the local Lipschitz value Df(x) >= 0.
struct SampledMap {
  std::function<Vec(const Vec&)> apply_fn;
  std::function<double(const Vec&)> lipschitz_fn;
};

// A Markov chain X_{n+1} = f_{n+1}(X_n) given by its domain and a sampler of
// iid random mappings. Evaluation of a SampledMap is pure given the captured
// randomness; sampling takes an explicit generator.
struct ChainModel {
  std::string name;
  DomainBox domain;
  std::function<SampledMap(SplitRng&)> sample_map;

  // Closed-form constants used by the certifier where the chain admits them.
  std::optional<double> exact_edf2;  // E Df^2 (or a tight upper bound)
  std::optional<double> d2f_bound;   // Lipschitz constant of x -> Df(x)
  bool piecewise_df = false;         // indicator-valued Df: D2f reported 0 with caveat

  Vec sample_reference(SplitRng& rng) const { return domain.sample_uniform(rng); }
};

inline Vec apply(const ChainModel& chain, const SampledMap& map, const Vec& x) {
  chain.domain.require(x);
  return map.apply_fn(x);
}

inline double local_lipschitz(const ChainModel& chain, const SampledMap& map, const Vec& x) {
  chain.domain.require(x);
  return map.lipschitz_fn(x);
}

enum class X0Mode { kFixed, kReference };

struct TransitionTriple {
  Vec x0;
  SampledMap f1;
  SampledMap fm1;
};

// Draws (X0, f1, f_{-1}) for one step of Algorithm 1: X0 per mode, the two
// mappings from independent randomness.
inline TransitionTriple sample_transition_pair(const ChainModel& chain, SplitRng& rng,
                                               X0Mode mode, const Vec& fixed_x0 = {}) {
  TransitionTriple t;
  if (mode == X0Mode::kFixed) {
    chain.domain.require(fixed_x0);
    t.x0 = fixed_x0;
  } else {
    t.x0 = chain.sample_reference(rng);
  }
  t.f1 = chain.sample_map(rng);
  t.fm1 = chain.sample_map(rng);
  return t;
}

}  // namespace dcdc

#endif  // DCDC_CHAIN_HPP
