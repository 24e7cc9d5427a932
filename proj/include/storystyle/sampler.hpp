#ifndef STORYSTYLE_SAMPLER_HPP
#define STORYSTYLE_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "storystyle/model.hpp"

namespace storystyle {

struct SamplerConfig {
  int k = 50;
  double temperature = 0.8;
  int max_len = 120;
  std::uint64_t seed = 0;

  void validate(int vocab_size, int model_max_len) const;
};

/// Temperature-scaled top-k draw. Temperature applies in logit space first,
/// then the k highest-probability ids are kept (ties at the boundary go to
/// the lower id), renormalized and sampled. Advances rng deterministically.
int top_k_sample(const std::vector<double>& p, int k, double temperature,
                 Rng& rng);

/// Autoregressive continuation: encodes once, plans once, samples until
/// <eos> or max_len tokens. <pad> and <bos> are masked from the draw.
/// Returns generated ids without control tokens.
std::vector<int> generate(const ModelParameters& params, StyleToken style,
                          const std::vector<int>& leading_ids,
                          const SamplerConfig& cfg, Rng& rng);

}  // namespace storystyle

#endif
