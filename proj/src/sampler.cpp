#include "storystyle/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace storystyle {

void SamplerConfig::validate(int vocab_size, int model_max_len) const {
  if (k < 1 || k > vocab_size)
    throw ConfigError("sampler: k must be in [1, |V|]");
  if (temperature <= 0) throw ConfigError("sampler: temperature must be > 0");
  if (max_len < 1 || max_len > model_max_len)
    throw ConfigError("sampler: max_len must be in [1, model max positions]");
}

int top_k_sample(const std::vector<double>& p, int k, double temperature,
                 Rng& rng) {
  const int n = static_cast<int>(p.size());
  if (k < 1 || k > n) throw ConfigError("top_k_sample: k out of range");
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](int a, int b) {
                      if (p[static_cast<std::size_t>(a)] !=
                          p[static_cast<std::size_t>(b)])
                        return p[static_cast<std::size_t>(a)] >
                               p[static_cast<std::size_t>(b)];
                      return a < b;
                    });

  // logits = log p / T over the kept set, then softmax.
  std::vector<double> weights(static_cast<std::size_t>(k));
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const double pi = p[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    const double logit =
        pi > 0 ? std::log(pi) / temperature
               : -std::numeric_limits<double>::infinity();
    weights[static_cast<std::size_t>(i)] = logit;
    max_logit = std::max(max_logit, logit);
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    double& w = weights[static_cast<std::size_t>(i)];
    w = std::isinf(w) ? 0.0 : std::exp(w - max_logit);
    sum += w;
  }
  const double u = rng.uniform() * sum;
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += weights[static_cast<std::size_t>(i)];
    if (u < acc) return idx[static_cast<std::size_t>(i)];
  }
  // Roundoff fallthrough: last kept id with nonzero weight.
  for (int i = k - 1; i >= 0; --i)
    if (weights[static_cast<std::size_t>(i)] > 0.0)
      return idx[static_cast<std::size_t>(i)];
  return idx[0];
}

std::vector<int> generate(const ModelParameters& params, StyleToken style,
                          const std::vector<int>& leading_ids,
                          const SamplerConfig& cfg, Rng& rng) {
  cfg.validate(params.cfg.vocab_size, params.cfg.max_len);
  EncodeCache enc = encode(params, style, leading_ids);
  PlanDistribution plan = plan_distribution(params, enc);
  DecodeSession session(params, enc, plan);

  std::vector<int> out;
  int next_input = kBosId;
  while (static_cast<int>(out.size()) < cfg.max_len &&
         session.length() < params.cfg.max_len) {
    StepOutput step = session.step(next_input);
    std::vector<double> p = step.p;
    p[kPadId] = 0.0;
    p[kBosId] = 0.0;
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
    const int id = top_k_sample(p, cfg.k, cfg.temperature, rng);
    if (id == kEosId) break;
    out.push_back(id);
    next_input = id;
  }
  return out;
}

}  // namespace storystyle
