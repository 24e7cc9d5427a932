#include "storystyle/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "storystyle/trainer.hpp"

namespace storystyle {

using nlohmann::json;

namespace {

void put(json& j, const char* key, const std::optional<double>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

// n-grams joined with a separator that cannot occur inside tokens.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
  std::vector<std::string> out;
  if (static_cast<int>(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size();
       ++i) {
    std::string g = tokens[i];
    for (int k = 1; k < n; ++k) {
      g += '\x1f';
      g += tokens[i + static_cast<std::size_t>(k)];
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::unordered_map<std::string, long long> counts(
    const std::vector<std::string>& grams) {
  std::unordered_map<std::string, long long> c;
  for (const auto& g : grams) ++c[g];
  return c;
}

}  // namespace

std::string MetricReport::to_json() const {
  json j;
  put(j, "ppl", ppl);
  put(j, "b1", b1);
  put(j, "b2", b2);
  put(j, "d1", d1);
  put(j, "d2", d2);
  put(j, "number", number);
  put(j, "lsc", lsc);
  put(j, "ssc", ssc);
  return j.dump(2) + "\n";
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  auto row = [&](const char* name, const std::optional<double>& v) {
    os << "  " << name << "\t";
    if (v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", *v);
      os << buf;
    } else {
      os << "n/a";
    }
    os << "\n";
  };
  os << "metric\tvalue\n";
  row("PPL", ppl);
  row("B-1", b1);
  row("B-2", b2);
  row("D-1", d1);
  row("D-2", d2);
  row("Number", number);
  row("LSC", lsc);
  row("SSC", ssc);
  return os.str();
}

double bleu_n(const std::vector<std::string>& candidate,
              const std::vector<std::string>& reference, int n) {
  if (candidate.empty()) throw DataError("bleu_n: empty candidate");
  if (n < 1) throw ConfigError("bleu_n: n must be >= 1");

  double log_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    const auto cand_grams = ngrams(candidate, order);
    const auto ref_counts = counts(ngrams(reference, order));
    auto cand_counts = counts(cand_grams);
    long long clipped = 0;
    for (const auto& [g, c] : cand_counts) {
      auto it = ref_counts.find(g);
      if (it != ref_counts.end()) clipped += std::min(c, it->second);
    }
    const long long total = static_cast<long long>(cand_grams.size());
    double precision;
    if (order == 1) {
      precision =
          total > 0 ? static_cast<double>(clipped) / static_cast<double>(total)
                    : 0.0;
      if (precision == 0.0) return 0.0;
    } else {
      precision = static_cast<double>(clipped + 1) /
                  static_cast<double>(total + 1);
    }
    log_sum += std::log(precision);
  }
  const double geo = std::exp(log_sum / static_cast<double>(n));

  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return geo * bp;
}

std::pair<double, double> bleu_best_of_styles(
    const std::vector<GenerationPair>& pairs) {
  if (pairs.empty()) throw DataError("bleu_best_of_styles: no pairs");
  double sum1 = 0.0, sum2 = 0.0;
  for (const auto& pair : pairs) {
    if (pair.emo.empty() || pair.eve.empty())
      throw DataError("bleu_best_of_styles: missing style generation for id " +
                      pair.id);
    sum1 += std::max(bleu_n(pair.emo, pair.reference, 1),
                     bleu_n(pair.eve, pair.reference, 1));
    sum2 += std::max(bleu_n(pair.emo, pair.reference, 2),
                     bleu_n(pair.eve, pair.reference, 2));
  }
  const double n = static_cast<double>(pairs.size());
  return {sum1 / n, sum2 / n};
}

double distinct_n(const std::vector<std::vector<std::string>>& stories,
                  int n) {
  if (n < 1) throw ConfigError("distinct_n: n must be >= 1");
  std::unordered_set<std::string> distinct;
  long long total = 0;
  for (const auto& story : stories) {
    for (auto& g : ngrams(story, n)) {
      ++total;
      distinct.insert(std::move(g));
    }
  }
  if (total == 0) throw DataError("distinct_n: no n-grams in generation set");
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

StyleToken annotate_generated(const std::vector<std::string>& tokens,
                              const AnnotationAssets& assets,
                              double* n_prime_emo, double* n_prime_eve) {
  const auto tags = assets.tagger.tag(tokens);
  const auto emo = emotion_keywords(tokens, assets.lexicon);
  const auto eve =
      event_keywords(tokens, tags, assets.stopwords, assets.banned_stems);
  const double np_emo =
      normalize_count(static_cast<double>(emo.size()), assets.stats.mu_emo,
                      assets.stats.sigma_emo);
  const double np_eve =
      normalize_count(static_cast<double>(eve.size()), assets.stats.mu_eve,
                      assets.stats.sigma_eve);
  if (n_prime_emo) *n_prime_emo = np_emo;
  if (n_prime_eve) *n_prime_eve = np_eve;
  return assign_label(np_emo, np_eve, assets.tau1, assets.tau2);
}

double number_metric(const std::vector<std::vector<std::string>>& stories,
                     StyleToken target, const AnnotationAssets& assets) {
  if (stories.empty()) throw DataError("number_metric: empty generation set");
  double sum = 0.0;
  for (const auto& tokens : stories) {
    double np_emo = 0.0, np_eve = 0.0;
    annotate_generated(tokens, assets, &np_emo, &np_eve);
    sum += target == StyleToken::EMO ? np_emo : np_eve;
  }
  return sum / static_cast<double>(stories.size());
}

double lsc(const std::vector<std::vector<std::string>>& stories,
           StyleToken target, const AnnotationAssets& assets) {
  if (stories.empty()) throw DataError("lsc: empty generation set");
  long long consistent = 0;
  for (const auto& tokens : stories)
    if (annotate_generated(tokens, assets) == target) ++consistent;
  return static_cast<double>(consistent) /
         static_cast<double>(stories.size());
}

double ppl_best_of_styles_from_pairs(
    const std::vector<std::pair<double, double>>& per_sample) {
  if (per_sample.empty()) throw DataError("ppl: empty sample set");
  double sum = 0.0;
  for (const auto& [emo, eve] : per_sample) sum += std::min(emo, eve);
  return sum / static_cast<double>(per_sample.size());
}

std::pair<double, double> story_perplexities(const ModelParameters& params,
                                             const Vocabulary& vocab,
                                             const Story& story) {
  AnnotatedStory dummy;
  dummy.story = story;
  auto eval_style = [&](StyleToken style) {
    dummy.label = style;
    TrainExample ex = make_example(dummy, vocab, params.cfg);
    SequenceForward fwd =
        forward_sequence(params, style, ex.enc_ids, ex.dec_input);
    const double nll = story_loss(fwd.p, ex.targets);
    return std::exp(nll / static_cast<double>(ex.targets.size()));
  };
  return {eval_style(StyleToken::EMO), eval_style(StyleToken::EVE)};
}

double ppl_best_of_styles(const ModelParameters& params,
                          const Vocabulary& vocab,
                          const std::vector<Story>& test_stories) {
  if (test_stories.empty()) throw DataError("ppl: empty test set");
  std::vector<std::pair<double, double>> pairs(test_stories.size());
  const int n = static_cast<int>(test_stories.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    pairs[static_cast<std::size_t>(i)] = story_perplexities(
        params, vocab, test_stories[static_cast<std::size_t>(i)]);
  return ppl_best_of_styles_from_pairs(pairs);
}

}  // namespace storystyle
