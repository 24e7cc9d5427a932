#ifndef STORYSTYLE_METRICS_HPP
#define STORYSTYLE_METRICS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "storystyle/annotator.hpp"
#include "storystyle/classifier.hpp"
#include "storystyle/model.hpp"

namespace storystyle {

struct GenerationRecord {
  std::string id;
  StyleToken target_style = StyleToken::EMO;
  std::string leading;
  std::vector<std::string> generated;  // tokens
  std::uint64_t seed = 0;
};

/// Both-styles generations for one beginning plus the reference continuation.
struct GenerationPair {
  std::string id;
  std::vector<std::string> emo;
  std::vector<std::string> eve;
  std::vector<std::string> reference;
};

struct MetricReport {
  std::optional<double> ppl, b1, b2, d1, d2, number, lsc, ssc;

  std::string to_json() const;
  std::string to_table() const;
};

/// Sentence-level BLEU-n: geometric mean of modified precisions for orders
/// 1..n with add-one smoothing on orders >= 2 only, times the brevity penalty.
double bleu_n(const std::vector<std::string>& candidate,
              const std::vector<std::string>& reference, int n);

/// Per beginning, the higher BLEU of the two style generations; averaged.
/// Returns (B-1, B-2).
std::pair<double, double> bleu_best_of_styles(
    const std::vector<GenerationPair>& pairs);

/// Corpus-level distinct n-grams / total n-grams over all generated stories.
double distinct_n(const std::vector<std::vector<std::string>>& stories, int n);

/// Mean Phi-normalized count of target-style keywords in generated stories.
double number_metric(const std::vector<std::vector<std::string>>& stories,
                     StyleToken target, const AnnotationAssets& assets);

/// Fraction of generated stories whose automatic annotation matches target.
double lsc(const std::vector<std::vector<std::string>>& stories,
           StyleToken target, const AnnotationAssets& assets);

/// Per-sample min over the two conditioning styles of exp(NLL/T), averaged.
double ppl_best_of_styles_from_pairs(
    const std::vector<std::pair<double, double>>& per_sample);

/// Per-token perplexity of the gold continuation under <emo> and <eve>.
std::pair<double, double> story_perplexities(const ModelParameters& params,
                                             const Vocabulary& vocab,
                                             const Story& story);

double ppl_best_of_styles(const ModelParameters& params,
                          const Vocabulary& vocab,
                          const std::vector<Story>& test_stories);

/// Label counts of generated token sequences under the annotation assets;
/// exposed for metric breakdowns and tests.
StyleToken annotate_generated(const std::vector<std::string>& tokens,
                              const AnnotationAssets& assets,
                              double* n_prime_emo = nullptr,
                              double* n_prime_eve = nullptr);

}  // namespace storystyle

#endif
