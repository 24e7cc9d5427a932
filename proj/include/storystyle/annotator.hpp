#ifndef STORYSTYLE_ANNOTATOR_HPP
#define STORYSTYLE_ANNOTATOR_HPP

#include <array>
#include <string>
#include <vector>

#include "storystyle/keywords.hpp"

namespace storystyle {

inline constexpr double kDefaultTau1 = 0.7;
inline constexpr double kDefaultTau2 = 0.3;
inline constexpr double kSigmaFloor = 1e-6;

/// Per-style Gaussian statistics of keyword counts, fitted on the training
/// split. Population standard deviation, clamped to kSigmaFloor.
struct StyleStats {
  double mu_emo = 0.0;
  double sigma_emo = kSigmaFloor;
  double mu_eve = 0.0;
  double sigma_eve = kSigmaFloor;
  long long n_fit = 0;

  std::string to_json() const;
  static StyleStats from_json(const std::string& json_text);
};

struct AnnotatedStory {
  Story story;
  StyleToken label = StyleToken::OTHER;
  KeywordSet keywords;
  std::vector<std::string> planning_keywords;
  double n_prime_emo = 0.0;
  double n_prime_eve = 0.0;
};

StyleStats fit_style_stats(const std::vector<KeywordSet>& train);

/// Phi((n - mu) / sigma).
double normalize_count(double n, double mu, double sigma);

/// OTHER when both values fall below tau1 or their gap is below tau2
/// (strict comparisons); otherwise the larger side wins.
StyleToken assign_label(double n_emo, double n_eve, double tau1, double tau2);

/// Up to five planning keywords for OTHER stories: alternate the two styles'
/// unique keywords, each style ordered by descending within-story frequency
/// then first occurrence, skipping words already taken.
std::vector<std::string> select_other_keywords(const KeywordSet& kws);

/// Immutable annotation inputs shared by the annotator and the metrics.
struct AnnotationAssets {
  EmotionLexicon lexicon;
  RuleTagger tagger;
  std::set<std::string> stopwords;
  std::set<std::string> banned_stems;
  StyleStats stats;
  double tau1 = kDefaultTau1;
  double tau2 = kDefaultTau2;
};

AnnotatedStory annotate_story(const Story& story, const AnnotationAssets& assets);

struct LabelDistribution {
  long long n_emo = 0;
  long long n_eve = 0;
  long long n_other = 0;

  long long total() const { return n_emo + n_eve + n_other; }
  double frac_emo() const { return total() ? double(n_emo) / double(total()) : 0.0; }
  double frac_eve() const { return total() ? double(n_eve) / double(total()) : 0.0; }
  double frac_other() const { return total() ? double(n_other) / double(total()) : 0.0; }
};

/// Labels every story with stats already fitted on the training split.
/// Parallel over stories; the output order matches the input order.
std::vector<AnnotatedStory> annotate_corpus(const std::vector<Story>& stories,
                                            const AnnotationAssets& assets);

LabelDistribution label_distribution(const std::vector<AnnotatedStory>& stories);

}  // namespace storystyle

#endif
