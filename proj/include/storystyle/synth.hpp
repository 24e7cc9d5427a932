#ifndef STORYSTYLE_SYNTH_HPP
#define STORYSTYLE_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "storystyle/corpus.hpp"

namespace storystyle {

/// Synthetic story corpus with controllable per-style keyword densities.
/// Styled continuations draw each content slot from the style vocabulary
/// with the configured density, so ground-truth tendencies are known by
/// construction. Leading sentences stay style-neutral.
struct SynthConfig {
  long long n_stories = 500;
  double frac_emo = 0.35;
  double frac_eve = 0.35;  // remainder is OTHER-leaning
  double density_emo = 0.65;
  double density_eve = 0.65;
  double density_other = 0.05;  // split between the two styles
  int sentence_len = 6;         // content slots per sentence
  int n_continuation_sentences = 4;
  std::uint64_t seed = 0;
  std::vector<std::string> emo_vocab;      // defaults bundled
  std::vector<std::string> eve_vocab;
  std::vector<std::string> neutral_vocab;

  void validate() const;
  void fill_default_vocab();

  std::string to_json() const;
  static SynthConfig from_json(const std::string& json_text);
};

struct SynthStory {
  Story story;
  StyleToken intended = StyleToken::OTHER;
};

std::vector<SynthStory> synth_corpus(const SynthConfig& cfg);

const std::vector<std::string>& default_emo_vocab();
const std::vector<std::string>& default_eve_vocab();
const std::vector<std::string>& default_neutral_vocab();

}  // namespace storystyle

#endif
