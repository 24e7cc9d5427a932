#ifndef STORYSTYLE_KEYWORDS_HPP
#define STORYSTYLE_KEYWORDS_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "storystyle/corpus.hpp"

namespace storystyle {

// The six emotion labels that mark a word as an emotion-style keyword.
// Lexicon files may carry further labels (trust, anticipation, ...); those
// never select a keyword.
const std::set<std::string>& selected_emotion_labels();

/// Word -> emotion-label set, loaded from TSV lines `word<TAB>label<TAB>0|1`.
class EmotionLexicon {
 public:
  static EmotionLexicon load(const std::string& path);

  void add(const std::string& word, const std::string& label);

  /// Empty set when the word is absent.
  const std::set<std::string>& labels(const std::string& word) const;

  bool has_selected_label(const std::string& word) const;

  std::size_t size() const { return word_labels_.size(); }

 private:
  std::unordered_map<std::string, std::set<std::string>> word_labels_;
};

using PosTag = std::string;

bool is_verb_tag(const PosTag& tag);

/// Tagger interface; one tag per token, deterministic.
class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<PosTag> tag(
      const std::vector<std::string>& tokens) const = 0;
};

/// Deterministic lexicon + suffix-rule tagger. Resolution order per token:
///   1. <...> placeholders -> NNP
///   2. punctuation -> "." / "," / ":"
///   3. digits -> CD
///   4. exact lexicon hit
///   5. suffix rules, first match wins:
///        -ed -> VBD, -ing -> VBG, -ly -> RB,
///        -ness/-ment/-tion/-sion -> NN,
///        -ous/-ful/-ive/-able/-ible/-al/-ic -> JJ,
///        -s (length > 3, not -ss/-us/-is) -> NNS
///   6. default NN
class RuleTagger : public PosTagger {
 public:
  static RuleTagger load(const std::string& lexicon_path);

  void add(const std::string& word, const PosTag& tag);

  std::vector<PosTag> tag(
      const std::vector<std::string>& tokens) const override;

  PosTag tag_word(const std::string& token) const;

 private:
  std::unordered_map<std::string, PosTag> lexicon_;
};

/// Porter (1980) stemmer. Input must be a lowercase ASCII word.
std::string porter_stem(const std::string& word);

std::set<std::string> load_stopwords(const std::string& path);

struct IdfTable {
  std::map<std::string, double> idf;  // stem -> ln(n_docs / df)
  long long n_docs = 0;

  double at(const std::string& stem) const;
  bool contains(const std::string& stem) const {
    return idf.count(stem) > 0;
  }

  std::string to_json() const;
  static IdfTable from_json(const std::string& json_text);
};

struct KeywordSet {
  std::vector<std::string> emotion;  // multiset, story order preserved
  std::vector<std::string> event;
};

/// Tokens whose lexicon labels intersect the six selected emotions,
/// multiplicity and order preserved.
std::vector<std::string> emotion_keywords(
    const std::vector<std::string>& tokens, const EmotionLexicon& lex);

/// Verb-tagged tokens of the story continuation with no filtering; IDF is
/// fitted on the stems of these before stop words are removed, so stop-word
/// verbs can land in the banned bottom-k.
std::vector<std::string> raw_verb_keywords(
    const std::vector<std::string>& tokens, const std::vector<PosTag>& tags);

IdfTable compute_idf(
    const std::vector<std::vector<std::string>>& verb_keywords_per_story);

/// The k stems with lowest idf; ties broken lexicographically ascending.
std::set<std::string> bottom_k_idf(const IdfTable& table, int k);

/// Verb-tagged tokens that are neither stop words nor banned by stem.
std::vector<std::string> event_keywords(
    const std::vector<std::string>& tokens, const std::vector<PosTag>& tags,
    const std::set<std::string>& stopwords,
    const std::set<std::string>& banned_stems);

/// Keyword extraction scope is the continuation sentences only.
KeywordSet extract_keywords(const Story& story, const EmotionLexicon& lex,
                            const PosTagger& tagger,
                            const std::set<std::string>& stopwords,
                            const std::set<std::string>& banned_stems);

}  // namespace storystyle

#endif
