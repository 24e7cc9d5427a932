#ifndef STORYSTYLE_CORPUS_HPP
#define STORYSTYLE_CORPUS_HPP

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "storystyle/common.hpp"

namespace storystyle {

/// A story: first sentence is the leading context, the rest the continuation.
struct Story {
  std::string id;
  std::vector<std::string> sentences;

  std::string leading() const { return sentences.front(); }
  std::vector<std::string> continuation() const {
    return {sentences.begin() + 1, sentences.end()};
  }
};

enum class StyleToken { EMO, EVE, OTHER };

const std::string& style_token_string(StyleToken t);
StyleToken style_token_from_string(const std::string& s);

/// Name lists for delexicalization; the three sets are pairwise disjoint and
/// matching is case-sensitive.
struct NameLexicon {
  std::set<std::string> male;
  std::set<std::string> female;
  std::set<std::string> neutral;

  static NameLexicon load(const std::string& male_path,
                          const std::string& female_path,
                          const std::string& neutral_path);
};

// Reserved tokens occupy the lowest ids in this fixed order.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kEmoId = 4;
inline constexpr int kEveId = 5;
inline constexpr int kOtherId = 6;
inline constexpr int kMaleId = 7;
inline constexpr int kFemaleId = 8;
inline constexpr int kNeutralId = 9;
inline constexpr int kNumReserved = 10;

const std::array<std::string, kNumReserved>& reserved_tokens();

int style_token_id(StyleToken t);

class Vocabulary {
 public:
  Vocabulary();

  /// Adds a token unless already present; returns its id.
  int add(const std::string& token);

  int encode(const std::string& token) const;  // <unk> id when absent
  const std::string& decode(int id) const;     // throws on out-of-range id
  bool contains(const std::string& token) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

  std::vector<int> encode_all(const std::vector<std::string>& tokens) const;

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// FNV-1a over the token list; checkpoints record it to detect mismatches.
  std::uint64_t hash() const;

  std::string to_json() const;
  static Vocabulary from_json(const std::string& json_text);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

struct SplitConfig {
  double train_ratio = 0.8;
  double valid_ratio = 0.1;
  double test_ratio = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class CorpusFormat { Jsonl, Csv };

/// Reads stories in file order. Records need an id and at least two
/// non-empty sentences; violations raise FormatError with the line number.
std::vector<Story> load_corpus(const std::string& path, CorpusFormat format);

/// Replaces whole-token name occurrences with <MALE>/<FEMALE>/<NEUTRAL>.
Story delexicalize(const Story& story, const NameLexicon& names);

/// Lowercases, splits punctuation into single-character tokens, keeps
/// apostrophes inside words and <...> placeholder tokens intact.
std::vector<std::string> tokenize(const std::string& sentence);

std::vector<std::string> tokenize_sentences(
    const std::vector<std::string>& sentences);

struct CorpusSplit {
  std::vector<Story> train;
  std::vector<Story> valid;
  std::vector<Story> test;
};

/// Deterministic shuffled partition; floor-allocated sizes for valid/test,
/// remainder to train.
CorpusSplit split_corpus(const std::vector<Story>& stories,
                         const SplitConfig& cfg);

Vocabulary build_vocab(const std::vector<Story>& train, int min_count);

}  // namespace storystyle

#endif
