#ifndef STORYSTYLE_ARTIFACTS_HPP
#define STORYSTYLE_ARTIFACTS_HPP

#include <string>
#include <vector>

#include "storystyle/annotator.hpp"
#include "storystyle/metrics.hpp"

namespace storystyle {

/// Annotated story plus the split it landed in.
struct AnnotatedDoc {
  AnnotatedStory ann;
  std::string split;  // train | valid | test
};

void write_corpus_jsonl(const std::string& path,
                        const std::vector<Story>& stories);

/// jsonl with id, sentences, split, label, n_prime_emo, n_prime_eve,
/// planning_keywords per record. Keyword multisets are recomputable and not
/// persisted.
void write_annotated_jsonl(const std::string& path,
                           const std::vector<AnnotatedDoc>& docs);
std::vector<AnnotatedDoc> read_annotated_jsonl(const std::string& path);

void write_generations_jsonl(const std::string& path,
                             const std::vector<GenerationRecord>& records);
std::vector<GenerationRecord> read_generations_jsonl(const std::string& path);

/// Default bundled data files (compiled-in source-tree path).
struct AssetPaths {
  std::string emotion_lexicon;
  std::string stopwords;
  std::string tagger_lexicon;
  std::string names_male;
  std::string names_female;
  std::string names_neutral;

  static AssetPaths bundled();
};

/// Loads the file-backed parts of the annotation assets and combines them
/// with fitted statistics. banned_k selects the bottom-k IDF stems.
AnnotationAssets load_assets(const AssetPaths& paths, const StyleStats& stats,
                             const IdfTable& idf, int banned_k, double tau1,
                             double tau2);

/// Deterministic run manifest: config, seed and content hashes of inputs.
void write_manifest(const std::string& path, const std::string& command,
                    const std::string& config_json, std::uint64_t seed,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_paths);

}  // namespace storystyle

#endif
