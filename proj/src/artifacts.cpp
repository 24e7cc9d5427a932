#include "storystyle/artifacts.hpp"

#include <fstream>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

void write_corpus_jsonl(const std::string& path,
                        const std::vector<Story>& stories) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus: " + path);
  for (const auto& s : stories) {
    json j;
    j["id"] = s.id;
    j["sentences"] = s.sentences;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("corpus write failed: " + path);
}

void write_annotated_jsonl(const std::string& path,
                           const std::vector<AnnotatedDoc>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write annotated corpus: " + path);
  for (const auto& doc : docs) {
    json j;
    j["id"] = doc.ann.story.id;
    j["sentences"] = doc.ann.story.sentences;
    j["split"] = doc.split;
    j["label"] = style_token_string(doc.ann.label);
    j["n_prime_emo"] = doc.ann.n_prime_emo;
    j["n_prime_eve"] = doc.ann.n_prime_eve;
    j["planning_keywords"] = doc.ann.planning_keywords;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("annotated corpus write failed: " + path);
}

std::vector<AnnotatedDoc> read_annotated_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotated corpus: " + path);
  std::vector<AnnotatedDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("bad annotated record at line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    AnnotatedDoc doc;
    doc.ann.story.id = j.at("id").get<std::string>();
    doc.ann.story.sentences =
        j.at("sentences").get<std::vector<std::string>>();
    doc.split = j.at("split").get<std::string>();
    doc.ann.label = style_token_from_string(j.at("label").get<std::string>());
    doc.ann.n_prime_emo = j.at("n_prime_emo").get<double>();
    doc.ann.n_prime_eve = j.at("n_prime_eve").get<double>();
    doc.ann.planning_keywords =
        j.at("planning_keywords").get<std::vector<std::string>>();
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_generations_jsonl(const std::string& path,
                             const std::vector<GenerationRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write generations: " + path);
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["style"] = style_token_string(r.target_style);
    j["leading"] = r.leading;
    std::string text;
    for (const auto& tok : r.generated) {
      if (!text.empty()) text += ' ';
      text += tok;
    }
    j["generated"] = text;
    j["seed"] = r.seed;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("generations write failed: " + path);
}

std::vector<GenerationRecord> read_generations_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open generations: " + path);
  std::vector<GenerationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("bad generation record at line " +
                        std::to_string(line_no) + ": " + e.what());
    }
    GenerationRecord r;
    r.id = j.at("id").get<std::string>();
    r.target_style =
        style_token_from_string(j.at("style").get<std::string>());
    r.leading = j.at("leading").get<std::string>();
    const std::string text = j.at("generated").get<std::string>();
    std::string tok;
    for (char c : text) {
      if (c == ' ') {
        if (!tok.empty()) r.generated.push_back(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
    if (!tok.empty()) r.generated.push_back(tok);
    if (j.contains("seed")) r.seed = j.at("seed").get<std::uint64_t>();
    records.push_back(std::move(r));
  }
  return records;
}

AssetPaths AssetPaths::bundled() {
  const std::string dir = STORYSTYLE_DATA_DIR;
  AssetPaths p;
  p.emotion_lexicon = dir + "/emotion_lexicon_small.tsv";
  p.stopwords = dir + "/stopwords_english.txt";
  p.tagger_lexicon = dir + "/tagger_lexicon.tsv";
  p.names_male = dir + "/names_male.txt";
  p.names_female = dir + "/names_female.txt";
  p.names_neutral = dir + "/names_neutral.txt";
  return p;
}

AnnotationAssets load_assets(const AssetPaths& paths, const StyleStats& stats,
                             const IdfTable& idf, int banned_k, double tau1,
                             double tau2) {
  AnnotationAssets assets{EmotionLexicon::load(paths.emotion_lexicon),
                          RuleTagger::load(paths.tagger_lexicon),
                          load_stopwords(paths.stopwords),
                          bottom_k_idf(idf, banned_k),
                          stats,
                          tau1,
                          tau2};
  return assets;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::string& config_json, std::uint64_t seed,
                    const std::vector<std::string>& input_paths,
                    const std::vector<std::string>& output_paths) {
  json j;
  j["command"] = command;
  j["config"] = config_json.empty() ? json(nullptr)
                                    : json::parse(config_json);
  j["config_hash"] = to_hex(fnv1a64(config_json));
  j["seed"] = seed;
  json inputs = json::object();
  for (const auto& p : input_paths) inputs[p] = to_hex(hash_file(p));
  j["inputs"] = inputs;
  j["outputs"] = output_paths;
  write_file(path, j.dump(2) + "\n");
}

}  // namespace storystyle
