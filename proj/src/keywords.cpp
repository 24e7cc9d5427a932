#include "storystyle/keywords.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

const std::set<std::string>& selected_emotion_labels() {
  static const std::set<std::string> labels = {"fear",    "anger", "surprise",
                                               "sadness", "disgust", "joy"};
  return labels;
}

EmotionLexicon EmotionLexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open emotion lexicon: " + path);
  EmotionLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string word, label, flag;
    if (!std::getline(ss, word, '\t') || !std::getline(ss, label, '\t') ||
        !std::getline(ss, flag))
      throw FormatError("emotion lexicon line " + std::to_string(line_no) +
                        ": expected word<TAB>label<TAB>0|1");
    while (!flag.empty() && (flag.back() == '\r' || flag.back() == ' '))
      flag.pop_back();
    if (flag == "1") lex.add(word, label);
  }
  return lex;
}

void EmotionLexicon::add(const std::string& word, const std::string& label) {
  std::string lower = word;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  word_labels_[lower].insert(label);
}

const std::set<std::string>& EmotionLexicon::labels(
    const std::string& word) const {
  static const std::set<std::string> empty;
  auto it = word_labels_.find(word);
  return it == word_labels_.end() ? empty : it->second;
}

bool EmotionLexicon::has_selected_label(const std::string& word) const {
  const auto& ls = labels(word);
  for (const auto& l : ls)
    if (selected_emotion_labels().count(l)) return true;
  return false;
}

bool is_verb_tag(const PosTag& tag) {
  return tag == "VB" || tag == "VBD" || tag == "VBG" || tag == "VBN" ||
         tag == "VBP" || tag == "VBZ";
}

RuleTagger RuleTagger::load(const std::string& lexicon_path) {
  std::ifstream in(lexicon_path);
  if (!in) throw IoError("cannot open tagger lexicon: " + lexicon_path);
  RuleTagger tagger;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string word, tag;
    if (!std::getline(ss, word, '\t') || !std::getline(ss, tag))
      throw FormatError("tagger lexicon line " + std::to_string(line_no) +
                        ": expected word<TAB>tag");
    while (!tag.empty() && (tag.back() == '\r' || tag.back() == ' '))
      tag.pop_back();
    tagger.add(word, tag);
  }
  return tagger;
}

void RuleTagger::add(const std::string& word, const PosTag& tag) {
  lexicon_[word] = tag;
}

namespace {

bool ends_with(const std::string& s, const char* suffix) {
  const std::size_t n = std::char_traits<char>::length(suffix);
  return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

bool is_all_digit(const std::string& s) {
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return !s.empty();
}

}  // namespace

PosTag RuleTagger::tag_word(const std::string& token) const {
  if (token.size() >= 3 && token.front() == '<' && token.back() == '>')
    return "NNP";
  if (token.size() == 1 &&
      !std::isalnum(static_cast<unsigned char>(token[0]))) {
    const char c = token[0];
    if (c == ',') return ",";
    if (c == ':' || c == ';') return ":";
    return ".";
  }
  if (is_all_digit(token)) return "CD";
  auto it = lexicon_.find(token);
  if (it != lexicon_.end()) return it->second;
  // Suffix rules, first match wins.
  if (ends_with(token, "ed")) return "VBD";
  if (ends_with(token, "ing")) return "VBG";
  if (ends_with(token, "ly")) return "RB";
  if (ends_with(token, "ness") || ends_with(token, "ment") ||
      ends_with(token, "tion") || ends_with(token, "sion"))
    return "NN";
  if (ends_with(token, "ous") || ends_with(token, "ful") ||
      ends_with(token, "ive") || ends_with(token, "able") ||
      ends_with(token, "ible") || ends_with(token, "al") ||
      ends_with(token, "ic"))
    return "JJ";
  if (token.size() > 3 && token.back() == 's' && !ends_with(token, "ss") &&
      !ends_with(token, "us") && !ends_with(token, "is"))
    return "NNS";
  return "NN";
}

std::vector<PosTag> RuleTagger::tag(
    const std::vector<std::string>& tokens) const {
  std::vector<PosTag> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(tag_word(t));
  return tags;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword list: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty() && line[0] != '#') words.insert(line);
  }
  return words;
}

double IdfTable::at(const std::string& stem) const {
  auto it = idf.find(stem);
  if (it == idf.end()) throw DataError("stem not in idf table: " + stem);
  return it->second;
}

std::string IdfTable::to_json() const {
  json j;
  j["n_docs"] = n_docs;
  j["idf"] = idf;
  return j.dump(2) + "\n";
}

IdfTable IdfTable::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  IdfTable t;
  t.n_docs = j.at("n_docs").get<long long>();
  for (const auto& [stem, v] : j.at("idf").items())
    t.idf[stem] = v.get<double>();
  return t;
}

std::vector<std::string> emotion_keywords(
    const std::vector<std::string>& tokens, const EmotionLexicon& lex) {
  std::vector<std::string> out;
  for (const auto& t : tokens)
    if (lex.has_selected_label(t)) out.push_back(t);
  return out;
}

std::vector<std::string> raw_verb_keywords(
    const std::vector<std::string>& tokens, const std::vector<PosTag>& tags) {
  if (tokens.size() != tags.size())
    throw DataError("token/tag length mismatch");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (is_verb_tag(tags[i])) out.push_back(tokens[i]);
  return out;
}

IdfTable compute_idf(
    const std::vector<std::vector<std::string>>& verb_keywords_per_story) {
  if (verb_keywords_per_story.empty())
    throw DataError("compute_idf: empty corpus");
  IdfTable table;
  table.n_docs = static_cast<long long>(verb_keywords_per_story.size());
  std::map<std::string, long long> df;
  for (const auto& kws : verb_keywords_per_story) {
    std::set<std::string> stems;
    for (const auto& w : kws) stems.insert(porter_stem(w));
    for (const auto& s : stems) ++df[s];
  }
  for (const auto& [stem, count] : df)
    table.idf[stem] =
        std::log(static_cast<double>(table.n_docs) / static_cast<double>(count));
  return table;
}

std::set<std::string> bottom_k_idf(const IdfTable& table, int k) {
  if (k < 0) throw ConfigError("bottom_k_idf: k must be >= 0");
  std::vector<std::pair<std::string, double>> items(table.idf.begin(),
                                                    table.idf.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::set<std::string> out;
  const std::size_t limit =
      std::min(items.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < limit; ++i) out.insert(items[i].first);
  return out;
}

std::vector<std::string> event_keywords(
    const std::vector<std::string>& tokens, const std::vector<PosTag>& tags,
    const std::set<std::string>& stopwords,
    const std::set<std::string>& banned_stems) {
  if (tokens.size() != tags.size())
    throw DataError("token/tag length mismatch");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_verb_tag(tags[i])) continue;
    if (stopwords.count(tokens[i])) continue;
    if (banned_stems.count(porter_stem(tokens[i]))) continue;
    out.push_back(tokens[i]);
  }
  return out;
}

KeywordSet extract_keywords(const Story& story, const EmotionLexicon& lex,
                            const PosTagger& tagger,
                            const std::set<std::string>& stopwords,
                            const std::set<std::string>& banned_stems) {
  const auto tokens = tokenize_sentences(story.continuation());
  const auto tags = tagger.tag(tokens);
  KeywordSet kws;
  kws.emotion = emotion_keywords(tokens, lex);
  kws.event = event_keywords(tokens, tags, stopwords, banned_stems);
  return kws;
}

}  // namespace storystyle
