#include "storystyle/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

const std::string& style_token_string(StyleToken t) {
  static const std::string emo = "<emo>", eve = "<eve>", other = "<other>";
  switch (t) {
    case StyleToken::EMO: return emo;
    case StyleToken::EVE: return eve;
    default: return other;
  }
}

StyleToken style_token_from_string(const std::string& s) {
  if (s == "<emo>") return StyleToken::EMO;
  if (s == "<eve>") return StyleToken::EVE;
  if (s == "<other>") return StyleToken::OTHER;
  throw FormatError("unknown style token: " + s);
}

const std::array<std::string, kNumReserved>& reserved_tokens() {
  static const std::array<std::string, kNumReserved> toks = {
      "<pad>", "<unk>", "<bos>", "<eos>",  "<emo>",
      "<eve>", "<other>", "<MALE>", "<FEMALE>", "<NEUTRAL>"};
  return toks;
}

int style_token_id(StyleToken t) {
  switch (t) {
    case StyleToken::EMO: return kEmoId;
    case StyleToken::EVE: return kEveId;
    default: return kOtherId;
  }
}

Vocabulary::Vocabulary() {
  for (const auto& t : reserved_tokens()) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = static_cast<int>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

int Vocabulary::encode(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::decode(int id) const {
  if (id < 0 || id >= size())
    throw DataError("vocab id out of range: " + std::to_string(id));
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<int> Vocabulary::encode_all(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(encode(t));
  return ids;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : id_to_token_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\x1f", h);
  }
  return h;
}

std::string Vocabulary::to_json() const {
  json j;
  j["tokens"] = id_to_token_;
  return j.dump(2) + "\n";
}

Vocabulary Vocabulary::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  Vocabulary v;
  const auto& toks = j.at("tokens");
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const std::string t = toks[i].get<std::string>();
    if (i < kNumReserved) {
      if (t != reserved_tokens()[i])
        throw FormatError("vocabulary file breaks reserved token order at id " +
                          std::to_string(i));
    } else {
      v.add(t);
    }
  }
  return v;
}

void SplitConfig::validate() const {
  if (train_ratio < 0 || valid_ratio < 0 || test_ratio < 0)
    throw ConfigError("split ratios must be non-negative");
  const double sum = train_ratio + valid_ratio + test_ratio;
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1, got " + std::to_string(sum));
}

NameLexicon NameLexicon::load(const std::string& male_path,
                              const std::string& female_path,
                              const std::string& neutral_path) {
  auto load_set = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open name list: " + path);
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
        line.pop_back();
      if (!line.empty()) out.insert(line);
    }
    return out;
  };
  NameLexicon lex;
  lex.male = load_set(male_path);
  lex.female = load_set(female_path);
  lex.neutral = load_set(neutral_path);
  return lex;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

void validate_story(Story& story, std::size_t line_no) {
  for (auto& s : story.sentences) s = trim(s);
  if (story.sentences.size() < 2)
    throw FormatError("record '" + story.id + "' at line " +
                      std::to_string(line_no) + " has fewer than 2 sentences");
  for (const auto& s : story.sentences)
    if (s.empty())
      throw FormatError("record '" + story.id + "' at line " +
                        std::to_string(line_no) + " has an empty sentence");
}

std::vector<Story> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path);
  std::vector<Story> stories;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError("bad json at line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    Story story;
    if (!j.contains("id") || !j.contains("sentences"))
      throw FormatError("line " + std::to_string(line_no) +
                        ": record needs 'id' and 'sentences'");
    story.id = j["id"].get<std::string>();
    for (const auto& s : j["sentences"])
      story.sentences.push_back(s.get<std::string>());
    validate_story(story, line_no);
    stories.push_back(std::move(story));
  }
  return stories;
}

// RFC-4180-ish CSV row parser; handles quoted fields with embedded commas.
std::vector<std::string> parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

// CSV with a header row. Uses an id column named id/storyid (else the first
// column) and sentence columns named sentence*; if none, every non-id,
// non-title column is a sentence.
std::vector<Story> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = parse_csv_row(line);

  int id_col = 0;
  std::vector<int> sentence_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    if (name == "id" || name == "storyid") id_col = static_cast<int>(i);
    if (name.rfind("sentence", 0) == 0)
      sentence_cols.push_back(static_cast<int>(i));
  }
  if (sentence_cols.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::string name = header[i];
      std::transform(name.begin(), name.end(), name.begin(), ::tolower);
      if (static_cast<int>(i) != id_col && name != "storytitle" &&
          name != "title")
        sentence_cols.push_back(static_cast<int>(i));
    }
  }

  std::vector<Story> stories;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = parse_csv_row(line);
    Story story;
    story.id = id_col < static_cast<int>(fields.size())
                   ? fields[static_cast<std::size_t>(id_col)]
                   : "";
    for (int c : sentence_cols)
      if (c < static_cast<int>(fields.size()))
        story.sentences.push_back(fields[static_cast<std::size_t>(c)]);
    validate_story(story, line_no);
    stories.push_back(std::move(story));
  }
  return stories;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '\'';
}

// A placeholder is <letters> with at least one letter, e.g. <MALE>.
std::size_t placeholder_len(const std::string& s, std::size_t i) {
  if (s[i] != '<') return 0;
  std::size_t j = i + 1;
  while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
  if (j > i + 1 && j < s.size() && s[j] == '>') return j - i + 1;
  return 0;
}

}  // namespace

std::vector<Story> load_corpus(const std::string& path, CorpusFormat format) {
  return format == CorpusFormat::Jsonl ? load_jsonl(path) : load_csv(path);
}

Story delexicalize(const Story& story, const NameLexicon& names) {
  Story out;
  out.id = story.id;
  out.sentences.reserve(story.sentences.size());
  for (const auto& sentence : story.sentences) {
    std::string result;
    std::size_t i = 0;
    while (i < sentence.size()) {
      if (const std::size_t len = placeholder_len(sentence, i)) {
        result += sentence.substr(i, len);
        i += len;
        continue;
      }
      if (is_word_char(sentence[i])) {
        std::size_t j = i;
        while (j < sentence.size() && is_word_char(sentence[j])) ++j;
        const std::string word = sentence.substr(i, j - i);
        if (names.male.count(word))
          result += "<MALE>";
        else if (names.female.count(word))
          result += "<FEMALE>";
        else if (names.neutral.count(word))
          result += "<NEUTRAL>";
        else
          result += word;
        i = j;
      } else {
        result += sentence[i];
        ++i;
      }
    }
    out.sentences.push_back(std::move(result));
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& sentence) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < sentence.size()) {
    const char c = sentence[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (const std::size_t len = placeholder_len(sentence, i)) {
      tokens.push_back(sentence.substr(i, len));
      i += len;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i;
      while (j < sentence.size() && is_word_char(sentence[j])) ++j;
      std::string word = sentence.substr(i, j - i);
      std::transform(word.begin(), word.end(), word.begin(), ::tolower);
      tokens.push_back(std::move(word));
      i = j;
    } else {
      tokens.push_back(std::string(1, c));
      ++i;
    }
  }
  return tokens;
}

std::vector<std::string> tokenize_sentences(
    const std::vector<std::string>& sentences) {
  std::vector<std::string> tokens;
  for (const auto& s : sentences) {
    auto t = tokenize(s);
    tokens.insert(tokens.end(), t.begin(), t.end());
  }
  return tokens;
}

CorpusSplit split_corpus(const std::vector<Story>& stories,
                         const SplitConfig& cfg) {
  cfg.validate();
  const std::size_t n = stories.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(idx);

  const auto n_valid = static_cast<std::size_t>(
      std::floor(cfg.valid_ratio * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(
      std::floor(cfg.test_ratio * static_cast<double>(n)));
  const std::size_t n_train = n - n_valid - n_test;

  CorpusSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    const Story& s = stories[idx[i]];
    if (i < n_train)
      split.train.push_back(s);
    else if (i < n_train + n_valid)
      split.valid.push_back(s);
    else
      split.test.push_back(s);
  }
  return split;
}

Vocabulary build_vocab(const std::vector<Story>& train, int min_count) {
  if (min_count < 1) throw ConfigError("min_count must be >= 1");
  std::map<std::string, long long> counts;
  for (const auto& story : train)
    for (const auto& tok : tokenize_sentences(story.sentences)) ++counts[tok];

  std::vector<std::pair<std::string, long long>> items(counts.begin(),
                                                       counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (const auto& [tok, count] : items)
    if (count >= min_count) vocab.add(tok);
  return vocab;
}

}  // namespace storystyle
