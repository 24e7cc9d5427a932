#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "storystyle/corpus.hpp"

using namespace storystyle;

namespace {

std::string temp_path(const std::string& name) {
  return std::string("/tmp/storystyle_test_") + name;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("load_corpus parses jsonl") {
  const std::string path = temp_path("corpus.jsonl");
  write_text(path,
             "{\"id\":\"s1\",\"sentences\":[\"A.\",\"B.\",\"C.\",\"D.\",\"E.\"]}\n");
  const auto stories = load_corpus(path, CorpusFormat::Jsonl);
  REQUIRE(stories.size() == 1);
  CHECK(stories[0].id == "s1");
  CHECK(stories[0].sentences.size() == 5);
  std::remove(path.c_str());
}

TEST_CASE("load_corpus on empty file yields empty list") {
  const std::string path = temp_path("empty.jsonl");
  write_text(path, "");
  CHECK(load_corpus(path, CorpusFormat::Jsonl).empty());
  std::remove(path.c_str());
}

TEST_CASE("load_corpus rejects records with fewer than 2 sentences") {
  const std::string path = temp_path("short.jsonl");
  write_text(path, "{\"id\":\"bad1\",\"sentences\":[\"only one.\"]}\n");
  CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::Jsonl),
                       doctest::Contains("bad1"), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("load_corpus reads csv with sentence columns") {
  const std::string path = temp_path("corpus.csv");
  write_text(path,
             "storyid,storytitle,sentence1,sentence2,sentence3\n"
             "c1,t,\"Hello, there.\",Second.,Third.\n");
  const auto stories = load_corpus(path, CorpusFormat::Csv);
  REQUIRE(stories.size() == 1);
  CHECK(stories[0].id == "c1");
  REQUIRE(stories[0].sentences.size() == 3);
  CHECK(stories[0].sentences[0] == "Hello, there.");
  std::remove(path.c_str());
}

TEST_CASE("missing corpus file raises IoError") {
  CHECK_THROWS_AS(load_corpus("/nonexistent/x.jsonl", CorpusFormat::Jsonl),
                  IoError);
}

TEST_CASE("delexicalize masks whole-token names") {
  NameLexicon names;
  names.male = {"John", "Bob"};
  names.female = {"Alice"};
  Story s{"x", {"John went home.", "Alice met Bob.", "Johnson stayed."}};
  const Story out = delexicalize(s, names);
  CHECK(out.sentences[0] == "<MALE> went home.");
  CHECK(out.sentences[1] == "<FEMALE> met <MALE>.");
  CHECK(out.sentences[2] == "Johnson stayed.");  // substring must not match
}

TEST_CASE("delexicalize with empty lexicon is identity") {
  NameLexicon names;
  Story s{"x", {"The dog ran.", "It barked."}};
  CHECK(delexicalize(s, names).sentences == s.sentences);
}

TEST_CASE("delexicalize is idempotent") {
  NameLexicon names;
  names.male = {"John"};
  names.neutral = {"Sam"};
  Story s{"x", {"John saw Sam.", "Sam waved at John."}};
  const Story once = delexicalize(s, names);
  const Story twice = delexicalize(once, names);
  CHECK(once.sentences == twice.sentences);
}

TEST_CASE("tokenize splits punctuation and lowercases") {
  CHECK(tokenize("He ran!") == std::vector<std::string>{"he", "ran", "!"});
  CHECK(tokenize("<MALE> smiled.") ==
        std::vector<std::string>{"<MALE>", "smiled", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("don't stop") ==
        std::vector<std::string>{"don't", "stop"});
}

TEST_CASE("tokenize never produces empty tokens and is deterministic") {
  Rng rng(11);
  const std::string charset = "ab <>.!?,X'";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng.below(30));
    for (int i = 0; i < len; ++i)
      s += charset[static_cast<std::size_t>(rng.below(charset.size()))];
    const auto t1 = tokenize(s);
    const auto t2 = tokenize(s);
    CHECK(t1 == t2);
    for (const auto& tok : t1) CHECK(!tok.empty());
  }
}

namespace {
std::vector<Story> make_stories(int n) {
  std::vector<Story> stories;
  for (int i = 0; i < n; ++i)
    stories.push_back(
        Story{"s" + std::to_string(i), {"lead one.", "tail two."}});
  return stories;
}
}  // namespace

TEST_CASE("split_corpus allocates 8:1:1 with remainder to train") {
  SplitConfig cfg;
  cfg.seed = 5;
  auto split = split_corpus(make_stories(100), cfg);
  CHECK(split.train.size() == 80);
  CHECK(split.valid.size() == 10);
  CHECK(split.test.size() == 10);

  split = split_corpus(make_stories(10), cfg);
  CHECK(split.train.size() == 8);
  CHECK(split.valid.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("split_corpus is deterministic and a partition") {
  SplitConfig cfg;
  cfg.seed = 9;
  const auto stories = make_stories(37);
  const auto a = split_corpus(stories, cfg);
  const auto b = split_corpus(stories, cfg);
  auto ids = [](const std::vector<Story>& v) {
    std::vector<std::string> out;
    for (const auto& s : v) out.push_back(s.id);
    return out;
  };
  CHECK(ids(a.train) == ids(b.train));
  CHECK(ids(a.valid) == ids(b.valid));
  CHECK(ids(a.test) == ids(b.test));

  std::set<std::string> seen;
  for (const auto* part : {&a.train, &a.valid, &a.test})
    for (const auto& s : *part) CHECK(seen.insert(s.id).second);
  CHECK(seen.size() == stories.size());
}

TEST_CASE("split_corpus validates ratios") {
  SplitConfig cfg;
  cfg.train_ratio = 0.5;
  cfg.valid_ratio = 0.2;
  cfg.test_ratio = 0.2;
  CHECK_THROWS_AS(split_corpus(make_stories(4), cfg), ConfigError);
}

TEST_CASE("build_vocab reserves the fixed low ids") {
  const Vocabulary vocab = build_vocab({}, 1);
  CHECK(vocab.size() == kNumReserved);
  CHECK(vocab.decode(kPadId) == "<pad>");
  CHECK(vocab.decode(kUnkId) == "<unk>");
  CHECK(vocab.decode(kBosId) == "<bos>");
  CHECK(vocab.decode(kEosId) == "<eos>");
  CHECK(vocab.decode(kEmoId) == "<emo>");
  CHECK(vocab.decode(kEveId) == "<eve>");
  CHECK(vocab.decode(kOtherId) == "<other>");
  CHECK(vocab.decode(kMaleId) == "<MALE>");
  CHECK(vocab.decode(kFemaleId) == "<FEMALE>");
  CHECK(vocab.decode(kNeutralId) == "<NEUTRAL>");
}

TEST_CASE("build_vocab honors min_count and maps rare tokens to <unk>") {
  std::vector<Story> stories{Story{"s0", {"a a b.", "a a b."}}};
  const Vocabulary vocab = build_vocab(stories, 2);
  CHECK(vocab.contains("a"));
  CHECK(!vocab.contains("b"));
  CHECK(vocab.encode("b") == kUnkId);
}

TEST_CASE("vocabulary round-trips every in-vocab token") {
  std::vector<Story> stories{
      Story{"s0", {"the quick brown fox.", "jumped over lazy dogs."}}};
  const Vocabulary vocab = build_vocab(stories, 1);
  for (int id = 0; id < vocab.size(); ++id)
    CHECK(vocab.encode(vocab.decode(id)) == id);
}

TEST_CASE("vocabulary json round-trip preserves ids and hash") {
  std::vector<Story> stories{Story{"s0", {"one two three.", "four five."}}};
  const Vocabulary vocab = build_vocab(stories, 1);
  const Vocabulary loaded = Vocabulary::from_json(vocab.to_json());
  CHECK(loaded.size() == vocab.size());
  CHECK(loaded.hash() == vocab.hash());
  for (int id = 0; id < vocab.size(); ++id)
    CHECK(loaded.decode(id) == vocab.decode(id));
}
