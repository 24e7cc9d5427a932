#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "storystyle/keywords.hpp"

using namespace storystyle;

TEST_CASE("emotion_keywords selects the six labels only") {
  EmotionLexicon lex;
  lex.add("favorite", "joy");
  lex.add("calm", "trust");
  CHECK(emotion_keywords({"favorite"}, lex) ==
        std::vector<std::string>{"favorite"});
  CHECK(emotion_keywords({"table"}, lex).empty());
  CHECK(emotion_keywords({"calm"}, lex).empty());
  // multiplicity preserved
  CHECK(emotion_keywords({"favorite", "x", "favorite"}, lex).size() == 2);
}

TEST_CASE("emotion keyword property: every hit carries a selected label") {
  Rng rng(3);
  const std::vector<std::string> labels = {"joy",  "trust",        "fear",
                                           "anger", "anticipation", "sadness"};
  for (int trial = 0; trial < 50; ++trial) {
    EmotionLexicon lex;
    std::vector<std::string> tokens;
    for (int w = 0; w < 20; ++w) {
      const std::string word = "w" + std::to_string(rng.below(30));
      tokens.push_back(word);
      if (rng.uniform() < 0.5)
        lex.add(word, labels[static_cast<std::size_t>(rng.below(labels.size()))]);
    }
    for (const auto& kw : emotion_keywords(tokens, lex)) {
      bool ok = false;
      for (const auto& l : lex.labels(kw))
        if (selected_emotion_labels().count(l)) ok = true;
      CHECK(ok);
    }
  }
}

TEST_CASE("rule tagger uses lexicon then suffix rules") {
  RuleTagger tagger;
  tagger.add("he", "PRP");
  tagger.add("ran", "VBD");
  CHECK(tagger.tag({"he", "ran"}) == std::vector<PosTag>{"PRP", "VBD"});
  CHECK(tagger.tag({}).empty());
  CHECK(tagger.tag_word("zorped") == "VBD");   // -ed
  CHECK(tagger.tag_word("zorping") == "VBG");  // -ing
  CHECK(tagger.tag_word("quickly") == "RB");
  CHECK(tagger.tag_word("<MALE>") == "NNP");
  CHECK(tagger.tag_word(".") == ".");
  CHECK(tagger.tag_word("12") == "CD");
  CHECK(tagger.tag_word("zorp") == "NN");
  CHECK(tagger.tag_word("tables") == "NNS");
}

TEST_CASE("verb tag set is exactly the six Penn verb tags") {
  for (const char* t : {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"})
    CHECK(is_verb_tag(t));
  for (const char* t : {"NN", "JJ", "PRP", "RB", "MD", "."})
    CHECK(!is_verb_tag(t));
}

TEST_CASE("porter stemmer matches the published example pairs") {
  std::ifstream in(std::string(STORYSTYLE_TEST_DATA_DIR) +
                   "/porter_golden.tsv");
  REQUIRE(in.good());
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word, expected;
    REQUIRE(std::getline(ss, word, '\t'));
    REQUIRE(std::getline(ss, expected));
    CHECK_MESSAGE(porter_stem(word) == expected, "word: ", word);
    ++checked;
  }
  CHECK(checked >= 70);
}

TEST_CASE("porter stemmer spec examples") {
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("running") == "run");
  CHECK(porter_stem("cat") == "cat");
}

TEST_CASE("compute_idf uses document frequency over stemmed keyword sets") {
  const IdfTable table = compute_idf({{"run"}, {"run", "jump"}});
  CHECK(table.n_docs == 2);
  CHECK(table.at("run") == doctest::Approx(0.0));
  CHECK(table.at("jump") == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(table.at("absent"), DataError);
}

TEST_CASE("compute_idf single document gives all zeros") {
  const IdfTable table = compute_idf({{"walk", "talked"}});
  for (const auto& [stem, idf] : table.idf) CHECK(idf == doctest::Approx(0.0));
}

TEST_CASE("compute_idf rejects an empty corpus") {
  CHECK_THROWS_AS(compute_idf({}), DataError);
}

TEST_CASE("idf json round trip") {
  const IdfTable table = compute_idf({{"run"}, {"run", "jump"}});
  const IdfTable loaded = IdfTable::from_json(table.to_json());
  CHECK(loaded.n_docs == table.n_docs);
  CHECK(loaded.idf == table.idf);
}

TEST_CASE("bottom_k_idf sorts by idf then lexicographically") {
  IdfTable table;
  table.idf = {{"a", 0.0}, {"b", 0.5}, {"c", 1.0}};
  table.n_docs = 3;
  CHECK(bottom_k_idf(table, 2) == std::set<std::string>{"a", "b"});
  CHECK(bottom_k_idf(table, 0).empty());
  CHECK(bottom_k_idf(table, 10) == std::set<std::string>{"a", "b", "c"});

  IdfTable ties;
  ties.idf = {{"b", 0.0}, {"a", 0.0}};
  ties.n_docs = 1;
  CHECK(bottom_k_idf(ties, 1) == std::set<std::string>{"a"});
}

TEST_CASE("event_keywords filters stop words and banned stems") {
  const std::vector<std::string> tokens{"is", "have", "hooked", "ran"};
  const std::vector<PosTag> tags{"VBZ", "VBP", "VBD", "VBD"};
  const std::set<std::string> banned{porter_stem("is"), porter_stem("have")};

  // banned stems alone exclude the common verbs
  auto kws = event_keywords(tokens, tags, {}, banned);
  CHECK(kws == std::vector<std::string>{"hooked", "ran"});

  // the stop list alone excludes them as well
  kws = event_keywords(tokens, tags, {"is", "have"}, {});
  CHECK(kws == std::vector<std::string>{"hooked", "ran"});

  CHECK(event_keywords({"table"}, {"NN"}, {}, {}).empty());
  CHECK_THROWS_AS(event_keywords({"a"}, {"NN", "NN"}, {}, {}), DataError);
}

TEST_CASE("event keywords are a sub-multiset of verb-tagged tokens") {
  Rng rng(5);
  RuleTagger tagger;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tokens;
    for (int i = 0; i < 15; ++i) {
      std::string w = "w" + std::to_string(rng.below(20));
      if (rng.uniform() < 0.4) w += "ed";
      tokens.push_back(w);
    }
    const auto tags = tagger.tag(tokens);
    const auto kws = event_keywords(tokens, tags, {"w1ed"}, {});
    std::multiset<std::string> verbs;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (is_verb_tag(tags[i])) verbs.insert(tokens[i]);
    std::multiset<std::string> got(kws.begin(), kws.end());
    for (const auto& w : got) CHECK(verbs.count(w) >= got.count(w));
  }
}

TEST_CASE("extract_keywords composes on the continuation only") {
  EmotionLexicon lex;
  lex.add("favorite", "joy");
  RuleTagger tagger;
  tagger.add("was", "VBD");

  Story story{"s",
              {"The hooked one was here.",  // leading: must not count
               "My favorite thing.", "No verbs at all there."}};
  const auto kws = extract_keywords(story, lex, tagger, {"was"}, {});
  CHECK(kws.emotion == std::vector<std::string>{"favorite"});
  CHECK(kws.event.empty());

  Story empty_story{"e", {"Lead.", "Plain words only."}};
  const auto none = extract_keywords(empty_story, lex, tagger, {}, {});
  CHECK(none.emotion.empty());
  CHECK(none.event.empty());
}

TEST_CASE("event-driven story keywords trace through the rules") {
  EmotionLexicon lex;
  RuleTagger tagger;
  tagger.add("found", "VBD");
  tagger.add("tried", "VBD");
  Story story{"fig",
              {"Lead sentence.",
               "She was tearing up the box.",
               "She tried again and found the latch.",
               "It hooked on the first try."}};
  const std::set<std::string> stopwords{"was", "the", "she", "it", "on",
                                        "up",  "and", "again"};
  const auto kws = extract_keywords(story, lex, tagger, stopwords, {});
  const std::vector<std::string> expect{"tearing", "tried", "found", "hooked"};
  for (const auto& w : expect)
    CHECK(std::count(kws.event.begin(), kws.event.end(), w) == 1);
}

TEST_CASE("bundled data files load") {
  const std::string dir = STORYSTYLE_DATA_DIR;
  const auto stopwords = load_stopwords(dir + "/stopwords_english.txt");
  CHECK(stopwords.size() == 127);
  CHECK(stopwords.count("is"));
  CHECK(stopwords.count("have"));

  const auto lex = EmotionLexicon::load(dir + "/emotion_lexicon_small.tsv");
  CHECK(lex.has_selected_label("favorite"));
  CHECK(!lex.has_selected_label("calm"));  // trust is not selected
  CHECK(!lex.has_selected_label("table"));  // flag 0 line

  const auto tagger = RuleTagger::load(dir + "/tagger_lexicon.tsv");
  CHECK(tagger.tag({"he", "ran"}) == std::vector<PosTag>{"PRP", "VBD"});
}
