#include "storystyle/synth.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

const std::vector<std::string>& default_emo_vocab() {
  static const std::vector<std::string> words = {
      "happy",    "sad",     "angry",   "glad",       "afraid",  "nervous",
      "furious",  "gloomy",  "joyful",  "anxious",    "miserable", "cheerful",
      "fearful",  "upset",   "mad",     "jolly",      "grim",    "sorrowful",
      "merry",    "wrathful", "jubilant", "despondent", "uneasy", "gleeful"};
  return words;
}

const std::vector<std::string>& default_eve_vocab() {
  static const std::vector<std::string> words = {
      "jumped",  "grabbed", "kicked",  "tossed",  "climbed", "chased",
      "pushed",  "pulled",  "lifted",  "carried", "dropped", "smashed",
      "opened",  "closed",  "painted", "cooked",  "washed",  "folded",
      "stacked", "planted", "dug",     "swam",    "sprinted", "marched",
      "crawled", "hopped",  "rolled",  "spun",    "flipped", "tapped"};
  return words;
}

const std::vector<std::string>& default_neutral_vocab() {
  static const std::vector<std::string> words = {
      "table",  "chair",   "garden", "window", "street", "house",
      "river",  "mountain", "basket", "bottle", "paper",  "stone",
      "road",   "field",   "door",   "lamp",   "box",    "cup",
      "tree",   "cloud",   "market", "village", "bridge", "tower",
      "wall",   "floor",   "corner", "path",   "yard",   "bench"};
  return words;
}

void SynthConfig::fill_default_vocab() {
  if (emo_vocab.empty()) emo_vocab = default_emo_vocab();
  if (eve_vocab.empty()) eve_vocab = default_eve_vocab();
  if (neutral_vocab.empty()) neutral_vocab = default_neutral_vocab();
}

void SynthConfig::validate() const {
  if (n_stories < 0) throw ConfigError("synth: n_stories must be >= 0");
  if (frac_emo < 0 || frac_eve < 0 || frac_emo + frac_eve > 1.0)
    throw ConfigError("synth: style fractions must be >= 0 and sum <= 1");
  for (double d : {density_emo, density_eve, density_other})
    if (d < 0 || d > 1) throw ConfigError("synth: densities must be in [0,1]");
  if (sentence_len < 1 || n_continuation_sentences < 1)
    throw ConfigError("synth: sentence shape must be positive");
  if (emo_vocab.empty() || eve_vocab.empty() || neutral_vocab.empty())
    throw ConfigError("synth: vocab lists must be non-empty");
  std::set<std::string> seen;
  for (const auto* list : {&emo_vocab, &eve_vocab, &neutral_vocab})
    for (const auto& w : *list)
      if (!seen.insert(w).second)
        throw ConfigError("synth: vocab lists must be disjoint, duplicate '" +
                          w + "'");
}

std::string SynthConfig::to_json() const {
  json j;
  j["n_stories"] = n_stories;
  j["frac_emo"] = frac_emo;
  j["frac_eve"] = frac_eve;
  j["density_emo"] = density_emo;
  j["density_eve"] = density_eve;
  j["density_other"] = density_other;
  j["sentence_len"] = sentence_len;
  j["n_continuation_sentences"] = n_continuation_sentences;
  j["seed"] = seed;
  j["emo_vocab"] = emo_vocab;
  j["eve_vocab"] = eve_vocab;
  j["neutral_vocab"] = neutral_vocab;
  return j.dump(2) + "\n";
}

SynthConfig SynthConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  SynthConfig c;
  if (j.contains("n_stories")) c.n_stories = j["n_stories"].get<long long>();
  if (j.contains("frac_emo")) c.frac_emo = j["frac_emo"].get<double>();
  if (j.contains("frac_eve")) c.frac_eve = j["frac_eve"].get<double>();
  if (j.contains("density_emo")) c.density_emo = j["density_emo"].get<double>();
  if (j.contains("density_eve")) c.density_eve = j["density_eve"].get<double>();
  if (j.contains("density_other"))
    c.density_other = j["density_other"].get<double>();
  if (j.contains("sentence_len")) c.sentence_len = j["sentence_len"].get<int>();
  if (j.contains("n_continuation_sentences"))
    c.n_continuation_sentences = j["n_continuation_sentences"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("emo_vocab"))
    c.emo_vocab = j["emo_vocab"].get<std::vector<std::string>>();
  if (j.contains("eve_vocab"))
    c.eve_vocab = j["eve_vocab"].get<std::vector<std::string>>();
  if (j.contains("neutral_vocab"))
    c.neutral_vocab = j["neutral_vocab"].get<std::vector<std::string>>();
  return c;
}

namespace {

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

}  // namespace

std::vector<SynthStory> synth_corpus(const SynthConfig& config) {
  SynthConfig cfg = config;
  cfg.fill_default_vocab();
  cfg.validate();
  Rng rng(cfg.seed);
  // Names resolve to <NEUTRAL> under the bundled name lists.
  static const std::vector<std::string> names = {"Alex", "Sam", "Morgan"};

  std::vector<SynthStory> out;
  out.reserve(static_cast<std::size_t>(cfg.n_stories));
  for (long long i = 0; i < cfg.n_stories; ++i) {
    SynthStory item;
    const double style_draw = rng.uniform();
    if (style_draw < cfg.frac_emo)
      item.intended = StyleToken::EMO;
    else if (style_draw < cfg.frac_emo + cfg.frac_eve)
      item.intended = StyleToken::EVE;
    else
      item.intended = StyleToken::OTHER;

    item.story.id = "synth-" + std::to_string(i);

    std::string leading;
    if (rng.uniform() < 0.3)
      leading = pick(names, rng) + " stood by the " +
                pick(cfg.neutral_vocab, rng) + " .";
    else
      leading = "the " + pick(cfg.neutral_vocab, rng) + " was near the " +
                pick(cfg.neutral_vocab, rng) + " .";
    item.story.sentences.push_back(leading);

    for (int s = 0; s < cfg.n_continuation_sentences; ++s) {
      std::string sentence;
      for (int t = 0; t < cfg.sentence_len; ++t) {
        const double u = rng.uniform();
        const std::string* word = nullptr;
        switch (item.intended) {
          case StyleToken::EMO:
            word = u < cfg.density_emo ? &pick(cfg.emo_vocab, rng)
                                       : &pick(cfg.neutral_vocab, rng);
            break;
          case StyleToken::EVE:
            word = u < cfg.density_eve ? &pick(cfg.eve_vocab, rng)
                                       : &pick(cfg.neutral_vocab, rng);
            break;
          case StyleToken::OTHER:
            if (u < cfg.density_other / 2)
              word = &pick(cfg.emo_vocab, rng);
            else if (u < cfg.density_other)
              word = &pick(cfg.eve_vocab, rng);
            else
              word = &pick(cfg.neutral_vocab, rng);
            break;
        }
        if (!sentence.empty()) sentence += ' ';
        sentence += *word;
      }
      sentence += " .";
      item.story.sentences.push_back(sentence);
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace storystyle
