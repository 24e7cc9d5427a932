#include "storystyle/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

std::string StyleStats::to_json() const {
  json j;
  j["mu_emo"] = mu_emo;
  j["sigma_emo"] = sigma_emo;
  j["mu_eve"] = mu_eve;
  j["sigma_eve"] = sigma_eve;
  j["n_fit"] = n_fit;
  return j.dump(2) + "\n";
}

StyleStats StyleStats::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  StyleStats s;
  s.mu_emo = j.at("mu_emo").get<double>();
  s.sigma_emo = j.at("sigma_emo").get<double>();
  s.mu_eve = j.at("mu_eve").get<double>();
  s.sigma_eve = j.at("sigma_eve").get<double>();
  s.n_fit = j.at("n_fit").get<long long>();
  return s;
}

namespace {

std::pair<double, double> mean_stddev(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= n;  // population variance
  return {mean, std::max(std::sqrt(var), kSigmaFloor)};
}

}  // namespace

StyleStats fit_style_stats(const std::vector<KeywordSet>& train) {
  if (train.size() < 2)
    throw DataError("fit_style_stats: need at least 2 stories, got " +
                    std::to_string(train.size()));
  std::vector<double> emo_counts, eve_counts;
  emo_counts.reserve(train.size());
  eve_counts.reserve(train.size());
  for (const auto& kws : train) {
    emo_counts.push_back(static_cast<double>(kws.emotion.size()));
    eve_counts.push_back(static_cast<double>(kws.event.size()));
  }
  StyleStats stats;
  std::tie(stats.mu_emo, stats.sigma_emo) = mean_stddev(emo_counts);
  std::tie(stats.mu_eve, stats.sigma_eve) = mean_stddev(eve_counts);
  stats.n_fit = static_cast<long long>(train.size());
  return stats;
}

double normalize_count(double n, double mu, double sigma) {
  return normal_cdf((n - mu) / sigma);
}

StyleToken assign_label(double n_emo, double n_eve, double tau1, double tau2) {
  if ((n_emo < tau1 && n_eve < tau1) || std::abs(n_emo - n_eve) < tau2)
    return StyleToken::OTHER;
  return n_emo > n_eve ? StyleToken::EMO : StyleToken::EVE;
}

std::vector<std::string> select_other_keywords(const KeywordSet& kws) {
  // Unique words per style ordered by (count desc, first occurrence asc).
  auto ranked = [](const std::vector<std::string>& words) {
    std::map<std::string, std::pair<long long, std::size_t>> info;
    for (std::size_t i = 0; i < words.size(); ++i) {
      auto it = info.find(words[i]);
      if (it == info.end())
        info.emplace(words[i], std::make_pair(1LL, i));
      else
        ++it->second.first;
    }
    std::vector<std::string> order;
    order.reserve(info.size());
    for (const auto& [w, _] : info) order.push_back(w);
    std::sort(order.begin(), order.end(),
              [&](const std::string& a, const std::string& b) {
                const auto& ia = info.at(a);
                const auto& ib = info.at(b);
                if (ia.first != ib.first) return ia.first > ib.first;
                return ia.second < ib.second;
              });
    return order;
  };

  const auto emo = ranked(kws.emotion);
  const auto eve = ranked(kws.event);

  std::vector<std::string> selected;
  std::set<std::string> seen;
  std::size_t ie = 0, iv = 0;
  bool emo_turn = true;
  while (selected.size() < 5 && (ie < emo.size() || iv < eve.size())) {
    const std::vector<std::string>& src =
        (emo_turn && ie < emo.size()) || iv >= eve.size() ? emo : eve;
    std::size_t& idx = (&src == &emo) ? ie : iv;
    const std::string& w = src[idx++];
    if (seen.insert(w).second) selected.push_back(w);
    emo_turn = !(&src == &emo);
  }
  return selected;
}

AnnotatedStory annotate_story(const Story& story,
                              const AnnotationAssets& assets) {
  AnnotatedStory out;
  out.story = story;
  out.keywords = extract_keywords(story, assets.lexicon, assets.tagger,
                                  assets.stopwords, assets.banned_stems);
  out.n_prime_emo =
      normalize_count(static_cast<double>(out.keywords.emotion.size()),
                      assets.stats.mu_emo, assets.stats.sigma_emo);
  out.n_prime_eve =
      normalize_count(static_cast<double>(out.keywords.event.size()),
                      assets.stats.mu_eve, assets.stats.sigma_eve);
  out.label =
      assign_label(out.n_prime_emo, out.n_prime_eve, assets.tau1, assets.tau2);
  switch (out.label) {
    case StyleToken::EMO:
      out.planning_keywords = out.keywords.emotion;
      break;
    case StyleToken::EVE:
      out.planning_keywords = out.keywords.event;
      break;
    case StyleToken::OTHER:
      out.planning_keywords = select_other_keywords(out.keywords);
      break;
  }
  return out;
}

std::vector<AnnotatedStory> annotate_corpus(const std::vector<Story>& stories,
                                            const AnnotationAssets& assets) {
  std::vector<AnnotatedStory> out(stories.size());
  const int n = static_cast<int>(stories.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        annotate_story(stories[static_cast<std::size_t>(i)], assets);
  return out;
}

LabelDistribution label_distribution(
    const std::vector<AnnotatedStory>& stories) {
  LabelDistribution d;
  for (const auto& s : stories) {
    switch (s.label) {
      case StyleToken::EMO: ++d.n_emo; break;
      case StyleToken::EVE: ++d.n_eve; break;
      case StyleToken::OTHER: ++d.n_other; break;
    }
  }
  return d;
}

}  // namespace storystyle
