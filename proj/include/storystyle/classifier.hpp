#ifndef STORYSTYLE_CLASSIFIER_HPP
#define STORYSTYLE_CLASSIFIER_HPP

#include <array>
#include <string>
#include <vector>

#include "storystyle/annotator.hpp"
#include "storystyle/model.hpp"

namespace storystyle {

/// Small from-scratch replacement for a fine-tuned pre-trained classifier:
/// transformer encoder, mean pooling, 3-way softmax over
/// emotion-driven / event-driven / other.
struct ClassifierConfig {
  int vocab_size = 0;
  int d_model = 32;
  int n_layers = 1;
  int n_heads = 2;
  int d_ff = 64;
  int max_len = 120;

  void validate() const;
  std::string to_json() const;
  static ClassifierConfig from_json(const std::string& json_text);
};

struct ClassifierParameters {
  ClassifierConfig cfg;
  Tensor tok_emb;
  Tensor pos;
  std::vector<EncLayerP> layers;
  LayerNormP ln_f;
  LinearP head;  // 3 x d

  explicit ClassifierParameters(const ClassifierConfig& config);
  void init(Rng& rng);
  void zero_grad();
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;
};

inline constexpr int kNumStyleClasses = 3;

/// Class index inside the softmax head.
int style_class_index(StyleToken t);
StyleToken style_from_class_index(int idx);

/// Probabilities over the three classes for the continuation tokens.
std::array<double, kNumStyleClasses> classify(
    const ClassifierParameters& params, const std::vector<int>& token_ids);

struct ClassifierTrainConfig {
  double learning_rate = 3e-3;
  int batch_size = 16;
  int epochs = 10;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  double holdout_fraction = 0.1;  // tail of the corpus, for reporting
};

struct ClassifierEvalReport {
  double accuracy = 0.0;
  double majority_baseline = 0.0;
  std::array<double, kNumStyleClasses> f1{};  // emo, eve, other
  long long n_eval = 0;

  std::string to_json() const;
};

struct ClassifierTrainResult {
  ClassifierParameters params;
  ClassifierEvalReport report;
};

/// Trains on annotated stories (continuation tokens, automatic labels as the
/// gold truth) and reports held-out accuracy and per-class F1.
ClassifierTrainResult train_ssc_classifier(
    const std::vector<AnnotatedStory>& corpus, const Vocabulary& vocab,
    const ClassifierConfig& cfg, const ClassifierTrainConfig& train_cfg);

/// Mean probability assigned to the target style over generated stories.
double ssc(const ClassifierParameters& params, const Vocabulary& vocab,
           const std::vector<std::vector<std::string>>& generated,
           StyleToken target);

void save_classifier(const std::string& path,
                     const ClassifierParameters& params,
                     std::uint64_t vocab_hash);

struct ClassifierCheckpoint {
  ClassifierParameters params;
  std::uint64_t vocab_hash;
};

ClassifierCheckpoint load_classifier(const std::string& path);

}  // namespace storystyle

#endif
