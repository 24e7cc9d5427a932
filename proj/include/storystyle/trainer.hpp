#ifndef STORYSTYLE_TRAINER_HPP
#define STORYSTYLE_TRAINER_HPP

#include <optional>
#include <string>
#include <vector>

#include "storystyle/annotator.hpp"
#include "storystyle/model.hpp"

namespace storystyle {

enum class Optimizer { AdamW, Sgd };

struct TrainConfig {
  double alpha = 0.2;
  double learning_rate = 1e-3;  // desk-scale default for from-scratch weights
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::AdamW;
  double weight_decay = 0.01;
  std::optional<double> grad_clip;  // global L2 norm, off by default
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& json_text);
};

/// One encoded training example. Continuations longer than max_len-2 tokens
/// are truncated so that [<bos>; y] fits the decoder positions.
struct TrainExample {
  StyleToken style = StyleToken::OTHER;
  std::vector<int> enc_ids;      // leading tokens (style id prepended later)
  std::vector<int> dec_input;    // [<bos>; y_1..y_{M}]
  std::vector<int> targets;      // [y_1..y_M; <eos>]
  std::vector<int> keyword_ids;  // unique planning keywords, <unk> dropped
};

TrainExample make_example(const AnnotatedStory& story, const Vocabulary& vocab,
                          const ModelConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double mean_l_st = 0.0;
  double mean_l_k = 0.0;  // over examples with a keyword term
  double mean_l = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double wall_clock_sec = 0.0;  // not serialized; reports must rerun stable
  std::string checkpoint_path;

  std::string to_json() const;  // omits wall_clock_sec
};

struct TrainResult {
  ModelParameters params;
  TrainReport report;
};

/// Teacher-forced training with the combined loss. Deterministic given the
/// seed: example order, shuffling and all kernels are thread-count invariant.
TrainResult train(const std::vector<AnnotatedStory>& corpus,
                  const Vocabulary& vocab, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int n_coords = 0;
};

/// Central-difference check of the analytic gradients on >= n_coords
/// coordinates spread over every parameter tensor. Relative error per
/// coordinate is |ga - gn| / max(|ga| + |gn|, 1e-4).
GradCheckResult grad_check(ModelParameters& params, const TrainExample& ex,
                           double alpha, double epsilon, int n_coords,
                           std::uint64_t seed);

/// AdamW with decoupled weight decay; SGD shares the interface. Holds raw
/// tensor pointers, so the owning parameter object must stay in place.
class OptimizerState {
 public:
  OptimizerState(std::vector<Tensor*> tensors, const TrainConfig& cfg);
  void step();

 private:
  std::vector<Tensor*> tensors_;
  TrainConfig cfg_;
  long long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace storystyle

#endif
