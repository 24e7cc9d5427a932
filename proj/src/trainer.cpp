#include "storystyle/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "json.hpp"

namespace storystyle {

using nlohmann::json;

void TrainConfig::validate() const {
  if (alpha < 0) throw ConfigError("train config: alpha must be >= 0");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (learning_rate <= 0)
    throw ConfigError("train config: learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
}

std::string TrainConfig::to_json() const {
  json j;
  j["alpha"] = alpha;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["seed"] = seed;
  j["optimizer"] = optimizer == Optimizer::AdamW ? "adamw" : "sgd";
  j["weight_decay"] = weight_decay;
  if (grad_clip) j["grad_clip"] = *grad_clip;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  TrainConfig c;
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("learning_rate"))
    c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("optimizer")) {
    const std::string name = j["optimizer"].get<std::string>();
    if (name == "adamw")
      c.optimizer = Optimizer::AdamW;
    else if (name == "sgd")
      c.optimizer = Optimizer::Sgd;
    else
      throw ConfigError("unknown optimizer: " + name);
  }
  if (j.contains("weight_decay"))
    c.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("grad_clip")) c.grad_clip = j["grad_clip"].get<double>();
  c.validate();
  return c;
}

TrainExample make_example(const AnnotatedStory& story, const Vocabulary& vocab,
                          const ModelConfig& cfg) {
  TrainExample ex;
  ex.style = story.label;
  auto leading = vocab.encode_all(tokenize(story.story.leading()));
  if (static_cast<int>(leading.size()) > cfg.max_len - 1)
    leading.resize(static_cast<std::size_t>(cfg.max_len - 1));
  ex.enc_ids = leading;

  auto continuation =
      vocab.encode_all(tokenize_sentences(story.story.continuation()));
  if (static_cast<int>(continuation.size()) > cfg.max_len - 2)
    continuation.resize(static_cast<std::size_t>(cfg.max_len - 2));
  ex.dec_input.push_back(kBosId);
  ex.dec_input.insert(ex.dec_input.end(), continuation.begin(),
                      continuation.end());
  ex.targets = continuation;
  ex.targets.push_back(kEosId);

  std::set<int> kw;
  for (const auto& word : story.planning_keywords) {
    const int id = vocab.encode(word);
    if (id != kUnkId) kw.insert(id);
  }
  ex.keyword_ids.assign(kw.begin(), kw.end());
  return ex;
}

OptimizerState::OptimizerState(std::vector<Tensor*> tensors,
                               const TrainConfig& cfg)
    : tensors_(std::move(tensors)), cfg_(cfg) {
  if (cfg_.optimizer == Optimizer::AdamW) {
    for (Tensor* t : tensors_) {
      m_.emplace_back(t->v.rows(), t->v.cols());
      v_.emplace_back(t->v.rows(), t->v.cols());
    }
  }
}

void OptimizerState::step() {
  const auto& tensors = tensors_;
  if (cfg_.grad_clip) {
    double sq = 0.0;
    for (Tensor* t : tensors)
      for (std::size_t i = 0; i < t->g.size(); ++i)
        sq += t->g.data()[i] * t->g.data()[i];
    const double norm = std::sqrt(sq);
    if (norm > *cfg_.grad_clip) {
      const double s = *cfg_.grad_clip / norm;
      for (Tensor* t : tensors)
        for (std::size_t i = 0; i < t->g.size(); ++i) t->g.data()[i] *= s;
    }
  }

  if (cfg_.optimizer == Optimizer::Sgd) {
    for (Tensor* t : tensors)
      for (std::size_t i = 0; i < t->v.size(); ++i)
        t->v.data()[i] -= cfg_.learning_rate *
                          (t->g.data()[i] + cfg_.weight_decay * t->v.data()[i]);
    return;
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    Tensor* t = tensors[k];
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < t->v.size(); ++i) {
      const double g = t->g.data()[i];
      m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * g;
      v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t->v.data()[i] -=
          cfg_.learning_rate * (mhat / (std::sqrt(vhat) + cfg_.adam_eps) +
                                cfg_.weight_decay * t->v.data()[i]);
    }
  }
}

std::string TrainReport::to_json() const {
  json j;
  json eps = json::array();
  for (const auto& e : epochs) {
    json je;
    je["epoch"] = e.epoch;
    je["mean_l_st"] = e.mean_l_st;
    je["mean_l_k"] = e.mean_l_k;
    je["mean_l"] = e.mean_l;
    eps.push_back(je);
  }
  j["epochs"] = eps;
  j["checkpoint_path"] = checkpoint_path;
  return j.dump(2) + "\n";
}

TrainResult train(const std::vector<AnnotatedStory>& corpus,
                  const Vocabulary& vocab, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
  train_cfg.validate();
  if (corpus.empty()) throw DataError("train: empty corpus");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<TrainExample> examples;
  examples.reserve(corpus.size());
  for (const auto& story : corpus)
    examples.push_back(make_example(story, vocab, model_cfg));

  ModelParameters params(model_cfg);
  Rng init_rng(train_cfg.seed);
  params.init(init_rng);
  OptimizerState opt(params.all(), train_cfg);
  Rng shuffle_rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  TrainReport report;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double sum_l_st = 0.0, sum_l_k = 0.0, sum_l = 0.0;
    long long n_kw = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t batch_end = std::min(
          order.size(), pos + static_cast<std::size_t>(train_cfg.batch_size));
      params.zero_grad();
      for (std::size_t b = pos; b < batch_end; ++b) {
        const TrainExample& ex = examples[order[b]];
        SequenceForward fwd =
            forward_sequence(params, ex.style, ex.enc_ids, ex.dec_input);
        const LossBreakdown loss =
            sequence_loss(fwd, ex.targets, ex.keyword_ids);
        const double l = loss.total(train_cfg.alpha);
        if (!std::isfinite(l))
          throw NumericError("non-finite loss at epoch " +
                             std::to_string(epoch));
        sum_l_st += loss.l_st;
        sum_l += l;
        if (loss.has_keyword_loss) {
          sum_l_k += loss.l_k;
          ++n_kw;
        }
        backward_sequence(params, fwd, ex.targets, ex.keyword_ids,
                          train_cfg.alpha);
      }
      // Mean gradient over the batch.
      const double inv =
          1.0 / static_cast<double>(batch_end - pos);
      for (Tensor* t : params.all())
        for (std::size_t i = 0; i < t->g.size(); ++i) t->g.data()[i] *= inv;
      opt.step();
      pos = batch_end;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_l_st = sum_l_st / static_cast<double>(examples.size());
    stats.mean_l_k = n_kw ? sum_l_k / static_cast<double>(n_kw) : 0.0;
    stats.mean_l = sum_l / static_cast<double>(examples.size());
    report.epochs.push_back(stats);
  }

  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return TrainResult{std::move(params), std::move(report)};
}

GradCheckResult grad_check(ModelParameters& params, const TrainExample& ex,
                           double alpha, double epsilon, int n_coords,
                           std::uint64_t seed) {
  if (epsilon < 1e-7 || epsilon > 1e-3)
    throw ConfigError("grad_check: epsilon out of [1e-7, 1e-3]");

  auto loss_at = [&]() {
    SequenceForward fwd =
        forward_sequence(params, ex.style, ex.enc_ids, ex.dec_input);
    return sequence_loss(fwd, ex.targets, ex.keyword_ids).total(alpha);
  };

  params.zero_grad();
  {
    SequenceForward fwd =
        forward_sequence(params, ex.style, ex.enc_ids, ex.dec_input);
    backward_sequence(params, fwd, ex.targets, ex.keyword_ids, alpha);
  }

  auto tensors = params.all();
  const int per_tensor = std::max(
      1, (n_coords + static_cast<int>(tensors.size()) - 1) /
             static_cast<int>(tensors.size()));
  Rng rng(seed);
  GradCheckResult result;
  for (Tensor* t : tensors) {
    const int picks =
        std::min(per_tensor, static_cast<int>(t->v.size()));
    for (int p = 0; p < picks; ++p) {
      const std::size_t i =
          static_cast<std::size_t>(rng.below(t->v.size()));
      const double saved = t->v.data()[i];
      t->v.data()[i] = saved + epsilon;
      const double lp = loss_at();
      t->v.data()[i] = saved - epsilon;
      const double lm = loss_at();
      t->v.data()[i] = saved;
      const double gn = (lp - lm) / (2.0 * epsilon);
      const double ga = t->g.data()[i];
      const double rel =
          std::abs(ga - gn) / std::max(std::abs(ga) + std::abs(gn), 1e-4);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.n_coords;
    }
  }
  return result;
}

}  // namespace storystyle
