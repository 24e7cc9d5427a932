#include "storystyle/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "storystyle/layers.hpp"
#include "storystyle/trainer.hpp"

namespace storystyle {

using nlohmann::json;
using namespace layers;

void ClassifierConfig::validate() const {
  if (vocab_size <= 0 || d_model <= 0 || n_layers <= 0 || n_heads <= 0 ||
      d_ff <= 0 || max_len <= 0)
    throw ConfigError("classifier config: all dimensions must be positive");
  if (d_model % n_heads != 0)
    throw ConfigError("classifier config: d_model must be divisible by n_heads");
}

std::string ClassifierConfig::to_json() const {
  json j;
  j["vocab_size"] = vocab_size;
  j["d_model"] = d_model;
  j["n_layers"] = n_layers;
  j["n_heads"] = n_heads;
  j["d_ff"] = d_ff;
  j["max_len"] = max_len;
  return j.dump();
}

ClassifierConfig ClassifierConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  ClassifierConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.max_len = j.at("max_len").get<int>();
  return c;
}

ClassifierParameters::ClassifierParameters(const ClassifierConfig& config)
    : cfg(config) {
  cfg.validate();
  const int d = cfg.d_model;
  tok_emb.setup("tok_emb", cfg.vocab_size, d);
  pos.setup("pos", cfg.max_len, d);
  layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    auto& layer = layers[static_cast<std::size_t>(l)];
    const std::string p = "enc." + std::to_string(l);
    setup_layernorm(layer.ln1, p + ".ln1", d);
    setup_layernorm(layer.ln2, p + ".ln2", d);
    setup_attention(layer.attn, p + ".attn", d);
    setup_ff(layer.ff, p + ".ff", d, cfg.d_ff);
  }
  setup_layernorm(ln_f, "ln_f", d);
  setup_linear(head, "head", kNumStyleClasses, d);
}

void ClassifierParameters::init(Rng& rng) {
  init_normal(tok_emb.v, rng, 0.1);
  init_normal(pos.v, rng, 0.02);
  for (auto& l : layers) {
    init_layernorm(l.ln1);
    init_layernorm(l.ln2);
    init_attention(l.attn, rng);
    init_ff(l.ff, rng);
  }
  init_layernorm(ln_f);
  init_linear(head, rng);
}

std::vector<const Tensor*> ClassifierParameters::all() const {
  std::vector<const Tensor*> out;
  out.push_back(&tok_emb);
  out.push_back(&pos);
  for (const auto& l : layers) {
    collect(l.ln1, out);
    collect(l.attn, out);
    collect(l.ln2, out);
    collect(l.ff, out);
  }
  collect(ln_f, out);
  collect(head, out);
  return out;
}

std::vector<Tensor*> ClassifierParameters::all() {
  std::vector<Tensor*> out;
  for (const Tensor* t : static_cast<const ClassifierParameters*>(this)->all())
    out.push_back(const_cast<Tensor*>(t));
  return out;
}

void ClassifierParameters::zero_grad() {
  for (Tensor* t : all()) t->g.fill(0.0);
}

int style_class_index(StyleToken t) {
  switch (t) {
    case StyleToken::EMO: return 0;
    case StyleToken::EVE: return 1;
    default: return 2;
  }
}

StyleToken style_from_class_index(int idx) {
  switch (idx) {
    case 0: return StyleToken::EMO;
    case 1: return StyleToken::EVE;
    case 2: return StyleToken::OTHER;
    default: throw DataError("bad class index");
  }
}

namespace {

struct ClsForward {
  std::vector<int> ids;
  std::vector<EncLayerCache> layers;
  LayerNormCache ln_f;
  Matrix h;       // T x d
  Matrix pooled;  // 1 x d
  std::array<double, kNumStyleClasses> probs{};
};

ClsForward cls_forward(const ClassifierParameters& params,
                       const std::vector<int>& token_ids) {
  if (token_ids.empty())
    throw DataError("classifier input must be non-empty");
  ClsForward fwd;
  fwd.ids = token_ids;
  if (static_cast<int>(fwd.ids.size()) > params.cfg.max_len)
    fwd.ids.resize(static_cast<std::size_t>(params.cfg.max_len));

  Matrix x = embed_rows(params.tok_emb, params.pos, fwd.ids,
                        params.cfg.vocab_size, params.cfg.max_len);
  fwd.layers.resize(params.layers.size());
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const EncLayerP& lp = params.layers[l];
    EncLayerCache& lc = fwd.layers[l];
    Matrix n1 = layernorm_fwd(x, lp.ln1, lc.ln1);
    Matrix a = attention_fwd(n1, n1, lp.attn, params.cfg.n_heads, false, lc.attn);
    add_into(x, a);
    Matrix n2 = layernorm_fwd(x, lp.ln2, lc.ln2);
    Matrix f = ff_fwd(n2, lp.ff, lc.ff);
    add_into(x, f);
  }
  fwd.h = layernorm_fwd(x, params.ln_f, fwd.ln_f);

  const int t_len = fwd.h.rows();
  const int d = fwd.h.cols();
  fwd.pooled.resize(1, d);
  for (int j = 0; j < d; ++j) {
    double acc = 0.0;
    for (int i = 0; i < t_len; ++i) acc += fwd.h(i, j);
    fwd.pooled(0, j) = acc / static_cast<double>(t_len);
  }
  Matrix logits = linear_fwd(fwd.pooled, params.head);
  softmax_inplace(logits.row(0), kNumStyleClasses);
  for (int c = 0; c < kNumStyleClasses; ++c) fwd.probs[static_cast<std::size_t>(c)] = logits(0, c);
  return fwd;
}

void cls_backward(ClassifierParameters& params, const ClsForward& fwd,
                  int gold_class) {
  // Cross-entropy through softmax: dlogits = probs - onehot.
  Matrix dlogits(1, kNumStyleClasses);
  for (int c = 0; c < kNumStyleClasses; ++c)
    dlogits(0, c) = fwd.probs[static_cast<std::size_t>(c)] -
                    (c == gold_class ? 1.0 : 0.0);
  Matrix dpooled(1, fwd.pooled.cols());
  linear_bwd(dlogits, fwd.pooled, params.head, dpooled);

  const int t_len = fwd.h.rows();
  const int d = fwd.h.cols();
  Matrix dh(t_len, d);
  const double inv = 1.0 / static_cast<double>(t_len);
  for (int i = 0; i < t_len; ++i)
    for (int j = 0; j < d; ++j) dh(i, j) = dpooled(0, j) * inv;

  Matrix dx(t_len, d);
  layernorm_bwd(dh, params.ln_f, fwd.ln_f, dx);
  for (int l = static_cast<int>(params.layers.size()) - 1; l >= 0; --l) {
    EncLayerP& lp = params.layers[static_cast<std::size_t>(l)];
    const EncLayerCache& lc = fwd.layers[static_cast<std::size_t>(l)];
    Matrix dn2(t_len, d);
    ff_bwd(dx, lp.ff, lc.ff, dn2);
    layernorm_bwd(dn2, lp.ln2, lc.ln2, dx);
    Matrix dn1(t_len, d);
    attention_bwd(dx, lp.attn, lc.attn, params.cfg.n_heads, dn1, dn1);
    layernorm_bwd(dn1, lp.ln1, lc.ln1, dx);
  }
  embed_bwd(params.tok_emb, params.pos, fwd.ids, dx);
}

std::vector<int> continuation_ids(const AnnotatedStory& story,
                                  const Vocabulary& vocab) {
  return vocab.encode_all(tokenize_sentences(story.story.continuation()));
}

}  // namespace

std::array<double, kNumStyleClasses> classify(
    const ClassifierParameters& params, const std::vector<int>& token_ids) {
  return cls_forward(params, token_ids).probs;
}

std::string ClassifierEvalReport::to_json() const {
  json j;
  j["accuracy"] = accuracy;
  j["majority_baseline"] = majority_baseline;
  j["f1_emotion"] = f1[0];
  j["f1_event"] = f1[1];
  j["f1_other"] = f1[2];
  j["n_eval"] = n_eval;
  return j.dump(2) + "\n";
}

ClassifierTrainResult train_ssc_classifier(
    const std::vector<AnnotatedStory>& corpus, const Vocabulary& vocab,
    const ClassifierConfig& cfg, const ClassifierTrainConfig& train_cfg) {
  if (corpus.size() < 4)
    throw ConfigError("classifier training needs at least 4 stories");

  struct Item {
    std::vector<int> ids;
    int label;
  };
  std::vector<Item> items;
  items.reserve(corpus.size());
  for (const auto& story : corpus) {
    Item it;
    it.ids = continuation_ids(story, vocab);
    if (it.ids.empty()) continue;
    it.label = style_class_index(story.label);
    items.push_back(std::move(it));
  }

  const std::size_t n_hold = std::max<std::size_t>(
      1, static_cast<std::size_t>(train_cfg.holdout_fraction *
                                  static_cast<double>(items.size())));
  const std::size_t n_train = items.size() - n_hold;

  ClassifierParameters params(cfg);
  Rng rng(train_cfg.seed);
  params.init(rng);

  TrainConfig opt_cfg;
  opt_cfg.learning_rate = train_cfg.learning_rate;
  opt_cfg.weight_decay = train_cfg.weight_decay;
  opt_cfg.optimizer = Optimizer::AdamW;
  OptimizerState opt(params.all(), opt_cfg);

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
  Rng shuffle_rng(train_cfg.seed ^ 0x5851f42d4c957f2dULL);

  for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t end = std::min(
          order.size(), pos + static_cast<std::size_t>(train_cfg.batch_size));
      params.zero_grad();
      for (std::size_t b = pos; b < end; ++b) {
        const Item& it = items[order[b]];
        ClsForward fwd = cls_forward(params, it.ids);
        cls_backward(params, fwd, it.label);
      }
      const double inv = 1.0 / static_cast<double>(end - pos);
      for (Tensor* t : params.all())
        for (std::size_t i = 0; i < t->g.size(); ++i) t->g.data()[i] *= inv;
      opt.step();
      pos = end;
    }
  }

  // Held-out evaluation: accuracy, per-class F1, majority baseline.
  ClassifierEvalReport report;
  report.n_eval = static_cast<long long>(n_hold);
  std::array<long long, kNumStyleClasses> tp{}, fp{}, fn{}, gold_count{};
  long long correct = 0;
  for (std::size_t i = n_train; i < items.size(); ++i) {
    const Item& it = items[i];
    const auto probs = classify(params, it.ids);
    const int pred = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    ++gold_count[static_cast<std::size_t>(it.label)];
    if (pred == it.label) {
      ++correct;
      ++tp[static_cast<std::size_t>(pred)];
    } else {
      ++fp[static_cast<std::size_t>(pred)];
      ++fn[static_cast<std::size_t>(it.label)];
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(n_hold);
  const long long majority =
      *std::max_element(gold_count.begin(), gold_count.end());
  report.majority_baseline =
      static_cast<double>(majority) / static_cast<double>(n_hold);
  for (int c = 0; c < kNumStyleClasses; ++c) {
    const double precision_den = static_cast<double>(tp[static_cast<std::size_t>(c)] + fp[static_cast<std::size_t>(c)]);
    const double recall_den = static_cast<double>(tp[static_cast<std::size_t>(c)] + fn[static_cast<std::size_t>(c)]);
    const double p = precision_den > 0 ? tp[static_cast<std::size_t>(c)] / precision_den : 0.0;
    const double r = recall_den > 0 ? tp[static_cast<std::size_t>(c)] / recall_den : 0.0;
    report.f1[static_cast<std::size_t>(c)] = (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
  }
  return ClassifierTrainResult{std::move(params), report};
}

double ssc(const ClassifierParameters& params, const Vocabulary& vocab,
           const std::vector<std::vector<std::string>>& generated,
           StyleToken target) {
  if (generated.empty()) throw DataError("ssc: empty generation set");
  const int target_class = style_class_index(target);
  double sum = 0.0;
  long long n = 0;
  for (const auto& tokens : generated) {
    if (tokens.empty()) continue;
    const auto probs = classify(params, vocab.encode_all(tokens));
    sum += probs[static_cast<std::size_t>(target_class)];
    ++n;
  }
  if (n == 0) throw DataError("ssc: all generations empty");
  return sum / static_cast<double>(n);
}

void save_classifier(const std::string& path,
                     const ClassifierParameters& params,
                     std::uint64_t vocab_hash) {
  json header;
  header["version"] = 1;
  header["config"] = json::parse(params.cfg.to_json());
  header["vocab_hash"] = to_hex(vocab_hash);
  json tensors = json::array();
  for (const Tensor* t : params.all()) {
    json jt;
    jt["name"] = t->name;
    jt["rows"] = t->v.rows();
    jt["cols"] = t->v.cols();
    tensors.push_back(jt);
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write classifier checkpoint: " + path);
  const char magic[8] = {'S', 'S', 'G', 'C', 'L', 'S', 'F', '\x01'};
  out.write(magic, 8);
  const std::uint64_t hlen = header_text.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(header_text.data(), static_cast<std::streamsize>(hlen));
  for (const Tensor* t : params.all())
    out.write(reinterpret_cast<const char*>(t->v.data()),
              static_cast<std::streamsize>(t->v.size() * sizeof(double)));
  if (!out) throw IoError("classifier checkpoint write failed: " + path);
}

ClassifierCheckpoint load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open classifier checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  const char expect[8] = {'S', 'S', 'G', 'C', 'L', 'S', 'F', '\x01'};
  if (!in || std::memcmp(magic, expect, 8) != 0)
    throw FormatError("not a classifier checkpoint: " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string header_text(hlen, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw FormatError("truncated classifier header: " + path);
  json header = json::parse(header_text);
  ClassifierConfig cfg =
      ClassifierConfig::from_json(header.at("config").dump());
  ClassifierCheckpoint ckpt{ClassifierParameters(cfg), 0};
  ckpt.vocab_hash =
      std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
  auto regs = ckpt.params.all();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != regs.size())
    throw FormatError("classifier tensor count mismatch");
  for (std::size_t i = 0; i < regs.size(); ++i)
    in.read(reinterpret_cast<char*>(regs[i]->v.data()),
            static_cast<std::streamsize>(regs[i]->v.size() * sizeof(double)));
  if (!in) throw FormatError("truncated classifier data: " + path);
  return ckpt;
}

}  // namespace storystyle
