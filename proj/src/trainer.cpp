#include "sarc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sarc/checkpoint.hpp"
#include "sarc/nn/adam.hpp"
#include "sarc/rng.hpp"

namespace sarc {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (lr <= 0) throw std::invalid_argument("train config: lr must be positive");
}

std::vector<LabeledSequence> encode_records(const std::vector<TweetRecord>& records, const Vocabulary& vocab, int max_len) {
  std::vector<LabeledSequence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({encode(tokenize(r.text), vocab, max_len), r.label});
  return out;
}

namespace {

struct BatchMetrics {
  double loss_sum = 0;
  int64_t correct = 0;
  int64_t count = 0;
};

void accumulate(BatchMetrics& m, const nn::Tensor<float>& probs, const std::vector<int>& labels, double batch_loss) {
  m.loss_sum += batch_loss * static_cast<double>(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const int pred = probs.data()[i] >= 0.5f ? 1 : 0;
    if (pred == labels[i]) ++m.correct;
  }
  m.count += static_cast<int64_t>(labels.size());
}

std::string parameter_norms(const BuiltModel<float>& model) {
  std::ostringstream os;
  for (const auto& [name, t] : model.named_parameters()) {
    double sq = 0;
    for (float v : t.data()) sq += static_cast<double>(v) * v;
    os << ' ' << name << "=" << std::sqrt(sq);
  }
  return os.str();
}

}  // namespace

TrainResult train(BuiltModel<float>& model, const std::vector<LabeledSequence>& train_set,
                  const std::vector<LabeledSequence>& validation_set, const TrainConfig& config,
                  const Vocabulary& vocab, const std::vector<std::string>& search_tags) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");

  auto params = model.trainable_parameters();
  nn::AdamConfig<float> adam_cfg;
  adam_cfg.lr = static_cast<float>(config.lr);
  nn::AdamState<float> adam(params, adam_cfg);

  Rng rng(config.seed);
  const bool write_files = !config.checkpoint_dir.empty();
  if (write_files) std::filesystem::create_directories(config.checkpoint_dir);

  TrainResult result;
  std::vector<size_t> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) shuffle(order, rng);

    BatchMetrics train_m;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      std::vector<EncodedSequence> batch;
      std::vector<int> labels;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        batch.push_back(train_set[order[i]].seq);
        labels.push_back(train_set[order[i]].label);
      }

      model.zero_grads();
      nn::Tensor<float> probs = model.forward(batch, /*training=*/true, rng);
      nn::Tensor<float> loss = nn::bce_mean(probs, labels);
      const double loss_value = static_cast<double>(loss.item());
      if (!std::isfinite(loss_value))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(start / static_cast<size_t>(config.batch_size) + 1) +
                                 "; parameter norms:" + parameter_norms(model));
      loss.backward();
      adam.step(params);
      ++result.optimizer_steps;
      accumulate(train_m, probs, labels, loss_value);
    }

    EvalResult val = validation_set.empty() ? EvalResult{} : evaluate(model, validation_set, config.batch_size);

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = train_m.count ? train_m.loss_sum / static_cast<double>(train_m.count) : 0.0;
    em.train_acc = train_m.count ? static_cast<double>(train_m.correct) / static_cast<double>(train_m.count) : 0.0;
    em.val_loss = val.loss;
    em.val_acc = val.accuracy;
    result.history.epochs.push_back(em);

    if (write_files) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d.ckpt", epoch);
      const std::string path = (std::filesystem::path(config.checkpoint_dir) / name).string();
      CheckpointMeta meta;
      meta.epoch = epoch;
      meta.train_loss = em.train_loss;
      meta.train_acc = em.train_acc;
      meta.val_loss = em.val_loss;
      meta.val_acc = em.val_acc;
      meta.rng_state = rng.state();
      save_checkpoint(path, model, vocab, search_tags, meta);
      result.checkpoint_files.push_back(path);
    }

    if (config.stop_at_train_accuracy > 0 && em.train_acc >= config.stop_at_train_accuracy) break;
  }

  const size_t best = best_epoch_index(result.history);
  result.best_epoch = result.history.epochs.empty() ? 0 : result.history.epochs[best].epoch;
  if (write_files && !result.checkpoint_files.empty()) {
    result.best_checkpoint = result.checkpoint_files[best];
    if (config.keep_best) {
      for (size_t i = 0; i < result.checkpoint_files.size(); ++i)
        if (i != best) std::filesystem::remove(result.checkpoint_files[i]);
      result.checkpoint_files = {result.best_checkpoint};
    }
    write_history_jsonl((std::filesystem::path(config.checkpoint_dir) / "history.jsonl").string(), result.history);
  }
  return result;
}

size_t best_epoch_index(const History& history) {
  size_t best = 0;
  for (size_t i = 1; i < history.epochs.size(); ++i)
    if (history.epochs[i].val_acc > history.epochs[best].val_acc) best = i;
  return best;
}

EvalResult evaluate(const BuiltModel<float>& model, const std::vector<LabeledSequence>& test_set, int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  EvalResult r;
  if (test_set.empty()) return r;

  Rng unused(0);  // inference mode never draws from it
  double loss_sum = 0;
  for (size_t start = 0; start < test_set.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(test_set.size(), start + static_cast<size_t>(batch_size));
    std::vector<EncodedSequence> batch;
    std::vector<int> labels;
    for (size_t i = start; i < end; ++i) {
      batch.push_back(test_set[i].seq);
      labels.push_back(test_set[i].label);
    }
    nn::Tensor<float> probs = model.forward(batch, /*training=*/false, unused);
    loss_sum += static_cast<double>(nn::bce_mean(probs, labels).item()) * static_cast<double>(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      const int pred = probs.data()[i] >= 0.5f ? 1 : 0;
      if (pred == 1 && labels[i] == 1) ++r.true_positive;
      if (pred == 1 && labels[i] == 0) ++r.false_positive;
      if (pred == 0 && labels[i] == 0) ++r.true_negative;
      if (pred == 0 && labels[i] == 1) ++r.false_negative;
    }
  }
  r.total = static_cast<int64_t>(test_set.size());
  r.loss = loss_sum / static_cast<double>(r.total);
  r.accuracy = static_cast<double>(r.true_positive + r.true_negative) / static_cast<double>(r.total);
  return r;
}

double predict(const BuiltModel<float>& model, const std::string& raw_text, const Vocabulary& vocab, int max_len,
               const std::unordered_set<std::string>& search_tags) {
  const EncodedSequence seq = encode(tokenize(clean_tweet(raw_text, search_tags)), vocab, max_len);
  Rng unused(0);
  nn::Tensor<float> probs = model.forward({seq}, /*training=*/false, unused);
  return static_cast<double>(probs.data()[0]);
}

void write_history_jsonl(const std::string& path, const History& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_history_jsonl: cannot open " + path);
  char line[256];
  for (const auto& e : history.epochs) {
    std::snprintf(line, sizeof line,
                  R"({"epoch":%d,"train_loss":%.8f,"train_acc":%.6f,"val_loss":%.8f,"val_acc":%.6f})", e.epoch,
                  e.train_loss, e.train_acc, e.val_loss, e.val_acc);
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("write_history_jsonl: write failed for " + path);
}

}  // namespace sarc
