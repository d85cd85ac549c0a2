#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "sarc/corpus.hpp"
#include "sarc/models.hpp"

namespace sarc {

struct LabeledSequence {
  EncodedSequence seq;
  int label = 0;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 64;
  uint64_t seed = 1;
  double lr = 0.001;
  bool shuffle = true;                   // reshuffle the training set every epoch
  std::string checkpoint_dir;            // empty disables checkpoint files
  bool keep_best = false;                // prune all but the best checkpoint at the end
  double stop_at_train_accuracy = -1.0;  // early-stop hook for overfitting runs; negative disables

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

struct History {
  std::vector<EpochMetrics> epochs;
};

// index into history.epochs of the best checkpoint: highest validation
// accuracy, earliest epoch on ties
size_t best_epoch_index(const History& history);

struct TrainResult {
  History history;
  int best_epoch = 0;  // highest validation accuracy, earliest on ties
  std::vector<std::string> checkpoint_files;
  std::string best_checkpoint;
  int64_t optimizer_steps = 0;
};

struct EvalResult {
  double accuracy = 0, loss = 0;
  int64_t true_positive = 0, false_positive = 0, true_negative = 0, false_negative = 0;
  int64_t total = 0;
};

std::vector<LabeledSequence> encode_records(const std::vector<TweetRecord>& records, const Vocabulary& vocab, int max_len);

// Minibatch Adam/BCE training with a deterministic per-epoch reshuffle, one
// checkpoint per epoch, and validation metrics computed in inference mode.
// Aborts with diagnostics if the loss ever goes non-finite.
TrainResult train(BuiltModel<float>& model, const std::vector<LabeledSequence>& train_set,
                  const std::vector<LabeledSequence>& validation_set, const TrainConfig& config,
                  const Vocabulary& vocab, const std::vector<std::string>& search_tags);

// decision threshold 0.5; p >= 0.5 maps to class 1
EvalResult evaluate(const BuiltModel<float>& model, const std::vector<LabeledSequence>& test_set, int batch_size = 64);

// clean -> tokenize -> encode -> forward for one raw tweet
double predict(const BuiltModel<float>& model, const std::string& raw_text, const Vocabulary& vocab, int max_len,
               const std::unordered_set<std::string>& search_tags = {});

void write_history_jsonl(const std::string& path, const History& history);

}  // namespace sarc
