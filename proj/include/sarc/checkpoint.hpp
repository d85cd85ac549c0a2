#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sarc/corpus.hpp"
#include "sarc/models.hpp"

namespace sarc {

struct CheckpointMeta {
  int epoch = 0;
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
  uint64_t rng_state = 0;
};

// Binary container: magic, a JSON manifest (spec, vocabulary, tags, metrics,
// tensor table) and raw little-endian float32 payloads. Roundtrips bit-exactly.
void save_checkpoint(const std::string& path, const BuiltModel<float>& model, const Vocabulary& vocab,
                     const std::vector<std::string>& search_tags, const CheckpointMeta& meta);

struct LoadedCheckpoint {
  BuiltModel<float> model;
  Vocabulary vocab;
  std::vector<std::string> search_tags;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace sarc
