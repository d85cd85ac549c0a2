#pragma once

#include <string>
#include <vector>

#include "sarc/embed.hpp"
#include "sarc/models.hpp"
#include "sarc/trainer.hpp"

namespace sarc {

// Whole-experiment configuration, loaded from a flat "section.key = value"
// file. Unknown keys are rejected; relative paths resolve against the config
// file's directory and must exist at load time.
struct ExperimentConfig {
  std::string labeled_path;
  std::vector<std::string> embed_corpus_paths;  // optional; labeled texts are used when empty
  std::vector<std::string> search_tags;
  int min_count = 10;
  int max_len = 64;
  uint64_t split_seed = 13;

  EmbedConfig embed;
  std::string embed_variant = "word2vec";  // word2vec | fasttext

  ModelSpec model;
  TrainConfig train;

  std::string output_dir = "out";
};

ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace sarc
