#include "sarc/config.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

namespace sarc {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    const std::string item = trim(s.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

int64_t to_int64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key '" + key + "' needs a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config: key '" + key + "' needs true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_commas(v)) out.push_back(to_int(key, item));
  return out;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  ExperimentConfig cfg;
  auto resolve = [&base](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  // one handler per documented key
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> handlers = {
      {"corpus.labeled", [&](const std::string&, const std::string& v) { cfg.labeled_path = resolve(v); }},
      {"corpus.embedding",
       [&](const std::string&, const std::string& v) {
         for (const auto& p : split_commas(v)) cfg.embed_corpus_paths.push_back(resolve(p));
       }},
      {"corpus.tags", [&](const std::string&, const std::string& v) { cfg.search_tags = split_commas(v); }},
      {"corpus.min_count", [&](const std::string& k, const std::string& v) { cfg.min_count = to_int(k, v); }},
      {"corpus.max_len",
       [&](const std::string& k, const std::string& v) {
         cfg.max_len = to_int(k, v);
         cfg.model.max_len = cfg.max_len;
       }},
      {"split.seed", [&](const std::string& k, const std::string& v) { cfg.split_seed = static_cast<uint64_t>(to_int64(k, v)); }},

      {"embed.dim",
       [&](const std::string& k, const std::string& v) {
         cfg.embed.dim = to_int(k, v);
         cfg.model.embed_dim = cfg.embed.dim;
       }},
      {"embed.window", [&](const std::string& k, const std::string& v) { cfg.embed.window = to_int(k, v); }},
      {"embed.negatives", [&](const std::string& k, const std::string& v) { cfg.embed.negatives = to_int(k, v); }},
      {"embed.epochs", [&](const std::string& k, const std::string& v) { cfg.embed.epochs = to_int(k, v); }},
      {"embed.initial_lr", [&](const std::string& k, const std::string& v) { cfg.embed.initial_lr = to_double(k, v); }},
      {"embed.min_lr", [&](const std::string& k, const std::string& v) { cfg.embed.min_lr = to_double(k, v); }},
      {"embed.ngram_min", [&](const std::string& k, const std::string& v) { cfg.embed.ngram_min = to_int(k, v); }},
      {"embed.ngram_max", [&](const std::string& k, const std::string& v) { cfg.embed.ngram_max = to_int(k, v); }},
      {"embed.buckets", [&](const std::string& k, const std::string& v) { cfg.embed.bucket_count = to_int64(k, v); }},
      {"embed.unigram_power", [&](const std::string& k, const std::string& v) { cfg.embed.unigram_power = to_double(k, v); }},
      {"embed.seed", [&](const std::string& k, const std::string& v) { cfg.embed.seed = static_cast<uint64_t>(to_int64(k, v)); }},
      {"embed.workers", [&](const std::string& k, const std::string& v) { cfg.embed.workers = to_int(k, v); }},
      {"embed.variant",
       [&](const std::string& k, const std::string& v) {
         if (v != "word2vec" && v != "fasttext") throw std::runtime_error("config: key '" + k + "' must be word2vec or fasttext");
         cfg.embed_variant = v;
       }},

      {"model.arch", [&](const std::string&, const std::string& v) { cfg.model.arch = arch_from_string(v); }},
      {"model.filters", [&](const std::string& k, const std::string& v) { cfg.model.filters = to_int(k, v); }},
      {"model.units", [&](const std::string& k, const std::string& v) { cfg.model.lstm_units = to_int(k, v); }},
      {"model.kernel_sizes", [&](const std::string& k, const std::string& v) { cfg.model.kernel_sizes = to_int_list(k, v); }},
      {"model.dense", [&](const std::string& k, const std::string& v) { cfg.model.dense_widths = to_int_list(k, v); }},
      {"model.dropout", [&](const std::string& k, const std::string& v) { cfg.model.dropout = to_double(k, v); }},
      {"model.input_dropout", [&](const std::string& k, const std::string& v) { cfg.model.input_dropout = to_double(k, v); }},
      {"model.recurrent_dropout",
       [&](const std::string& k, const std::string& v) { cfg.model.recurrent_dropout = to_double(k, v); }},
      {"model.trainable_embedding",
       [&](const std::string& k, const std::string& v) { cfg.model.trainable_embedding = to_bool(k, v); }},
      {"model.pool", [&](const std::string& k, const std::string& v) { cfg.model.pool_size = to_int(k, v); }},
      {"model.pool_stride", [&](const std::string& k, const std::string& v) { cfg.model.pool_stride = to_int(k, v); }},

      {"train.epochs", [&](const std::string& k, const std::string& v) { cfg.train.epochs = to_int(k, v); }},
      {"train.batch_size", [&](const std::string& k, const std::string& v) { cfg.train.batch_size = to_int(k, v); }},
      {"train.lr", [&](const std::string& k, const std::string& v) { cfg.train.lr = to_double(k, v); }},
      {"train.seed", [&](const std::string& k, const std::string& v) { cfg.train.seed = static_cast<uint64_t>(to_int64(k, v)); }},
      {"train.keep_best", [&](const std::string& k, const std::string& v) { cfg.train.keep_best = to_bool(k, v); }},
      {"train.shuffle", [&](const std::string& k, const std::string& v) { cfg.train.shuffle = to_bool(k, v); }},

      {"output.dir", [&](const std::string&, const std::string& v) { cfg.output_dir = resolve(v); }},
  };

  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: " + path + ": line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    const auto it = handlers.find(key);
    if (it == handlers.end())
      throw std::runtime_error("config: " + path + ": line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second(key, value);
  }

  if (cfg.labeled_path.empty()) throw std::runtime_error("config: missing required key corpus.labeled");
  if (!std::filesystem::exists(cfg.labeled_path)) throw std::runtime_error("config: corpus.labeled path does not exist: " + cfg.labeled_path);
  for (const auto& p : cfg.embed_corpus_paths)
    if (!std::filesystem::exists(p)) throw std::runtime_error("config: corpus.embedding path does not exist: " + p);
  return cfg;
}

}  // namespace sarc
