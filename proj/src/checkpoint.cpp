#include "sarc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace sarc {

static_assert(std::endian::native == std::endian::little, "checkpoint payloads are little-endian");

namespace {

constexpr char kMagic[8] = {'S', 'A', 'R', 'C', 'C', 'K', 'P', '1'};
constexpr int kVersion = 1;

nlohmann::json spec_to_json(const ModelSpec& s) {
  return {{"arch", arch_to_string(s.arch)},
          {"max_len", s.max_len},
          {"embed_dim", s.embed_dim},
          {"trainable_embedding", s.trainable_embedding},
          {"kernel_sizes", s.kernel_sizes},
          {"filters", s.filters},
          {"pool_size", s.pool_size},
          {"pool_stride", s.pool_stride},
          {"dropout", s.dropout},
          {"lstm_units", s.lstm_units},
          {"input_dropout", s.input_dropout},
          {"recurrent_dropout", s.recurrent_dropout},
          {"dense_widths", s.dense_widths}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.arch = arch_from_string(j.at("arch").get<std::string>());
  s.max_len = j.at("max_len").get<int>();
  s.embed_dim = j.at("embed_dim").get<int>();
  s.trainable_embedding = j.at("trainable_embedding").get<bool>();
  s.kernel_sizes = j.at("kernel_sizes").get<std::vector<int>>();
  s.filters = j.at("filters").get<int>();
  s.pool_size = j.at("pool_size").get<int>();
  s.pool_stride = j.at("pool_stride").get<int>();
  s.dropout = j.at("dropout").get<double>();
  s.lstm_units = j.at("lstm_units").get<int>();
  s.input_dropout = j.at("input_dropout").get<double>();
  s.recurrent_dropout = j.at("recurrent_dropout").get<double>();
  s.dense_widths = j.at("dense_widths").get<std::vector<int>>();
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const BuiltModel<float>& model, const Vocabulary& vocab,
                     const std::vector<std::string>& search_tags, const CheckpointMeta& meta) {
  nlohmann::json manifest;
  manifest["format"] = "sarc-checkpoint";
  manifest["version"] = kVersion;
  manifest["spec"] = spec_to_json(model.spec());
  manifest["epoch"] = meta.epoch;
  manifest["metrics"] = {{"train_loss", meta.train_loss},
                         {"train_acc", meta.train_acc},
                         {"val_loss", meta.val_loss},
                         {"val_acc", meta.val_acc}};
  manifest["rng_state"] = meta.rng_state;
  manifest["search_tags"] = search_tags;

  nlohmann::json vocab_tokens = nlohmann::json::array();
  for (int i = 2; i < vocab.size(); ++i) vocab_tokens.push_back({vocab.token_at(i), vocab.count_at(i)});
  manifest["vocab"] = {{"min_count", vocab.min_count()}, {"tokens", std::move(vocab_tokens)}};

  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : model.named_parameters())
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f32"}});
  manifest["tensors"] = std::move(tensors);

  const std::string mstr = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kMagic, sizeof kMagic);
  const uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof mlen);
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  for (const auto& [name, t] : model.named_parameters())
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.data().size() * sizeof(float)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file");
  uint64_t mlen = 0;
  if (!in.read(reinterpret_cast<char*>(&mlen), sizeof mlen)) throw std::runtime_error("load_checkpoint: truncated manifest length");
  std::string mstr(mlen, '\0');
  if (!in.read(mstr.data(), static_cast<std::streamsize>(mlen))) throw std::runtime_error("load_checkpoint: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mstr);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_checkpoint: bad manifest: ") + e.what());
  }
  const int version = manifest.at("version").get<int>();
  if (version != kVersion)
    throw std::runtime_error("load_checkpoint: unsupported checkpoint version " + std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")");

  LoadedCheckpoint ck;
  const ModelSpec spec = spec_from_json(manifest.at("spec"));
  std::vector<std::pair<std::string, int64_t>> retained;
  for (const auto& entry : manifest.at("vocab").at("tokens"))
    retained.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<int64_t>());
  ck.vocab = Vocabulary(std::move(retained), manifest.at("vocab").at("min_count").get<int>());
  ck.search_tags = manifest.at("search_tags").get<std::vector<std::string>>();
  ck.meta.epoch = manifest.at("epoch").get<int>();
  ck.meta.train_loss = manifest.at("metrics").at("train_loss").get<double>();
  ck.meta.train_acc = manifest.at("metrics").at("train_acc").get<double>();
  ck.meta.val_loss = manifest.at("metrics").at("val_loss").get<double>();
  ck.meta.val_acc = manifest.at("metrics").at("val_acc").get<double>();
  ck.meta.rng_state = manifest.at("rng_state").get<uint64_t>();

  const std::vector<float> zero_rows(static_cast<size_t>(ck.vocab.size()) * static_cast<size_t>(spec.embed_dim), 0.0f);
  ck.model = BuiltModel<float>(spec, ck.vocab.size(), zero_rows, /*init_seed=*/0);

  for (const auto& entry : manifest.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    const std::string dtype = entry.at("dtype").get<std::string>();
    if (dtype != "f32") throw std::runtime_error("load_checkpoint: tensor '" + name + "' has unsupported dtype " + dtype);
    nn::Tensor<float> param = ck.model.parameter(name);
    if (shape != param.shape())
      throw std::runtime_error("load_checkpoint: tensor '" + name + "' has shape " + nn::shape_string(shape) +
                               ", model expects " + nn::shape_string(param.shape()));
    if (!in.read(reinterpret_cast<char*>(param.data().data()), static_cast<std::streamsize>(param.data().size() * sizeof(float))))
      throw std::runtime_error("load_checkpoint: truncated payload for tensor '" + name + "'");
  }
  return ck;
}

}  // namespace sarc
