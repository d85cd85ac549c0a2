// sarc — training and evaluation pipeline for sarcasm detection on
// Hindi-English code-mixed tweets: corpus prep, embedding training, five
// neural classifiers, prediction and reporting.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <json.hpp>

#include "sarc/checkpoint.hpp"
#include "sarc/config.hpp"
#include "sarc/corpus.hpp"
#include "sarc/embed.hpp"
#include "sarc/gradcheck_suite.hpp"
#include "sarc/models.hpp"
#include "sarc/report.hpp"
#include "sarc/trainer.hpp"

namespace fs = std::filesystem;
using namespace sarc;

namespace {

std::unordered_set<std::string> tag_set(const std::vector<std::string>& tags) {
  std::unordered_set<std::string> out;
  for (const auto& t : tags) out.insert(ascii_lower(t));
  return out;
}

// embedding corpora may be JSONL, TSV or plain text lines
std::vector<std::string> load_embedding_texts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding corpus " + path);
  char first = 0;
  while (in.get(first) && (first == ' ' || first == '\n' || first == '\r' || first == '\t')) {
  }
  in.clear();
  in.seekg(0);

  std::vector<std::string> texts;
  if (first == '{') {
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
      }
      if (j.contains("text") && j["text"].is_string()) texts.push_back(j["text"].get<std::string>());
    }
  } else {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      // strip a trailing TSV label when present
      if (line.size() > 2 && line[line.size() - 2] == '\t' && (line.back() == '0' || line.back() == '1'))
        line.resize(line.size() - 2);
      if (!line.empty()) texts.push_back(line);
    }
  }
  return texts;
}

std::string output_dir_for(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SARC_OUTPUT_DIR"); env && *env) return env;
  return cfg.output_dir;
}

EmbeddingMatrix train_embeddings_from_config(const ExperimentConfig& cfg, const std::string& variant, EmbedTrainStats* stats) {
  std::vector<std::string> raw_texts;
  if (!cfg.embed_corpus_paths.empty()) {
    for (const auto& p : cfg.embed_corpus_paths)
      for (auto& t : load_embedding_texts(p)) raw_texts.push_back(std::move(t));
  } else {
    for (const auto& r : load_tweets(cfg.labeled_path)) raw_texts.push_back(r.text);
  }
  const auto tags = tag_set(cfg.search_tags);
  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(raw_texts.size());
  for (const auto& t : raw_texts) token_lists.push_back(tokenize(clean_tweet(t, tags)));

  Vocabulary vocab = build_vocabulary(token_lists, cfg.min_count);
  if (variant == "fasttext") return train_fasttext(token_lists, vocab, cfg.embed, stats);
  return train_word2vec(token_lists, vocab, cfg.embed, stats);
}

nlohmann::json eval_to_json(const EvalResult& r) {
  return {{"accuracy", r.accuracy},
          {"accuracy_pct", r.accuracy * 100.0},
          {"loss", r.loss},
          {"true_positive", r.true_positive},
          {"false_positive", r.false_positive},
          {"true_negative", r.true_negative},
          {"false_negative", r.false_negative},
          {"total", r.total}};
}

// ---------------------------------------------------------------------------

void cmd_prep(const std::string& in, const std::string& out_dir, const std::vector<std::string>& tags, int min_count,
              bool stats) {
  const auto records = load_tweets(in);
  const auto tagset = tag_set(tags);

  std::vector<TweetRecord> cleaned = records;
  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(records.size());
  for (auto& r : cleaned) {
    r.text = clean_tweet(r.text, tagset);
    token_lists.push_back(tokenize(r.text));
  }

  fs::create_directories(out_dir);
  save_tweets_tsv((fs::path(out_dir) / "clean.tsv").string(), cleaned);
  Vocabulary vocab = build_vocabulary(token_lists, min_count);
  save_vocabulary((fs::path(out_dir) / "vocab.txt").string(), vocab);

  if (stats) {
    const DatasetStats s = dataset_stats(records);
    std::printf("total %lld\n", static_cast<long long>(s.total));
    std::printf("sarcastic %lld\n", static_cast<long long>(s.sarcastic));
    std::printf("non_sarcastic %lld\n", static_cast<long long>(s.non_sarcastic));
  }
  std::printf("prep: %zu tweets -> %s (vocabulary %d tokens, min_count %d)\n", records.size(), out_dir.c_str(), vocab.size(),
              min_count);
}

void cmd_embed(const std::string& config_path, const std::string& variant_flag, int64_t seed_flag, int workers_flag,
               const std::string& out_flag) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  const std::string variant = variant_flag.empty() ? cfg.embed_variant : variant_flag;
  if (variant != "word2vec" && variant != "fasttext")
    throw std::runtime_error("embed: variant must be word2vec or fasttext, got '" + variant + "'");
  if (seed_flag >= 0) cfg.embed.seed = static_cast<uint64_t>(seed_flag);
  if (workers_flag > 0) cfg.embed.workers = workers_flag;

  EmbedTrainStats stats;
  EmbeddingMatrix matrix = train_embeddings_from_config(cfg, variant, &stats);

  std::string out = out_flag;
  if (out.empty()) {
    const fs::path dir = output_dir_for(cfg);
    fs::create_directories(dir);
    out = (dir / ("embeddings_" + variant + ".vec")).string();
  } else {
    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path());
  }
  save_embeddings(out, matrix);

  for (size_t e = 0; e < stats.epoch_mean_loss.size(); ++e)
    std::printf("epoch %zu mean_loss %.6f\n", e + 1, stats.epoch_mean_loss[e]);
  std::printf("embed: %s, %d words x %d dims -> %s\n", variant.c_str(), matrix.vocab.size(), matrix.dim, out.c_str());
}

void cmd_nn(const std::string& embeddings_path, const std::string& word, int k) {
  EmbeddingMatrix matrix = load_embeddings(embeddings_path);
  for (const auto& [w, cosine] : nearest_neighbors(word, k, matrix)) std::printf("%s %.6f\n", w.c_str(), cosine);
}

void cmd_train(const std::string& config_path, const std::string& arch_flag, const std::string& embeddings_path,
               bool keep_best) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (!arch_flag.empty()) cfg.model.arch = arch_from_string(arch_flag);
  if (keep_best) cfg.train.keep_best = true;
  const std::string arch_tag = arch_to_string(cfg.model.arch);
  const auto tags = tag_set(cfg.search_tags);

  // clean the full corpus, build the vocabulary, then split
  std::vector<TweetRecord> records = load_tweets(cfg.labeled_path);
  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(records.size());
  for (auto& r : records) {
    r.text = clean_tweet(r.text, tags);
    token_lists.push_back(tokenize(r.text));
  }
  Vocabulary vocab = build_vocabulary(token_lists, cfg.min_count);
  DatasetSplit split = split_dataset(records, cfg.split_seed);

  const fs::path out_dir = output_dir_for(cfg);
  fs::create_directories(out_dir);
  save_tweets_tsv((out_dir / "train.tsv").string(), split.train);
  save_tweets_tsv((out_dir / "validation.tsv").string(), split.validation);
  save_tweets_tsv((out_dir / "test.tsv").string(), split.test);

  EmbeddingMatrix matrix;
  if (!embeddings_path.empty()) {
    matrix = load_embeddings(embeddings_path);
  } else {
    std::printf("train: no --embeddings given, training %s embeddings first\n", cfg.embed_variant.c_str());
    matrix = train_embeddings_from_config(cfg, cfg.embed_variant, nullptr);
  }
  if (matrix.dim != cfg.model.embed_dim)
    throw std::runtime_error("train: embedding dim " + std::to_string(matrix.dim) + " does not match model config dim " +
                             std::to_string(cfg.model.embed_dim));

  BuiltModel<float> model(cfg.model, vocab.size(), build_lookup_rows(matrix, vocab), cfg.train.seed);

  TrainConfig tc = cfg.train;
  tc.checkpoint_dir = (out_dir / arch_tag).string();
  const auto train_set = encode_records(split.train, vocab, cfg.max_len);
  const auto val_set = encode_records(split.validation, vocab, cfg.max_len);

  TrainResult result = train(model, train_set, val_set, tc, vocab, cfg.search_tags);
  for (const auto& e : result.history.epochs)
    std::printf("epoch %d train_loss %.6f train_acc %.4f val_loss %.6f val_acc %.4f\n", e.epoch, e.train_loss, e.train_acc,
                e.val_loss, e.val_acc);

  nlohmann::json summary = {{"arch", arch_tag},
                            {"best_epoch", result.best_epoch},
                            {"best_checkpoint", result.best_checkpoint},
                            {"epochs", result.history.epochs.size()},
                            {"test_set", (out_dir / "test.tsv").string()}};
  if (!result.history.epochs.empty()) {
    summary["val_acc"] = result.history.epochs[best_epoch_index(result.history)].val_acc;
  }
  std::printf("%s\n", summary.dump().c_str());
}

void cmd_eval(const std::string& checkpoint_path, const std::string& test_path, int batch_size, const std::string& out_path,
              const std::string& corpus_variant, const std::string& embed_variant) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
  const auto tags = tag_set(ck.search_tags);

  std::vector<TweetRecord> records = load_tweets(test_path);
  for (auto& r : records) r.text = clean_tweet(r.text, tags);  // no-op on already clean text
  const auto test_set = encode_records(records, ck.vocab, ck.model.spec().max_len);

  EvalResult r = evaluate(ck.model, test_set, batch_size);
  nlohmann::json j = eval_to_json(r);
  j["arch"] = arch_to_string(ck.model.spec().arch);
  j["checkpoint"] = checkpoint_path;
  if (!corpus_variant.empty()) j["corpus_variant"] = corpus_variant;
  if (!embed_variant.empty()) j["embed_variant"] = embed_variant;

  const std::string text = j.dump();
  std::printf("%s\n", text.c_str());
  if (!out_path.empty()) {
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("eval: cannot open " + out_path);
    out << text << '\n';
  }
}

void cmd_predict(const std::string& checkpoint_path, const std::string& text) {
  LoadedCheckpoint ck = load_checkpoint(checkpoint_path);
  const double p = predict(ck.model, text, ck.vocab, ck.model.spec().max_len, tag_set(ck.search_tags));
  std::printf("%.6f\n", p);
}

void cmd_gradcheck(const std::string& arch, const std::string& scale, bool skip_layers) {
  if (scale != "small") throw std::runtime_error("gradcheck: only --scale small is supported");
  bool all_pass = true;
  auto print_line = [&](const GradCheckLine& l) {
    std::printf("%s %-16s max_rel_err %.3e (tolerance %.0e)\n", l.pass ? "PASS" : "FAIL", l.name.c_str(), l.max_rel_err,
                l.tolerance);
    all_pass = all_pass && l.pass;
  };
  if (!skip_layers && arch == "all")
    for (const auto& l : run_layer_gradchecks()) print_line(l);
  for (const auto& l : run_model_gradchecks(arch)) print_line(l);
  if (!all_pass) throw std::runtime_error("gradcheck: at least one check exceeded its tolerance");
  std::printf("gradcheck: all checks passed\n");
}

void cmd_report(const std::string& results_dir, const std::string& csv_path) {
  std::vector<GridCell> cells;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(results_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    std::ifstream in(file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception&) {
      std::fprintf(stderr, "warning: skipping unparseable %s\n", file.string().c_str());
      continue;
    }
    if (!j.contains("arch") || !j.contains("corpus_variant") || !j.contains("embed_variant") || !j.contains("accuracy_pct")) {
      std::fprintf(stderr, "warning: %s lacks arch/corpus_variant/embed_variant/accuracy_pct; skipped\n", file.string().c_str());
      continue;
    }
    cells.push_back({j["arch"].get<std::string>(), j["corpus_variant"].get<std::string>(), j["embed_variant"].get<std::string>(),
                     j["accuracy_pct"].get<double>()});
  }

  std::printf("%s", format_grid(cells).c_str());
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("report: cannot open " + csv_path);
    out << format_grid_csv(cells);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sarcasm detection pipeline for Hindi-English code-mixed tweets"};
  app.require_subcommand(1);

  // prep
  std::string prep_in, prep_out = "out/prep";
  std::vector<std::string> prep_tags;
  int prep_min_count = 10;
  bool prep_stats = false;
  auto* prep = app.add_subcommand("prep", "clean a corpus, build the vocabulary, report stats");
  prep->add_option("--in", prep_in, "input corpus (json-lines or TSV)")->required();
  prep->add_option("--out", prep_out, "output directory");
  prep->add_option("--tags", prep_tags, "scrape tags to delete (comma separated)")->delimiter(',');
  prep->add_option("--min-count", prep_min_count, "vocabulary frequency threshold");
  prep->add_flag("--stats", prep_stats, "print per-label tweet counts");

  // embed
  std::string embed_config, embed_variant, embed_out;
  int64_t embed_seed = -1;
  int embed_workers = 0;
  auto* embed = app.add_subcommand("embed", "train word embeddings from the configured corpora");
  embed->add_option("--config", embed_config, "experiment config file")->required();
  embed->add_option("--variant", embed_variant, "word2vec or fasttext (overrides the config)");
  embed->add_option("--seed", embed_seed, "embedding seed override");
  embed->add_option("--workers", embed_workers, "worker threads (>1 is lock-free and non-deterministic)");
  embed->add_option("--out", embed_out, "embedding file path");

  // nn
  std::string nn_embeddings, nn_word;
  int nn_k = 5;
  auto* nn_cmd = app.add_subcommand("nn", "nearest neighbours of a word in an embedding file");
  nn_cmd->add_option("--embeddings", nn_embeddings, "embedding file")->required();
  nn_cmd->add_option("--word", nn_word, "query word")->required();
  nn_cmd->add_option("-k", nn_k, "neighbour count");

  // train
  std::string train_config, train_arch, train_embeddings;
  bool train_keep_best = false;
  auto* train_cmd = app.add_subcommand("train", "train a classifier (checkpoints + history)");
  train_cmd->add_option("--config", train_config, "experiment config file")->required();
  train_cmd->add_option("--arch", train_arch, "series_cnn | parallel_cnn | lstm | bilstm | attn_bilstm");
  train_cmd->add_option("--embeddings", train_embeddings, "pre-trained embedding file (trained on the fly when omitted)");
  train_cmd->add_flag("--keep-best", train_keep_best, "prune all but the best checkpoint");

  // eval
  std::string eval_ckpt, eval_test, eval_out, eval_corpus_variant, eval_embed_variant;
  int eval_batch = 64;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a test file");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--test", eval_test, "test corpus (json-lines or TSV)")->required();
  eval_cmd->add_option("--batch", eval_batch, "evaluation batch size");
  eval_cmd->add_option("--out", eval_out, "write the metrics JSON here as well");
  eval_cmd->add_option("--corpus-variant", eval_corpus_variant, "hinglish or hinglish_english (recorded for report)");
  eval_cmd->add_option("--embed-variant", eval_embed_variant, "word2vec or fasttext (recorded for report)");

  // predict
  std::string pred_ckpt, pred_text;
  auto* pred = app.add_subcommand("predict", "sarcasm probability for one tweet");
  pred->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
  pred->add_option("--text", pred_text, "raw tweet text")->required();

  // gradcheck
  std::string gc_arch = "all";
  std::string gc_scale = "small";
  bool gc_skip_layers = false;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference verification of layers and models");
  gc->add_option("--arch", gc_arch, "one architecture tag or 'all'");
  gc->add_option("--scale", gc_scale, "model size for the check (only 'small')");
  gc->add_flag("--models-only", gc_skip_layers, "skip the per-layer checks");

  // report
  std::string report_dir, report_csv;
  auto* report = app.add_subcommand("report", "accuracy grid from eval JSON files");
  report->add_option("--results-dir", report_dir, "directory of eval --out files")->required();
  report->add_option("--csv", report_csv, "also write the grid as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits cleanly, usage errors exit 1
  }

  try {
    if (prep->parsed()) cmd_prep(prep_in, prep_out, prep_tags, prep_min_count, prep_stats);
    if (embed->parsed()) cmd_embed(embed_config, embed_variant, embed_seed, embed_workers, embed_out);
    if (nn_cmd->parsed()) cmd_nn(nn_embeddings, nn_word, nn_k);
    if (train_cmd->parsed()) cmd_train(train_config, train_arch, train_embeddings, train_keep_best);
    if (eval_cmd->parsed()) cmd_eval(eval_ckpt, eval_test, eval_batch, eval_out, eval_corpus_variant, eval_embed_variant);
    if (pred->parsed()) cmd_predict(pred_ckpt, pred_text);
    if (gc->parsed()) cmd_gradcheck(gc_arch, gc_scale, gc_skip_layers);
    if (report->parsed()) cmd_report(report_dir, report_csv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
