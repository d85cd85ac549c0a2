#include "sarc/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sarc/log.hpp"
#include "sarc/rng.hpp"

namespace sarc {

namespace {

bool is_ascii_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// ASCII-only punctuation test; bytes of multibyte UTF-8 sequences pass through
bool is_ascii_punct(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u) != 0;
}

std::string strip_punct(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (!is_ascii_punct(c)) out.push_back(c);
  return out;
}

bool is_url_token(const std::string& lower) {
  return lower.rfind("http:", 0) == 0 || lower.rfind("https:", 0) == 0 || lower.rfind("www.", 0) == 0;
}

}  // namespace

std::vector<std::string> split_whitespace(const std::string& s) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    while (i < n && is_ascii_space(s[i])) ++i;
    size_t start = i;
    while (i < n && !is_ascii_space(s[i])) ++i;
    if (i > start) out.emplace_back(s, start, i - start);
  }
  return out;
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u < 128) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::string clean_tweet(const std::string& raw, const std::unordered_set<std::string>& search_tags) {
  std::vector<std::string> kept;
  for (const std::string& tok : split_whitespace(raw)) {
    const std::string lower = ascii_lower(tok);
    if (is_url_token(lower)) continue;
    if (tok[0] == '@') continue;
    if (tok[0] == '#') {
      // hashtag word: keep the word unless it is one of the scrape tags
      std::string word = ascii_lower(strip_punct(tok));
      if (search_tags.count(word)) continue;
    }
    std::string cleaned = strip_punct(tok);
    if (!cleaned.empty()) kept.push_back(std::move(cleaned));
  }
  std::string out;
  for (size_t i = 0; i < kept.size(); ++i) {
    if (i) out.push_back(' ');
    out += kept[i];
  }
  return out;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out = split_whitespace(text);
  for (std::string& t : out) t = ascii_lower(t);
  return out;
}

const std::string& Vocabulary::pad_token() {
  static const std::string t = "<pad>";
  return t;
}

const std::string& Vocabulary::oov_token() {
  static const std::string t = "<oov>";
  return t;
}

Vocabulary::Vocabulary() {
  tokens_ = {pad_token(), oov_token()};
  counts_ = {0, 0};
  index_[pad_token()] = kPad;
  index_[oov_token()] = kOov;
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, int64_t>> retained, int min_count) : Vocabulary() {
  min_count_ = min_count;
  tokens_.reserve(retained.size() + 2);
  counts_.reserve(retained.size() + 2);
  for (auto& [tok, cnt] : retained) {
    index_[tok] = static_cast<int>(tokens_.size());
    tokens_.push_back(std::move(tok));
    counts_.push_back(cnt);
  }
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kOov : it->second;
}

const std::string& Vocabulary::token_at(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("Vocabulary::token_at: index " + std::to_string(index));
  return tokens_[static_cast<size_t>(index)];
}

int64_t Vocabulary::count_at(int index) const {
  if (index < 0 || index >= size()) throw std::out_of_range("Vocabulary::count_at: index " + std::to_string(index));
  return counts_[static_cast<size_t>(index)];
}

int64_t Vocabulary::frequency(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : counts_[static_cast<size_t>(it->second)];
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists, int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, int64_t> counts;
  for (const auto& list : token_lists)
    for (const auto& tok : list) {
      if (tok == Vocabulary::pad_token() || tok == Vocabulary::oov_token()) continue;
      ++counts[tok];
    }

  std::vector<std::pair<std::string, int64_t>> retained;
  retained.reserve(counts.size());
  for (auto& [tok, cnt] : counts)
    if (cnt >= min_count) retained.emplace_back(tok, cnt);

  std::sort(retained.begin(), retained.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  if (retained.empty()) warn("build_vocabulary: no token met min_count=" + std::to_string(min_count) + "; vocabulary holds only PAD/OOV");
  return Vocabulary(std::move(retained), min_count);
}

EncodedSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, int max_len) {
  if (max_len < 1) throw std::invalid_argument("encode: max_len must be >= 1");
  EncodedSequence seq;
  seq.true_length = static_cast<int>(std::min(tokens.size(), static_cast<size_t>(max_len)));
  seq.indices.assign(static_cast<size_t>(max_len), Vocabulary::kPad);
  for (int i = 0; i < seq.true_length; ++i) seq.indices[static_cast<size_t>(i)] = vocab.index_of(tokens[static_cast<size_t>(i)]);
  return seq;
}

std::vector<std::string> decode(const EncodedSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(seq.true_length));
  for (int i = 0; i < seq.true_length; ++i) out.push_back(vocab.token_at(seq.indices[static_cast<size_t>(i)]));
  return out;
}

DatasetSplit split_dataset(const std::vector<TweetRecord>& records, uint64_t seed) {
  const size_t n = records.size();
  if (n < 10) throw std::invalid_argument("split_dataset: need at least 10 records, got " + std::to_string(n));

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(order, rng);

  const size_t n_val = n / 10;
  const size_t n_test = n / 10;
  const size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.train.reserve(n_train);
  split.validation.reserve(n_val);
  split.test.reserve(n_test);
  for (size_t i = 0; i < n; ++i) {
    const TweetRecord& r = records[order[i]];
    if (i < n_train)
      split.train.push_back(r);
    else if (i < n_train + n_val)
      split.validation.push_back(r);
    else
      split.test.push_back(r);
  }

  auto ratio = [](const std::vector<TweetRecord>& rs) {
    if (rs.empty()) return 0.0;
    int64_t pos = 0;
    for (const auto& r : rs) pos += r.label;
    return static_cast<double>(pos) / static_cast<double>(rs.size());
  };
  const double global = ratio(records);
  const struct {
    const char* name;
    const std::vector<TweetRecord>* part;
  } parts[] = {{"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
  for (const auto& p : parts) {
    double r = ratio(*p.part);
    if (std::abs(r - global) > 0.05)
      warn("split_dataset: " + std::string(p.name) + " label ratio " + std::to_string(r) + " drifts from global " + std::to_string(global));
  }
  return split;
}

DatasetStats dataset_stats(const std::vector<TweetRecord>& records) {
  DatasetStats s;
  s.total = static_cast<int64_t>(records.size());
  for (const auto& r : records) (r.label == 1 ? s.sarcastic : s.non_sarcastic)++;
  return s;
}

namespace {

int parse_label(const nlohmann::json& j, size_t line_no) {
  int label;
  if (j.is_number_integer())
    label = j.get<int>();
  else if (j.is_boolean())
    label = j.get<bool>() ? 1 : 0;
  else if (j.is_string())
    label = j.get<std::string>() == "1" ? 1 : (j.get<std::string>() == "0" ? 0 : -1);
  else
    label = -1;
  if (label != 0 && label != 1)
    throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": label must be 0 or 1");
  return label;
}

std::vector<TweetRecord> load_jsonl(std::istream& in) {
  std::vector<TweetRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("text") || !j["text"].is_string())
      throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": missing string field 'text'");
    if (!j.contains("label")) throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": missing field 'label'");
    TweetRecord r;
    r.text = j["text"].get<std::string>();
    r.label = parse_label(j["label"], line_no);
    if (j.contains("id"))
      r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    else
      r.id = std::to_string(line_no);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TweetRecord> load_tsv(std::istream& in) {
  std::vector<TweetRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": expected 'text<TAB>label'");
    std::string label_str = line.substr(tab + 1);
    if (label_str != "0" && label_str != "1")
      throw std::runtime_error("load_tweets: line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + label_str + "'");
    TweetRecord r;
    r.id = std::to_string(line_no);
    r.text = line.substr(0, tab);
    r.label = label_str == "1" ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<TweetRecord> load_tweets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tweets: cannot open " + path);

  // sniff the format off the first non-blank character
  char c = 0;
  while (in.get(c) && (c == ' ' || c == '\t' || c == '\r' || c == '\n')) {
  }
  in.clear();
  in.seekg(0);
  return c == '{' ? load_jsonl(in) : load_tsv(in);
}

void save_tweets_tsv(const std::string& path, const std::vector<TweetRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_tweets_tsv: cannot open " + path);
  for (const auto& r : records) out << r.text << '\t' << r.label << '\n';
  if (!out) throw std::runtime_error("save_tweets_tsv: write failed for " + path);
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_vocabulary: cannot open " + path);
  out << "min_count " << vocab.min_count() << '\n';
  for (int i = 2; i < vocab.size(); ++i) out << vocab.token_at(i) << '\t' << vocab.count_at(i) << '\n';
  if (!out) throw std::runtime_error("save_vocabulary: write failed for " + path);
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_vocabulary: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_vocabulary: empty file " + path);
  std::istringstream header(line);
  std::string tag;
  int min_count = 0;
  if (!(header >> tag >> min_count) || tag != "min_count")
    throw std::runtime_error("load_vocabulary: bad header in " + path);

  std::vector<std::pair<std::string, int64_t>> retained;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("load_vocabulary: line " + std::to_string(line_no) + ": expected 'token<TAB>count'");
    retained.emplace_back(line.substr(0, tab), std::stoll(line.substr(tab + 1)));
  }
  return Vocabulary(std::move(retained), min_count);
}

}  // namespace sarc
