#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace sarc {

// One labeled tweet. label: 1 = sarcastic, 0 = not sarcastic.
struct TweetRecord {
  std::string id;
  std::string text;
  int label = 0;
};

struct DatasetStats {
  int64_t total = 0;
  int64_t sarcastic = 0;
  int64_t non_sarcastic = 0;
};

// Token <-> index map with corpus frequencies. Index 0 is PAD, index 1 is OOV;
// corpus tokens start at index 2, ordered by descending frequency with
// lexicographic tie-break.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kOov = 1;
  static const std::string& pad_token();
  static const std::string& oov_token();

  Vocabulary();

  // retained: (token, count) pairs already ordered by the index they get
  Vocabulary(std::vector<std::pair<std::string, int64_t>> retained, int min_count);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  // index of a token, kOov if unknown
  int index_of(const std::string& token) const;
  const std::string& token_at(int index) const;
  int64_t count_at(int index) const;
  int64_t frequency(const std::string& token) const;
  int min_count() const { return min_count_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> index_;
  int min_count_ = 1;
};

// Fixed-length index vector; positions >= true_length hold PAD.
struct EncodedSequence {
  std::vector<int> indices;
  int true_length = 0;
};

struct DatasetSplit {
  std::vector<TweetRecord> train;
  std::vector<TweetRecord> validation;
  std::vector<TweetRecord> test;
};

// Applies the tweet-cleaning rules: '#' characters are stripped (a hashtag
// whose word is one of the scrape tags is deleted wholesale), @-mentions and
// URL tokens are deleted, ASCII punctuation is removed and whitespace is
// collapsed. Word order and casing survive; total on any input, idempotent.
std::string clean_tweet(const std::string& raw, const std::unordered_set<std::string>& search_tags);

// lowercase + split on whitespace runs; never yields empty tokens
std::vector<std::string> tokenize(const std::string& text);

// Keeps tokens whose total frequency is >= min_count. Empty corpus yields a
// PAD/OOV-only vocabulary with a warning.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists, int min_count = 10);

// Known tokens map to their index, unknown to OOV; truncates at the tail,
// right-pads with PAD.
EncodedSequence encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, int max_len);

// tokens for the first true_length indices
std::vector<std::string> decode(const EncodedSequence& seq, const Vocabulary& vocab);

// Deterministic shuffle under seed, then 80/10/10 with remainders assigned to
// train. Throws std::invalid_argument for fewer than 10 records; warns when a
// split's label ratio drifts more than 5 points from the global ratio.
DatasetSplit split_dataset(const std::vector<TweetRecord>& records, uint64_t seed);

DatasetStats dataset_stats(const std::vector<TweetRecord>& records);

// Ingestion. JSON-lines records {"id","text","label"} when the first record
// starts with '{', otherwise TSV lines "text<TAB>label". Malformed input
// raises std::runtime_error naming the line.
std::vector<TweetRecord> load_tweets(const std::string& path);
void save_tweets_tsv(const std::string& path, const std::vector<TweetRecord>& records);

// vocab file: "min_count N" header then "token<TAB>count" per retained index
void save_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::string& path);

// helpers shared with the embed module
std::vector<std::string> split_whitespace(const std::string& s);
std::string ascii_lower(const std::string& s);

}  // namespace sarc
