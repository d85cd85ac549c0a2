// Generates the bundled toy corpus: 2000 synthetic Hinglish-flavoured tweets
// with keyword-planted labels plus scrape-style noise (search-tag hashtags,
// mentions, URLs, stray punctuation). Deterministic for a fixed seed, so the
// committed data file can be regenerated bit-for-bit.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "sarc/rng.hpp"

using sarc::Rng;

namespace {

const std::vector<std::string> kPositiveMarkers = {"wah", "zabardast", "kamaal", "behtareen", "kyabaat", "wahwah"};
const std::vector<std::string> kNegativeMarkers = {"shukriya", "badhiya", "jankari", "sahibaat", "dhanyavad", "uttam"};

const std::vector<std::string> kFiller = {
    "yaar",   "bhai",    "aaj",    "kal",     "movie",  "match",   "traffic", "office",  "meeting", "chai",
    "baarish", "dilli",  "mumbai", "bangalore", "monday", "kaam",  "ghar",    "dost",    "phone",   "news",
    "scene",  "acha",    "nahi",   "hai",     "kya",    "bohot",   "train",   "bus",     "signal",  "roko",
    "dekho",  "suno",    "socha",  "milega",  "hoga",   "karna",   "jaana",   "khana",   "paani",   "garmi",
    "sardi",  "cricket", "bollywood", "gaana", "review", "ticket", "line",    "station", "school",  "exam",
    "result", "party",   "shaadi", "market",  "sabzi",  "auto",    "metro",   "road",    "light",   "net"};

const std::vector<std::string> kPositiveTags = {"#sarcasm", "#irony", "#humor"};
const std::vector<std::string> kNegativeTags = {"#cricket", "#bollywood"};

}  // namespace

int main(int argc, char** argv) {
  const std::string out_path = argc > 1 ? argv[1] : "data/toy_corpus.jsonl";
  const int n = argc > 2 ? std::atoi(argv[2]) : 2000;

  Rng rng(20240501);
  std::vector<std::pair<std::string, int>> tweets;

  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const auto& markers = label == 1 ? kPositiveMarkers : kNegativeMarkers;

    const int len = 6 + static_cast<int>(rng.next_below(9));
    std::vector<std::string> toks;
    for (int j = 0; j < len; ++j) {
      std::string w = kFiller[rng.next_below(kFiller.size())];
      if (rng.next_below(12) == 0) w = "#" + w;          // survives cleaning as a plain word
      if (rng.next_below(10) == 0) w += "!!";            // punctuation to strip
      toks.push_back(w);
    }
    const int n_markers = 1 + static_cast<int>(rng.next_below(2));
    for (int m = 0; m < n_markers; ++m)
      toks[rng.next_below(toks.size())] = markers[rng.next_below(markers.size())];

    // scrape-style annotation noise: these never survive preprocessing
    if (rng.next_below(10) < 3) {
      const auto& tags = label == 1 ? kPositiveTags : kNegativeTags;
      toks.push_back(tags[rng.next_below(tags.size())]);
    }
    if (rng.next_below(10) < 2) toks.insert(toks.begin(), "@dost" + std::to_string(rng.next_below(50)));
    if (rng.next_below(10) < 2) toks.push_back("http://t.co/x" + std::to_string(rng.next_below(1000)));

    std::string text;
    for (size_t j = 0; j < toks.size(); ++j) {
      if (j) text += ' ';
      text += toks[j];
    }
    tweets.emplace_back(text, label);
  }
  sarc::shuffle(tweets, rng);

  std::ofstream out(out_path);
  if (!out) {
    std::fprintf(stderr, "error: cannot open %s\n", out_path.c_str());
    return 2;
  }
  for (size_t i = 0; i < tweets.size(); ++i)
    out << "{\"id\":\"toy-" << i << "\",\"text\":\"" << tweets[i].first << "\",\"label\":" << tweets[i].second << "}\n";
  std::printf("wrote %zu tweets to %s\n", tweets.size(), out_path.c_str());
  return 0;
}
