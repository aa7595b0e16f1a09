#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "regen/oracle.hpp"
#include "regen/util.hpp"

namespace regen {

struct Corpus {
  std::vector<std::string> texts;
  std::string source_label;
};

// One description per line; blank lines are skipped.
Corpus load_corpus(const std::filesystem::path& path);

// Lowercase, split on anything that is not [a-z0-9].
std::vector<std::string> tokenize(std::string_view text);

inline constexpr double kBleuEpsilon = 0.1;

// BLEU of one tokenized hypothesis against a set of references. Orders with
// no hypothesis n-grams are dropped and the remaining weights renormalized;
// zero clipped counts are replaced by kBleuEpsilon.
double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references, int max_n);

// Mean BLEU of every text against the rest. Throws kPrecondition on < 2 texts.
double self_bleu(const std::vector<std::string>& texts, int max_n = 4);

using EmbedFn = std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

class EmbedderHandle {
 public:
  // Feature hashing of token counts into `dim` buckets.
  static EmbedderHandle hashing(std::size_t dim = 256);
  static EmbedderHandle from_function(EmbedFn fn);
  // POSTs {"input": [...]} and reads data[i].embedding.
  static EmbedderHandle remote(std::string endpoint, Transport transport = nullptr);
  // REGEN_EMBED_URL if set, otherwise the hashing embedder.
  static EmbedderHandle from_env();

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const;

 private:
  EmbedFn fn_;
};

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// 1 - mean pairwise cosine over unordered pairs, clamped to [0, 1].
double embedding_diversity(const std::vector<std::string>& texts, const EmbedderHandle& embedder);

enum class Metric { kSelfBleu, kEmbedding };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);

struct DiversityReport {
  Metric metric = Metric::kSelfBleu;
  double mean = 0.0;
  double std = 0.0;
  std::size_t sample_size = 0;
  std::size_t repeats = 0;
  std::int64_t seed = 0;
  std::vector<double> scores;
};

struct SampleOptions {
  std::size_t sample_size = 0;
  std::size_t repeats = 10;
  std::int64_t seed = 0;
  int max_n = 4;
};

DiversityReport sampled_diversity(const Corpus& corpus, Metric metric, const SampleOptions& options,
                                  const EmbedderHandle& embedder = EmbedderHandle::hashing());

Json report_to_json(const DiversityReport& report);

}  // namespace regen
