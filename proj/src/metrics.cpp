#include "regen/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "regen/error.hpp"

namespace regen {

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  corpus.source_label = path.filename().string();
  for (const auto& line : split(read_file(path), '\n')) {
    auto text = trim(line);
    if (!text.empty()) corpus.texts.push_back(std::move(text));
  }
  return corpus;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<Gram, int> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Gram(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

}  // namespace

double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references, int max_n) {
  require(max_n >= 1, "max_n must be at least 1");
  if (hypothesis.empty() || references.empty()) return 0.0;

  std::vector<double> log_p;
  for (int n = 1; n <= max_n; ++n) {
    auto hyp = ngram_counts(hypothesis, n);
    if (hyp.empty()) break;
    std::map<Gram, int> max_ref;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : ngram_counts(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    }
    int clipped = 0;
    int total = 0;
    for (const auto& [gram, count] : hyp) {
      total += count;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    double num = clipped == 0 ? kBleuEpsilon : static_cast<double>(clipped);
    log_p.push_back(std::log(num / total));
  }

  double sum = 0.0;
  for (double v : log_p) sum += v;
  double geo = std::exp(sum / static_cast<double>(log_p.size()));

  // closest reference length, ties to the shorter one
  auto c = static_cast<double>(hypothesis.size());
  double r = -1.0;
  for (const auto& ref : references) {
    auto len = static_cast<double>(ref.size());
    if (r < 0 || std::abs(len - c) < std::abs(r - c) ||
        (std::abs(len - c) == std::abs(r - c) && len < r)) {
      r = len;
    }
  }
  double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * geo;
}

double self_bleu(const std::vector<std::string>& texts, int max_n) {
  require(texts.size() >= 2, "self_bleu needs at least 2 texts, got " + std::to_string(texts.size()));
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(texts.size());
  for (const auto& t : texts) tokens.push_back(tokenize(t));

  std::vector<double> scores;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::vector<std::vector<std::string>> refs;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (j != i) refs.push_back(tokens[j]);
    }
    scores.push_back(sentence_bleu(tokens[i], refs, max_n));
  }
  // sorted so the sum does not depend on corpus order
  std::sort(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += s;
  return std::clamp(sum / static_cast<double>(scores.size()), 0.0, 1.0);
}

EmbedderHandle EmbedderHandle::hashing(std::size_t dim) {
  require(dim > 0, "embedding dimension must be positive");
  EmbedderHandle h;
  h.fn_ = [dim](const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      std::vector<double> v(dim, 0.0);
      for (const auto& tok : tokenize(t)) v[fnv1a64(tok) % dim] += 1.0;
      out.push_back(std::move(v));
    }
    return out;
  };
  return h;
}

EmbedderHandle EmbedderHandle::from_function(EmbedFn fn) {
  require(static_cast<bool>(fn), "embedder function is empty");
  EmbedderHandle h;
  h.fn_ = std::move(fn);
  return h;
}

EmbedderHandle EmbedderHandle::remote(std::string endpoint, Transport transport) {
  require(!endpoint.empty(), "embedder endpoint is empty");
  if (!transport) transport = default_transport();
  EmbedderHandle h;
  h.fn_ = [endpoint, transport](const std::vector<std::string>& texts) {
    HttpRequest req;
    req.url = endpoint;
    req.headers.emplace_back("Content-Type", "application/json");
    Json body;
    body["input"] = texts;
    req.body = body.dump();
    auto res = transport(req);
    if (res.status != 200) {
      fail(ErrorKind::kOracleTransport, "embedder " + endpoint + " returned status " +
                                            std::to_string(res.status) + " " + res.error);
    }
    std::vector<std::vector<double>> out;
    try {
      auto doc = Json::parse(res.body);
      for (const auto& item : doc.at("data")) {
        out.push_back(item.at("embedding").get<std::vector<double>>());
      }
    } catch (const Json::exception& e) {
      fail(ErrorKind::kOracleParse, std::string("embedder response: ") + e.what());
    }
    if (out.size() != texts.size()) {
      fail(ErrorKind::kOracleParse, "embedder returned " + std::to_string(out.size()) +
                                        " vectors for " + std::to_string(texts.size()) + " texts");
    }
    return out;
  };
  return h;
}

EmbedderHandle EmbedderHandle::from_env() {
  if (const char* url = std::getenv("REGEN_EMBED_URL"); url && *url) return remote(url);
  return hashing();
}

std::vector<std::vector<double>> EmbedderHandle::embed(const std::vector<std::string>& texts) const {
  return fn_(texts);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "embedding dimensions differ");
  if (a == b) {
    bool zero = std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; });
    return zero ? 0.0 : 1.0;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double embedding_diversity(const std::vector<std::string>& texts, const EmbedderHandle& embedder) {
  require(texts.size() >= 2,
          "embedding_diversity needs at least 2 texts, got " + std::to_string(texts.size()));
  auto vecs = embedder.embed(texts);
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = i + 1; j < vecs.size(); ++j) {
      sum += cosine(vecs[i], vecs[j]);
      ++pairs;
    }
  }
  double mean = std::clamp(sum / static_cast<double>(pairs), 0.0, 1.0);
  return 1.0 - mean;
}

std::string to_string(Metric metric) {
  return metric == Metric::kSelfBleu ? "self_bleu" : "embedding";
}

Metric parse_metric(const std::string& text) {
  if (text == "self_bleu" || text == "self-bleu") return Metric::kSelfBleu;
  if (text == "embedding") return Metric::kEmbedding;
  fail(ErrorKind::kPrecondition, "unknown metric '" + text + "' (self-bleu|embedding)");
}

DiversityReport sampled_diversity(const Corpus& corpus, Metric metric, const SampleOptions& options,
                                  const EmbedderHandle& embedder) {
  const auto n = corpus.texts.size();
  require(options.repeats >= 1, "repeats must be at least 1");
  require(options.sample_size >= 2, "sample_size must be at least 2");
  require(options.sample_size <= n, "sample_size " + std::to_string(options.sample_size) +
                                        " exceeds corpus size " + std::to_string(n));

  DiversityReport report;
  report.metric = metric;
  report.sample_size = options.sample_size;
  report.repeats = options.repeats;
  report.seed = options.seed;

  std::mt19937_64 rng(static_cast<std::uint64_t>(options.seed));
  std::vector<std::size_t> idx(n);
  for (std::size_t r = 0; r < options.repeats; ++r) {
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    // partial Fisher-Yates
    for (std::size_t i = 0; i < options.sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<std::size_t> chosen(idx.begin(), idx.begin() + options.sample_size);
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::string> sample;
    for (auto k : chosen) sample.push_back(corpus.texts[k]);
    double d = metric == Metric::kSelfBleu ? 1.0 - self_bleu(sample, options.max_n)
                                           : embedding_diversity(sample, embedder);
    report.scores.push_back(std::clamp(d, 0.0, 1.0));
  }

  const auto& s = report.scores;
  if (std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); })) {
    report.mean = s.front();
    report.std = 0.0;
    return report;
  }
  double sum = 0.0;
  for (double v : s) sum += v;
  report.mean = sum / static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) var += (v - report.mean) * (v - report.mean);
  report.std = std::sqrt(var / static_cast<double>(s.size()));
  return report;
}

Json report_to_json(const DiversityReport& report) {
  Json j;
  j["metric"] = to_string(report.metric);
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["sample_size"] = report.sample_size;
  j["repeats"] = report.repeats;
  j["seed"] = report.seed;
  j["scores"] = report.scores;
  return j;
}

}  // namespace regen
