#include "driftguard/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace driftguard {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
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

EmbeddingVector HashingEmbedder::embed(const std::string& text) const {
  std::vector<std::int64_t> counts(kEmbeddingDim, 0);
  bool any = false;
  for (auto& tok : tokenize(text)) {
    std::uint64_t h = fnv1a(tok) ^ seed_;
    h *= 0x9e3779b97f4a7c15ULL;
    ++counts[(h >> 32) % kEmbeddingDim];
    any = true;
  }
  EmbeddingVector v(kEmbeddingDim, 0.0);
  if (!any) return v;
  std::int64_t sq = 0;
  for (auto c : counts) sq += c * c;
  double norm = std::sqrt(static_cast<double>(sq));
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) v[i] = static_cast<double>(counts[i]) / norm;
  return v;
}

std::string HashingEmbedder::id() const { return "hashing-bow-384/seed=" + std::to_string(seed_); }

const EmbeddingProvider& default_embedder() {
  static const HashingEmbedder e;
  return e;
}

EmbeddingVector embed(const std::string& text) { return default_embedder().embed(text); }

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.size() != v.size())
    throw DimensionError("cosine of vectors with sizes " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0 || nv == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

double NullDistribution::quantile(double q) const {
  if (samples.empty()) throw NoData("empty null distribution");
  q = std::clamp(q, 0.0, 1.0);
  double pos = q * static_cast<double>(samples.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, samples.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[hi] - samples[lo]);
}

NullDistribution calibrate_null(const std::vector<std::string>& corpus, int n_pairs, std::uint64_t seed,
                                const EmbeddingProvider& provider) {
  if (corpus.size() < 2) throw InsufficientCorpus("null calibration needs at least 2 phrases");
  if (n_pairs < 1) throw InsufficientCorpus("n_pairs must be at least 1");
  std::vector<EmbeddingVector> vecs;
  vecs.reserve(corpus.size());
  for (auto& s : corpus) vecs.push_back(provider.embed(s));
  Rng rng(seed);
  NullDistribution nd;
  nd.samples.reserve(n_pairs);
  for (int k = 0; k < n_pairs; ++k) {
    std::size_t i = rng.below(corpus.size());
    std::size_t j = rng.below(corpus.size() - 1);
    if (j >= i) ++j;
    nd.samples.push_back(cosine(vecs[i], vecs[j]));
  }
  std::sort(nd.samples.begin(), nd.samples.end());
  return nd;
}

std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open corpus: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!tokenize(line).empty()) out.push_back(line);
  return out;
}

std::string default_null_corpus_path() { return std::string(DRIFTGUARD_DATA_DIR) + "/null_corpus.txt"; }

}  // namespace driftguard
