#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "driftguard/types.hpp"

namespace driftguard {

inline constexpr std::size_t kEmbeddingDim = 384;

using EmbeddingVector = std::vector<double>;

// Provider contract. Implementations must be safe for concurrent embed calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingVector embed(const std::string& text) const = 0;
  virtual std::string id() const = 0;
};

// Hashed bag of tokens: lowercase, split on non-alphanumerics, FNV-1a bucket,
// integer counts, L2 normalization.
class HashingEmbedder final : public EmbeddingProvider {
 public:
  explicit HashingEmbedder(std::uint64_t seed = 0x5eedULL) : seed_(seed) {}
  EmbeddingVector embed(const std::string& text) const override;
  std::string id() const override;

 private:
  std::uint64_t seed_;
};

const EmbeddingProvider& default_embedder();

EmbeddingVector embed(const std::string& text);
std::vector<std::string> tokenize(const std::string& text);

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

struct NullDistribution {
  std::vector<double> samples;  // ascending
  double quantile(double q) const;
};

NullDistribution calibrate_null(const std::vector<std::string>& corpus, int n_pairs, std::uint64_t seed,
                                const EmbeddingProvider& provider = default_embedder());

std::vector<std::string> load_corpus(const std::string& path);
std::string default_null_corpus_path();

}  // namespace driftguard
