#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyre/binary_io.hpp"
#include "lyre/lyrics.hpp"
#include "lyre/tensor.hpp"

namespace lyre {

/// Token <-> dense id bijection. Id 0 is always the reserved unknown token.
class Vocab {
 public:
  static constexpr std::size_t kUnknownId = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocab();

  /// Sorted by descending count, then token, so ids are independent of
  /// corpus order.
  static Vocab from_counts(const std::unordered_map<std::string, std::uint64_t>& counts);

  std::optional<std::size_t> find(const std::string& token) const;
  std::size_t id_or_unknown(const std::string& token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::uint64_t count(std::size_t id) const { return counts_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }

  bool operator==(const Vocab& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_;
  }

 private:
  std::size_t push(std::string token, std::uint64_t count);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> ids_;
};

enum class EmbeddingLevel : std::uint8_t { syllable = 0, word = 1 };

std::string_view to_string(EmbeddingLevel level);

/// One learned vector per vocabulary id, shape [vocab.size(), dim].
struct EmbeddingTable {
  EmbeddingLevel level = EmbeddingLevel::syllable;
  std::size_t dim = 10;
  Vocab vocab;
  Tensor vectors;

  /// Vector for a token; the all-zero unknown vector when absent.
  std::span<const double> lookup(const std::string& token) const;
  std::span<const double> row(std::size_t id) const;

  bool operator==(const EmbeddingTable&) const = default;
};

struct SkipGramConfig {
  std::size_t dim = 10;
  std::size_t window = 2;
  std::size_t negatives = 5;
  std::size_t epochs = 40;
  double learning_rate = 0.025;
  double noise_power = 0.75;
  std::uint64_t seed = 1;
};

/// Skip-gram with negative sampling over the syllable or word streams.
/// If epoch_losses is given it receives the mean pair loss of each epoch.
EmbeddingTable train_skipgram(std::span<const LyricsSequence> corpus, EmbeddingLevel level,
                              const SkipGramConfig& config,
                              std::vector<double>* epoch_losses = nullptr);

/// Same, over raw token sentences.
EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              EmbeddingLevel level, const SkipGramConfig& config,
                              std::vector<double>* epoch_losses = nullptr);

/// Per-syllable condition vectors, shape [syllables, syl.dim + word.dim].
/// Row t is the syllable vector followed by the vector of its word.
struct LyricsEmbedding {
  Tensor vectors;

  std::size_t steps() const { return vectors.shape.at(0); }
  std::size_t width() const { return vectors.shape.at(1); }
};

LyricsEmbedding encode(const LyricsSequence& seq, const EmbeddingTable& syllables,
                       const EmbeddingTable& words);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// token,v1..vd rows at 6 decimals; header line "token,v1,...".
std::string embedding_csv(const EmbeddingTable& table);

void write_embedding(ByteWriter& out, const EmbeddingTable& table);
EmbeddingTable read_embedding(ByteReader& in);

/// Standalone blob holding a syllable and a word table.
std::vector<std::uint8_t> save_embeddings(const EmbeddingTable& syllables, const EmbeddingTable& words);
std::pair<EmbeddingTable, EmbeddingTable> load_embeddings(std::span<const std::uint8_t> bytes);

}  // namespace lyre
