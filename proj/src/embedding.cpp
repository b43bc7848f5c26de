#include "lyre/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lyre/error.hpp"
#include "lyre/rng.hpp"

namespace lyre {

namespace {

constexpr std::string_view kEmbeddingMagic = "LYREEMBD";
constexpr std::uint32_t kEmbeddingVersion = 1;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// -log(sigmoid(x)) without overflow.
double neg_log_sigmoid(double x) { return std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

Vocab::Vocab() { push(std::string(kUnknownToken), 0); }

std::size_t Vocab::push(std::string token, std::uint64_t count) {
  const std::size_t id = tokens_.size();
  ids_.emplace(token, id);
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
  return id;
}

Vocab Vocab::from_counts(const std::unordered_map<std::string, std::uint64_t>& counts) {
  std::vector<std::pair<std::string, std::uint64_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  Vocab v;
  for (auto& [token, count] : sorted) {
    if (token == kUnknownToken) continue;
    v.push(token, count);
  }
  return v;
}

std::optional<std::size_t> Vocab::find(const std::string& token) const {
  if (auto it = ids_.find(token); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::size_t Vocab::id_or_unknown(const std::string& token) const {
  return find(token).value_or(kUnknownId);
}

std::string_view to_string(EmbeddingLevel level) {
  return level == EmbeddingLevel::syllable ? "syllable" : "word";
}

std::span<const double> EmbeddingTable::row(std::size_t id) const {
  if (id >= vocab.size()) throw LookupError("embedding id " + std::to_string(id) + " out of range");
  return std::span<const double>(vectors.values).subspan(id * dim, dim);
}

std::span<const double> EmbeddingTable::lookup(const std::string& token) const {
  return row(vocab.id_or_unknown(token));
}

EmbeddingTable train_skipgram(std::span<const LyricsSequence> corpus, EmbeddingLevel level,
                              const SkipGramConfig& config, std::vector<double>* epoch_losses) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& seq : corpus)
    sentences.push_back(level == EmbeddingLevel::syllable ? seq.syllables : seq.words);
  return train_skipgram(sentences, level, config, epoch_losses);
}

EmbeddingTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                              EmbeddingLevel level, const SkipGramConfig& config,
                              std::vector<double>* epoch_losses) {
  if (sentences.empty()) throw ConfigError("skip-gram corpus is empty");
  if (config.window < 1) throw ConfigError("skip-gram window must be at least 1");
  if (config.dim < 1) throw ConfigError("embedding dimension must be at least 1");
  if (!(config.learning_rate > 0)) throw ConfigError("skip-gram learning rate must be positive");

  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences)
    for (const auto& t : s) ++counts[t];
  Vocab vocab = Vocab::from_counts(counts);
  const std::size_t real_tokens = vocab.size() - 1;
  if (real_tokens == 0) throw ConfigError("skip-gram corpus has no tokens");
  if (real_tokens < config.negatives)
    throw ConfigError("vocabulary of " + std::to_string(real_tokens) +
                      " tokens is smaller than the negative-sample count " +
                      std::to_string(config.negatives));

  std::vector<std::vector<std::size_t>> ids;
  for (const auto& s : sentences) {
    std::vector<std::size_t> row;
    for (const auto& t : s) row.push_back(vocab.id_or_unknown(t));
    ids.push_back(std::move(row));
  }

  // Noise distribution over real tokens, unigram counts raised to noise_power.
  std::vector<double> cumulative(vocab.size(), 0.0);
  for (std::size_t i = 1; i < vocab.size(); ++i)
    cumulative[i] = cumulative[i - 1] + std::pow(static_cast<double>(vocab.count(i)), config.noise_power);
  const double noise_total = cumulative.back();

  Rng rng(config.seed);
  const std::size_t dim = config.dim;
  Tensor input({vocab.size(), dim}, 0.0);
  std::vector<double> output(vocab.size() * dim, 0.0);
  for (std::size_t i = dim; i < input.values.size(); ++i)
    input.values[i] = (rng.uniform() - 0.5) / static_cast<double>(dim);

  std::size_t pairs_per_epoch = 0;
  for (const auto& s : ids)
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i >= config.window ? i - config.window : 0;
           j < std::min(s.size(), i + config.window + 1); ++j)
        if (j != i) ++pairs_per_epoch;
  const double total_pairs = static_cast<double>(std::max<std::size_t>(1, pairs_per_epoch * config.epochs));

  std::vector<double> grad_in(dim);
  std::vector<std::size_t> targets(config.negatives + 1);
  std::size_t seen = 0;
  if (epoch_losses) epoch_losses->clear();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss = 0.0;
    for (const auto& s : ids) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t lo = i >= config.window ? i - config.window : 0;
        const std::size_t hi = std::min(s.size(), i + config.window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
          if (j == i) continue;
          const double lr =
              config.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(seen++) / total_pairs);
          const std::size_t center = s[i];
          targets[0] = s[j];
          for (std::size_t k = 1; k <= config.negatives; ++k) {
            const double u = rng.uniform() * noise_total;
            targets[k] = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin() + 1, cumulative.end(), u) - cumulative.begin());
            targets[k] = std::min(targets[k], vocab.size() - 1);
          }
          double* in = &input.values[center * dim];
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (std::size_t k = 0; k < targets.size(); ++k) {
            if (k > 0 && targets[k] == targets[0]) continue;
            const double label = k == 0 ? 1.0 : 0.0;
            double* out = &output[targets[k] * dim];
            const double dot = std::inner_product(in, in + dim, out, 0.0);
            loss += k == 0 ? neg_log_sigmoid(dot) : neg_log_sigmoid(-dot);
            const double g = lr * (label - sigmoid(dot));
            for (std::size_t d = 0; d < dim; ++d) {
              grad_in[d] += g * out[d];
              out[d] += g * in[d];
            }
          }
          for (std::size_t d = 0; d < dim; ++d) in[d] += grad_in[d];
        }
      }
    }
    if (epoch_losses)
      epoch_losses->push_back(pairs_per_epoch ? loss / static_cast<double>(pairs_per_epoch) : 0.0);
  }

  // The unknown row never trains; keep it exactly zero.
  std::fill_n(input.values.begin(), dim, 0.0);
  return EmbeddingTable{level, dim, std::move(vocab), std::move(input)};
}

LyricsEmbedding encode(const LyricsSequence& seq, const EmbeddingTable& syllables,
                       const EmbeddingTable& words) {
  if (seq.size() == 0) return {Tensor()};
  const std::size_t width = syllables.dim + words.dim;
  Tensor out({seq.size(), width}, 0.0);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    auto s = syllables.lookup(seq.syllables[t]);
    auto w = words.lookup(seq.words.at(seq.word_index_of_syllable[t]));
    std::copy(s.begin(), s.end(), &out.values[t * width]);
    std::copy(w.begin(), w.end(), &out.values[t * width + syllables.dim]);
  }
  return {std::move(out)};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine of vectors with different lengths");
  const double dot = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
  const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
  const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

std::string embedding_csv(const EmbeddingTable& table) {
  std::string out = "token";
  for (std::size_t d = 1; d <= table.dim; ++d) out += ",v" + std::to_string(d);
  out += "\n";
  char buf[32];
  for (std::size_t id = 0; id < table.vocab.size(); ++id) {
    out += table.vocab.token(id);
    for (double v : table.row(id)) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

void write_embedding(ByteWriter& out, const EmbeddingTable& table) {
  out.u8(static_cast<std::uint8_t>(table.level));
  out.u64(table.dim);
  out.u64(table.vocab.size());
  for (std::size_t id = 1; id < table.vocab.size(); ++id) {
    out.str(table.vocab.token(id));
    out.u64(table.vocab.count(id));
  }
  out.tensor(table.vectors);
}

EmbeddingTable read_embedding(ByteReader& in) {
  EmbeddingTable t;
  const std::uint8_t level = in.u8();
  if (level > 1) throw FormatError("unknown embedding level " + std::to_string(level));
  t.level = static_cast<EmbeddingLevel>(level);
  t.dim = in.u64();
  const std::uint64_t size = in.u64();
  if (size == 0 || size > in.remaining()) throw FormatError("implausible vocabulary size");
  std::unordered_map<std::string, std::uint64_t> counts;
  std::vector<std::string> order;
  for (std::uint64_t i = 1; i < size; ++i) {
    std::string token = in.str();
    counts[token] = in.u64();
    order.push_back(std::move(token));
  }
  t.vocab = Vocab::from_counts(counts);
  for (std::size_t i = 0; i < order.size(); ++i)
    if (t.vocab.token(i + 1) != order[i]) throw FormatError("vocabulary order is not canonical");
  t.vectors = in.tensor();
  if (t.vectors.shape != Shape{t.vocab.size(), t.dim})
    throw FormatError("embedding matrix shape " + shape_string(t.vectors.shape) +
                      " does not match vocabulary");
  return t;
}

std::vector<std::uint8_t> save_embeddings(const EmbeddingTable& syllables, const EmbeddingTable& words) {
  ByteWriter w;
  write_embedding(w, syllables);
  write_embedding(w, words);
  return seal_container(kEmbeddingMagic, kEmbeddingVersion, w.bytes());
}

std::pair<EmbeddingTable, EmbeddingTable> load_embeddings(std::span<const std::uint8_t> bytes) {
  const auto opened = open_container(bytes, kEmbeddingMagic, kEmbeddingVersion);
  ByteReader r(opened.payload);
  EmbeddingTable syl = read_embedding(r);
  EmbeddingTable word = read_embedding(r);
  if (r.remaining() != 0) throw FormatError("trailing bytes in embedding payload");
  return {std::move(syl), std::move(word)};
}

}  // namespace lyre
