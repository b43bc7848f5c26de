#pragma once

// Inference facade: greedy generation with per-step candidate lists,
// recomposition by local substitution and the bounded session store.

#include <array>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lyre/score.hpp"
#include "lyre/trainer.hpp"

namespace lyre {

inline constexpr std::size_t kDefaultCandidates = 5;

struct Candidate {
  double value = 0.0;
  double probability = 0.0;

  bool operator==(const Candidate&) const = default;
};

/// Candidate lists for one step, indexed by Attribute.
using StepCandidates = std::array<std::vector<Candidate>, 3>;

/// The k most probable values, descending, ties by ascending value.
/// Throws ContractError unless 1 <= k <= |values| == |probs|.
std::vector<Candidate> top_k(std::span<const double> probs, std::span<const double> values, std::size_t k);

struct GenerationResult {
  Score score;
  std::vector<StepCandidates> candidates;  ///< one per step
  std::size_t k = kDefaultCandidates;
  std::string model;  ///< checkpoint fingerprint

  std::uint64_t seed() const { return score.seed; }
  bool operator==(const GenerationResult&) const = default;
};

/// Canonical JSON: {"candidates": [...], "k", "model", "score": {...}}.
/// Each step's candidates are {"pitch": [{"probability","value"}], ...}.
std::string result_to_json(const GenerationResult& result);

/// Immutable inference model shared across requests.
struct Model {
  Checkpoint checkpoint;
  std::string fingerprint;

  static Model from_checkpoint(Checkpoint ckpt);
  /// Fingerprint of the file bytes, which equals that of the re-serialized checkpoint.
  static Model load(const std::string& path);
};

/// Tokenizes, encodes, runs the generator with noise drawn from `seed` and
/// decodes each head by argmax (lowest index on ties). Candidate lists hold
/// min(k, |vocab|) entries. The score id is left empty for the caller.
/// Throws TokenizationError for lyrics without syllables and ContractError
/// for k == 0.
GenerationResult generate(const Model& model, std::string_view lyrics, std::uint64_t seed,
                          std::size_t k = kDefaultCandidates);

/// Copy of `parent` with the overrides applied to the chosen values.
/// Candidate lists and other steps are unchanged. Overrides are merged with
/// the parent's by (step, attribute), later ones winning, and kept sorted.
/// Throws ContractError naming the override for a step out of range or a
/// value outside the attribute's vocabulary. The id is left empty.
GenerationResult recompose(const GenerationResult& parent, std::span<const Override> overrides,
                           const AttributeVocab& vocab);

/// Bounded LRU of generation results. Thread-safe.
class SessionStore {
 public:
  static constexpr std::size_t kDefaultCapacity = 256;

  explicit SessionStore(std::size_t capacity = kDefaultCapacity);

  /// Assigns a fresh id (written into the stored score) and returns it.
  std::string put(GenerationResult result);
  /// Marks the entry as recently used. Throws NotFoundError for unknown or
  /// evicted ids.
  std::shared_ptr<const GenerationResult> get(const std::string& id);
  bool contains(const std::string& id) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Entry = std::pair<std::string, std::shared_ptr<const GenerationResult>>;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;  ///< most recent first
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 suffix_rng_;
};

/// Generation plus storage, the layer behind the HTTP routes.
class RecommendService {
 public:
  explicit RecommendService(Model model, std::size_t capacity = SessionStore::kDefaultCapacity);

  const Model& model() const { return model_; }
  std::shared_ptr<const GenerationResult> generate(std::string_view lyrics, std::uint64_t seed, std::size_t k);
  /// Throws NotFoundError for an unknown parent and ContractError for an
  /// invalid override.
  std::shared_ptr<const GenerationResult> recompose(const std::string& parent_id,
                                                    std::span<const Override> overrides);
  std::shared_ptr<const GenerationResult> get(const std::string& id);

 private:
  Model model_;
  SessionStore store_;
};

}  // namespace lyre
