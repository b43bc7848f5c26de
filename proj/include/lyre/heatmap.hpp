#pragma once

// Syllable similarity heatmaps over raw embeddings or interpretable vectors.

#include <string>
#include <string_view>
#include <vector>

#include "lyre/corpus.hpp"
#include "lyre/mutual_info.hpp"
#include "lyre/trainer.hpp"

namespace lyre {

enum class HeatmapSource { embedding, interpretable };

/// "embedding" or "interpretable"; ContractError otherwise.
HeatmapSource parse_heatmap_source(std::string_view name);

struct ProbeOptions {
  std::size_t noise_draws = 8;  ///< generator runs averaged per sentence
  std::uint64_t seed = 11;
};

/// M(x) per step of one sentence, averaged over seeded noise draws. [T, width]
Tensor mean_interpretable(const Checkpoint& ckpt, const LyricsSequence& seq, const ProbeOptions& opt = {});

/// Cosine similarities between syllables. "embedding" uses the syllable
/// table rows; "interpretable" averages M(x) over every occurrence of the
/// syllable in the probe sentences. Throws LookupError listing unknown
/// syllables (and, for "interpretable", syllables absent from the probe).
SimilarityMatrix syllable_heatmap(const Checkpoint& ckpt, const std::vector<std::string>& syllables,
                                  HeatmapSource source, const std::vector<LyricsSequence>& probe = {},
                                  const ProbeOptions& opt = {});

/// Mean cosine between the M-vectors of one syllable at occurrences in two
/// different sentences, over every syllable shared by at least two
/// sentences (first occurrence per sentence, consecutive sentence pairs).
/// Vectors are centred on the mean M-vector of the whole probe first, so an
/// offset shared by every step does not count as similarity.
/// Returns 0 when no syllable repeats across sentences.
double repeated_syllable_similarity(const Checkpoint& ckpt, const std::vector<LyricsSequence>& probe,
                                    const ProbeOptions& opt = {});

}  // namespace lyre
