#pragma once

// Paired lyrics/melody corpus in JSON lines:
//   {"lyrics": "...", "notes": [{"pitch": 62, "duration": 1.0, "rest": 0.0}, ...]}
// with one note per syllable of the tokenized lyrics.

#include <string>
#include <string_view>
#include <vector>

#include "lyre/attributes.hpp"
#include "lyre/lyrics.hpp"

namespace lyre {

struct CorpusEntry {
  LyricsSequence lyrics;
  std::vector<AttributeIndices> melody;  ///< one per syllable
  std::size_t line = 0;                  ///< 1-based source line

  bool operator==(const CorpusEntry&) const = default;
};

struct Corpus {
  AttributeVocab vocab;
  std::vector<CorpusEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::vector<LyricsSequence> lyrics() const;
};

/// Blank lines are skipped. Throws CorpusError naming the line for parse
/// errors (with column), misalignment (expected vs actual counts) and values
/// outside the vocabulary, and CorpusError(0, "empty corpus") when no entry
/// remains.
Corpus parse_corpus(std::string_view text, const AttributeVocab& vocab = AttributeVocab::standard());
Corpus load_corpus(const std::string& path, const AttributeVocab& vocab = AttributeVocab::standard());

/// Bundled toy corpus, looked up under $LYRE_DATA_DIR, then the source tree.
std::string default_corpus_path();

}  // namespace lyre
