#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace lyre {

/// Syllable and word streams of one lyric text, aligned syllable by syllable.
struct LyricsSequence {
  std::vector<std::string> syllables;
  /// word_index_of_syllable[i] is the position in `words` of syllable i.
  std::vector<std::size_t> word_index_of_syllable;
  std::vector<std::string> words;

  std::size_t size() const noexcept { return syllables.size(); }
  bool operator==(const LyricsSequence&) const = default;
};

/// Lowercases and trims apostrophes at the edges. Letters and inner
/// apostrophes are the only characters that survive.
std::string normalize_word(std::string_view word);

/// Rule-based split of one word into syllables.
///
/// Nuclei are maximal vowel runs (`y` counts as a vowel except word-initially
/// or before another vowel). A final silent `e` is folded into the previous
/// syllable unless it closes a consonant + "le" ending. Between nuclei, a
/// single consonant opens the next syllable, clusters give their last
/// consonant (or onset digraph) to the next syllable and "ck" stays behind.
///
/// Throws TokenizationError on empty or non-alphabetic input.
std::vector<std::string> syllabify(std::string_view word);

/// Splits on whitespace and punctuation, lowercases, syllabifies.
/// Throws TokenizationError when no alphabetic word is present.
LyricsSequence tokenize_lyrics(std::string_view text);

}  // namespace lyre
