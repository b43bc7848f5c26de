#include "lyre/lyrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "lyre/error.hpp"

namespace lyre {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool is_plain_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

std::vector<bool> vowel_mask(const std::string& w) {
  std::vector<bool> mask(w.size(), false);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (is_plain_vowel(w[i])) {
      mask[i] = true;
    } else if (w[i] == 'y' && i > 0) {
      const bool before_vowel = i + 1 < w.size() && is_plain_vowel(w[i + 1]);
      mask[i] = !before_vowel;
    }
  }
  return mask;
}

struct Nucleus {
  std::size_t begin;
  std::size_t end;  // one past the last vowel
};

bool is_onset_digraph(char a, char b) {
  static constexpr std::array<std::array<char, 2>, 5> kDigraphs{
      {{'c', 'h'}, {'s', 'h'}, {'t', 'h'}, {'p', 'h'}, {'w', 'h'}}};
  return std::any_of(kDigraphs.begin(), kDigraphs.end(),
                     [&](const auto& d) { return d[0] == a && d[1] == b; });
}

}  // namespace

std::string normalize_word(std::string_view word) {
  std::string out;
  out.reserve(word.size());
  for (char c : word) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const auto first = out.find_first_not_of('\'');
  if (first == std::string::npos) return {};
  const auto last = out.find_last_not_of('\'');
  return out.substr(first, last - first + 1);
}

std::vector<std::string> syllabify(std::string_view word) {
  const std::string w = normalize_word(word);
  if (w.empty()) throw TokenizationError("cannot syllabify an empty word");
  for (char c : w)
    if (!is_letter(c) && c != '\'')
      throw TokenizationError("non-alphabetic word '" + std::string(word) + "'");

  const std::vector<bool> vowel = vowel_mask(w);
  std::vector<Nucleus> nuclei;
  for (std::size_t i = 0; i < w.size();) {
    if (!vowel[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < w.size() && vowel[j]) ++j;
    nuclei.push_back({i, j});
    i = j;
  }
  if (nuclei.size() <= 1) return {w};

  // Final lone 'e': either a consonant + "le" syllable or silent.
  bool consonant_le = false;
  const Nucleus& tail = nuclei.back();
  if (tail.begin == w.size() - 1 && w.back() == 'e') {
    const std::size_t n = w.size();
    consonant_le = n >= 3 && w[n - 2] == 'l' && !vowel[n - 3] && w[n - 3] != 'l';
    if (!consonant_le) nuclei.pop_back();
  }
  if (nuclei.size() <= 1) return {w};

  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t k = 0; k + 1 < nuclei.size(); ++k) {
    const std::size_t c0 = nuclei[k].end;
    const std::size_t c1 = nuclei[k + 1].begin;
    const std::size_t len = c1 - c0;
    std::size_t split;  // number of cluster letters kept by the current syllable
    const bool last_gap = k + 2 == nuclei.size();
    if (last_gap && consonant_le && len >= 2) {
      split = len - 2;
    } else if (len <= 1) {
      split = 0;
    } else if (w[c1 - 2] == 'c' && w[c1 - 1] == 'k') {
      split = len;
    } else if (is_onset_digraph(w[c1 - 2], w[c1 - 1])) {
      split = len - 2;
    } else {
      split = len - 1;
    }
    out.push_back(w.substr(start, c0 + split - start));
    start = c0 + split;
  }
  out.push_back(w.substr(start));
  return out;
}

LyricsSequence tokenize_lyrics(std::string_view text) {
  LyricsSequence seq;
  std::string current;
  auto flush = [&] {
    std::string w = normalize_word(current);
    current.clear();
    if (w.empty() || std::none_of(w.begin(), w.end(), is_letter)) return;
    const std::size_t index = seq.words.size();
    for (auto& s : syllabify(w)) {
      seq.syllables.push_back(std::move(s));
      seq.word_index_of_syllable.push_back(index);
    }
    seq.words.push_back(std::move(w));
  };
  for (char c : text) {
    if (is_letter(c) || c == '\'') {
      current.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  if (seq.words.empty())
    throw TokenizationError("lyrics contain no alphabetic words: '" + std::string(text) + "'");
  return seq;
}

}  // namespace lyre
