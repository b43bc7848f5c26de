#include <gtest/gtest.h>

#include <numeric>

#include "lyre/embedding.hpp"
#include "lyre/error.hpp"
#include "lyre/lyrics.hpp"
#include "lyre/rng.hpp"

using namespace lyre;
using Strings = std::vector<std::string>;

TEST(Syllabify, MonosyllableIsUnsplit) { EXPECT_EQ(syllabify("sun"), Strings{"sun"}); }

TEST(Syllabify, DoubledConsonantSplits) { EXPECT_EQ(syllabify("happy"), (Strings{"hap", "py"})); }

TEST(Syllabify, ClusterGivesLastConsonantToNextSyllable) {
  EXPECT_EQ(syllabify("listen"), (Strings{"lis", "ten"}));
}

TEST(Syllabify, RuleCases) {
  EXPECT_EQ(syllabify("hello"), (Strings{"hel", "lo"}));
  EXPECT_EQ(syllabify("twinkle"), (Strings{"twin", "kle"}));
  EXPECT_EQ(syllabify("little"), (Strings{"lit", "tle"}));
  EXPECT_EQ(syllabify("apple"), (Strings{"ap", "ple"}));
  EXPECT_EQ(syllabify("time"), Strings{"time"});
  EXPECT_EQ(syllabify("the"), Strings{"the"});
  EXPECT_EQ(syllabify("mother"), (Strings{"mo", "ther"}));
  EXPECT_EQ(syllabify("pocket"), (Strings{"pock", "et"}));
  EXPECT_EQ(syllabify("beyond"), (Strings{"be", "yond"}));
  EXPECT_EQ(syllabify("day"), Strings{"day"});
  EXPECT_EQ(syllabify("don't"), Strings{"don't"});
  EXPECT_EQ(syllabify("rhythm"), Strings{"rhythm"});
  EXPECT_EQ(syllabify("Sunshine"), (Strings{"sun", "shine"}));
}

TEST(Syllabify, RejectsEmptyAndNonAlphabetic) {
  EXPECT_THROW(syllabify(""), TokenizationError);
  EXPECT_THROW(syllabify("'"), TokenizationError);
  EXPECT_THROW(syllabify("r2d2"), TokenizationError);
}

TEST(Syllabify, ConcatenationReproducesWord) {
  Rng rng(3);
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int n = 0; n < 2000; ++n) {
    std::string w;
    const auto len = 1 + rng.below(12);
    for (std::size_t i = 0; i < len; ++i) w.push_back(letters[rng.below(letters.size())]);
    const auto parts = syllabify(w);
    EXPECT_EQ(std::accumulate(parts.begin(), parts.end(), std::string()), w);
    for (const auto& p : parts) EXPECT_FALSE(p.empty()) << w;
  }
}

TEST(Tokenize, HelloWorld) {
  const LyricsSequence seq = tokenize_lyrics("Hello world");
  EXPECT_EQ(seq.words, (Strings{"hello", "world"}));
  EXPECT_EQ(seq.syllables, (Strings{"hel", "lo", "world"}));
  EXPECT_EQ(seq.word_index_of_syllable, (std::vector<std::size_t>{0, 0, 1}));
}

TEST(Tokenize, SingleLetter) {
  const LyricsSequence seq = tokenize_lyrics("a");
  EXPECT_EQ(seq.words, Strings{"a"});
  EXPECT_EQ(seq.syllables, Strings{"a"});
  EXPECT_EQ(seq.word_index_of_syllable, std::vector<std::size_t>{0});
}

TEST(Tokenize, PunctuationAndApostrophes) {
  const LyricsSequence seq = tokenize_lyrics("  'Don't' STOP, believin'!  ");
  EXPECT_EQ(seq.words, (Strings{"don't", "stop", "believin"}));
}

TEST(Tokenize, TwinkleHasSevenSyllables) {
  EXPECT_EQ(tokenize_lyrics("twinkle twinkle little star").size(), 7u);
}

TEST(Tokenize, RejectsTextWithoutWords) {
  EXPECT_THROW(tokenize_lyrics(""), TokenizationError);
  EXPECT_THROW(tokenize_lyrics("123 ... !!"), TokenizationError);
}

TEST(Vocab, ReservesUnknownAndOrdersByCount) {
  const Vocab v = Vocab::from_counts({{"b", 2}, {"a", 2}, {"c", 5}});
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(0), "<unk>");
  EXPECT_EQ(v.token(1), "c");
  EXPECT_EQ(v.token(2), "a");
  EXPECT_EQ(v.token(3), "b");
  EXPECT_EQ(v.id_or_unknown("zzz"), Vocab::kUnknownId);
}

namespace {

// Groups of four tokens that only ever appear with each other.
std::vector<std::vector<std::string>> grouped_corpus(std::size_t groups, Rng& rng) {
  std::vector<std::vector<std::string>> out;
  for (int rep = 0; rep < 60; ++rep)
    for (std::size_t g = 0; g < groups; ++g) {
      std::vector<std::string> s;
      for (int i = 0; i < 6; ++i) s.push_back("g" + std::to_string(g) + "t" + std::to_string(rng.below(4)));
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace

TEST(SkipGram, DefaultDimensionIsTen) {
  Rng rng(1);
  const EmbeddingTable t = train_skipgram(grouped_corpus(3, rng), EmbeddingLevel::syllable, {});
  EXPECT_EQ(t.dim, 10u);
  EXPECT_EQ(t.vectors.shape, (Shape{t.vocab.size(), 10}));
  EXPECT_TRUE(t.vectors.all_finite());
}

TEST(SkipGram, CoOccurringTokensEndUpCloser) {
  Rng rng(2);
  const EmbeddingTable t = train_skipgram(grouped_corpus(4, rng), EmbeddingLevel::word, {});
  const double same = cosine_similarity(t.lookup("g0t0"), t.lookup("g0t1"));
  const double other = cosine_similarity(t.lookup("g0t0"), t.lookup("g2t1"));
  EXPECT_GT(same - other, 0.3);
}

TEST(SkipGram, LossDecreases) {
  Rng rng(4);
  std::vector<double> losses;
  train_skipgram(grouped_corpus(4, rng), EmbeddingLevel::word, {}, &losses);
  ASSERT_EQ(losses.size(), SkipGramConfig{}.epochs);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(SkipGram, SingleTokenCorpusCompletes) {
  SkipGramConfig cfg;
  cfg.negatives = 1;
  const EmbeddingTable t = train_skipgram({{"la"}}, EmbeddingLevel::syllable, cfg);
  ASSERT_EQ(t.vocab.size(), 2u);  // <unk> + "la"
  for (double v : t.lookup("la")) EXPECT_TRUE(std::isfinite(v));
}

TEST(SkipGram, VocabularySmallerThanNegativesIsConfigError) {
  EXPECT_THROW(train_skipgram({{"la", "di", "da"}}, EmbeddingLevel::syllable, {}), ConfigError);
}

TEST(SkipGram, DeterministicGivenSeed) {
  Rng a(9), b(9);
  EXPECT_EQ(train_skipgram(grouped_corpus(3, a), EmbeddingLevel::word, {}),
            train_skipgram(grouped_corpus(3, b), EmbeddingLevel::word, {}));
}

namespace {

std::pair<EmbeddingTable, EmbeddingTable> tables_for(const std::vector<LyricsSequence>& corpus) {
  SkipGramConfig cfg;
  cfg.negatives = 2;
  cfg.epochs = 5;
  return {train_skipgram(corpus, EmbeddingLevel::syllable, cfg),
          train_skipgram(corpus, EmbeddingLevel::word, cfg)};
}

}  // namespace

TEST(Encode, OneTwentyWideVectorPerSyllable) {
  const std::vector<LyricsSequence> corpus{tokenize_lyrics("happy little sun"),
                                           tokenize_lyrics("sunny days are here")};
  auto [syl, word] = tables_for(corpus);
  const LyricsSequence seq = tokenize_lyrics("happy sun");
  const LyricsEmbedding x = encode(seq, syl, word);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(x.vectors.shape, (Shape{3, 20}));
  // "hap" and "py" share the word half.
  for (std::size_t d = 10; d < 20; ++d) EXPECT_EQ(x.vectors.at(0, d), x.vectors.at(1, d));
  for (std::size_t d = 0; d < 10; ++d) {
    EXPECT_EQ(x.vectors.at(0, d), syl.lookup("hap")[d]);
    EXPECT_EQ(x.vectors.at(2, d + 10), word.lookup("sun")[d]);
  }
}

TEST(Encode, OutOfVocabularyUsesZeroVector) {
  auto [syl, word] = tables_for({tokenize_lyrics("happy little sun"), tokenize_lyrics("one two three")});
  const LyricsEmbedding x = encode(tokenize_lyrics("zebra"), syl, word);
  for (double v : x.vectors.values) EXPECT_EQ(v, 0.0);
}

TEST(EmbeddingBlob, RoundTripsAndDetectsCorruption) {
  auto [syl, word] = tables_for({tokenize_lyrics("happy little sun"), tokenize_lyrics("one two three")});
  auto bytes = save_embeddings(syl, word);
  auto [s2, w2] = load_embeddings(bytes);
  EXPECT_EQ(s2, syl);
  EXPECT_EQ(w2, word);
  bytes[bytes.size() / 2] ^= 0x40;
  try {
    load_embeddings(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.fault(), FormatError::Fault::checksum);
  }
}

TEST(EmbeddingCsv, HeaderAndRowPerToken) {
  auto [syl, word] = tables_for({tokenize_lyrics("happy little sun"), tokenize_lyrics("one two three")});
  const std::string csv = embedding_csv(syl);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "token,v1,v2,v3,v4,v5,v6,v7,v8,v9,v10");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), syl.vocab.size() + 1);
  EXPECT_NE(csv.find("\n<unk>,0.000000,"), std::string::npos);
}
