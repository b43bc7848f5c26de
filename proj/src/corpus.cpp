#include "lyre/corpus.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lyre/error.hpp"

namespace lyre {

namespace {

using nlohmann::json;

std::string format_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

double number_field(const json& note, const char* key, std::size_t line, std::size_t step) {
  const auto it = note.find(key);
  if (it == note.end() || !it->is_number())
    throw CorpusError(line, "note " + std::to_string(step) + " needs a numeric \"" + key + "\"");
  return it->get<double>();
}

CorpusEntry parse_entry(const std::string& text, std::size_t line, const AttributeVocab& vocab) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // One document per line, so the byte offset is the column.
    throw CorpusError(line, "parse error at column " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw CorpusError(line, "expected a JSON object");
  const auto lyrics = doc.find("lyrics");
  const auto notes = doc.find("notes");
  if (lyrics == doc.end() || !lyrics->is_string())
    throw CorpusError(line, "missing string field \"lyrics\"");
  if (notes == doc.end() || !notes->is_array())
    throw CorpusError(line, "missing array field \"notes\"");

  CorpusEntry entry;
  entry.line = line;
  try {
    entry.lyrics = tokenize_lyrics(lyrics->get<std::string>());
  } catch (const TokenizationError& e) {
    throw CorpusError(line, e.what());
  }
  if (notes->size() != entry.lyrics.size())
    throw CorpusError(line, "alignment error: expected " + std::to_string(entry.lyrics.size()) +
                                " notes (one per syllable), found " + std::to_string(notes->size()));

  for (std::size_t t = 0; t < notes->size(); ++t) {
    const json& note = (*notes)[t];
    if (!note.is_object()) throw CorpusError(line, "note " + std::to_string(t) + " is not an object");
    AttributeIndices idx;
    for (Attribute a : kAttributes) {
      const char* key = a == Attribute::pitch ? "pitch" : a == Attribute::duration ? "duration" : "rest";
      const double v = number_field(note, key, line, t);
      const auto found = vocab.index_of(a, v);
      if (!found)
        throw CorpusError(line, "unknown " + std::string(to_string(a)) + " value " + format_value(v) +
                                    " at note " + std::to_string(t));
      idx[a] = *found;
    }
    entry.melody.push_back(idx);
  }
  return entry;
}

}  // namespace

std::vector<LyricsSequence> Corpus::lyrics() const {
  std::vector<LyricsSequence> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.lyrics);
  return out;
}

Corpus parse_corpus(std::string_view text, const AttributeVocab& vocab) {
  vocab.validate();
  Corpus corpus{vocab, {}};
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t end = std::min(text.find('\n', begin), text.size());
    std::string line(text.substr(begin, end - begin));
    ++line_no;
    begin = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    corpus.entries.push_back(parse_entry(line, line_no, vocab));
  }
  if (corpus.entries.empty()) throw CorpusError(0, "empty corpus");
  return corpus;
}

Corpus load_corpus(const std::string& path, const AttributeVocab& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), vocab);
}

std::string default_corpus_path() {
  namespace fs = std::filesystem;
  if (const char* dir = std::getenv("LYRE_DATA_DIR")) {
    const fs::path p = fs::path(dir) / "toy_corpus.jsonl";
    if (fs::exists(p)) return p.string();
  }
  return (fs::path(LYRE_SOURCE_DATA_DIR) / "toy_corpus.jsonl").string();
}

}  // namespace lyre
