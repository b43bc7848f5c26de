#include "lyre/score.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "lyre/error.hpp"

namespace lyre {

namespace {

using nlohmann::json;

constexpr std::uint8_t kMetaText = 0x01;
constexpr std::uint8_t kMetaTrackName = 0x03;
constexpr std::uint8_t kMetaLyric = 0x05;
constexpr std::uint8_t kMetaEndOfTrack = 0x2F;
constexpr std::uint8_t kMetaTempo = 0x51;

bool is_quarter_multiple(double v) {
  const double q = v * 4.0;
  return std::isfinite(q) && q == std::floor(q) && q <= 1e9;
}

std::string step_label(std::size_t step) { return "step " + std::to_string(step); }

json overrides_json(const std::vector<Override>& overrides) {
  json out = json::array();
  for (const auto& o : overrides)
    out.push_back({{"step", o.step}, {"attribute", std::string(to_string(o.attribute))}, {"value", o.value}});
  return out;
}

std::vector<Override> overrides_from_json(const json& j) {
  std::vector<Override> out;
  for (const auto& o : j.at("overrides"))
    out.push_back({o.at("step").get<std::size_t>(), parse_attribute(o.at("attribute").get<std::string>()),
                   o.at("value").get<double>()});
  return out;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_meta(std::vector<std::uint8_t>& track, std::uint32_t delta, std::uint8_t type,
              std::span<const std::uint8_t> payload) {
  write_vlq(track, delta);
  track.push_back(0xFF);
  track.push_back(type);
  write_vlq(track, static_cast<std::uint32_t>(payload.size()));
  track.insert(track.end(), payload.begin(), payload.end());
}

void put_meta(std::vector<std::uint8_t>& track, std::uint32_t delta, std::uint8_t type, std::string_view text) {
  put_meta(track, delta, type,
           std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint32_t tempo_microseconds(int bpm) {
  return static_cast<std::uint32_t>(std::llround(60'000'000.0 / bpm));
}

/// Bounds-checked reader over the file bytes.
struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (bytes.size() - pos < n)
      throw MidiError(std::string("truncated file: ") + what + " at byte " + std::to_string(pos),
                      MidiError::Fault::truncated);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] << 8 | bytes[pos + 1]);
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = v << 8 | bytes[pos + i];
    pos += 4;
    return v;
  }
};

std::string text_of(const MidiEvent& e) { return std::string(e.data.begin(), e.data.end()); }

}  // namespace

void Score::validate() const {
  if (syllables.empty()) throw ContractError("score has no syllables");
  if (notes.size() != syllables.size())
    throw ContractError("score has " + std::to_string(notes.size()) + " notes for " +
                        std::to_string(syllables.size()) + " syllables");
  if (tempo_bpm < 4 || tempo_bpm > 1000)
    throw ContractError("tempo_bpm must be in 4..1000, got " + std::to_string(tempo_bpm));
  for (std::size_t t = 0; t < notes.size(); ++t) {
    const Note& n = notes[t];
    if (n.pitch < 0 || n.pitch > 127)
      throw ContractError(step_label(t) + ": pitch " + std::to_string(n.pitch) + " outside 0..127");
    if (!(n.duration > 0.0) || !is_quarter_multiple(n.duration))
      throw ContractError(step_label(t) + ": duration must be a positive multiple of 1/4");
    if (!(n.rest_before >= 0.0) || !is_quarter_multiple(n.rest_before))
      throw ContractError(step_label(t) + ": rest must be a non-negative multiple of 1/4");
  }
  for (const auto& o : overrides)
    if (o.step >= notes.size())
      throw ContractError("override at " + step_label(o.step) + " is past the last step");
}

std::vector<Note> decode_attributes(std::span<const AttributeIndices> indices, const AttributeVocab& vocab) {
  std::vector<Note> notes;
  notes.reserve(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    Note n;
    for (Attribute a : kAttributes) {
      const std::size_t i = indices[t][a];
      if (i >= vocab.size(a))
        throw ContractError(step_label(t) + ": " + std::string(to_string(a)) + " index " + std::to_string(i) +
                            " out of range for " + std::to_string(vocab.size(a)) + " values");
      set_attribute(n, a, vocab.values(a)[i]);
    }
    notes.push_back(n);
  }
  return notes;
}

double attribute_value(const Note& note, Attribute a) {
  switch (a) {
    case Attribute::pitch: return note.pitch;
    case Attribute::duration: return note.duration;
    case Attribute::rest: return note.rest_before;
  }
  return 0.0;
}

void set_attribute(Note& note, Attribute a, double value) {
  switch (a) {
    case Attribute::pitch: note.pitch = static_cast<int>(std::lround(value)); break;
    case Attribute::duration: note.duration = value; break;
    case Attribute::rest: note.rest_before = value; break;
  }
}

std::uint64_t to_ticks(double quarters) {
  if (!(quarters >= 0.0) || !is_quarter_multiple(quarters))
    throw ContractError("tick conversion needs a non-negative multiple of 1/4, got " + std::to_string(quarters));
  return static_cast<std::uint64_t>(std::llround(quarters * 4.0)) * (kTicksPerQuarter / 4);
}

void write_vlq(std::vector<std::uint8_t>& out, std::uint32_t value) {
  if (value > 0x0FFFFFFF) throw ContractError("variable-length quantity above 0x0FFFFFFF");
  std::uint8_t groups[4];
  int n = 0;
  do {
    groups[n++] = value & 0x7F;
    value >>= 7;
  } while (value != 0);
  while (n-- > 1) out.push_back(groups[n] | 0x80);
  out.push_back(groups[0]);
}

std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  std::uint32_t value = 0;
  for (int i = 0; i < 4; ++i) {
    if (pos >= bytes.size())
      throw MidiError("truncated variable-length quantity at byte " + std::to_string(pos),
                      MidiError::Fault::truncated);
    const std::uint8_t b = bytes[pos++];
    value = value << 7 | (b & 0x7F);
    if ((b & 0x80) == 0) return value;
  }
  throw MidiError("variable-length quantity longer than four bytes ending at byte " + std::to_string(pos),
                  MidiError::Fault::overlong_vlq);
}

std::vector<std::uint8_t> write_midi(const Score& score) {
  score.validate();
  std::vector<std::uint8_t> track;
  put_meta(track, 0, kMetaTrackName, score.id);
  put_meta(track, 0, kMetaText, json{{"seed", score.seed}, {"overrides", overrides_json(score.overrides)}}.dump());
  const std::uint32_t us = tempo_microseconds(score.tempo_bpm);
  const std::uint8_t tempo[3] = {static_cast<std::uint8_t>(us >> 16), static_cast<std::uint8_t>(us >> 8),
                                 static_cast<std::uint8_t>(us)};
  put_meta(track, 0, kMetaTempo, tempo);
  for (std::size_t t = 0; t < score.notes.size(); ++t) {
    const Note& n = score.notes[t];
    const auto pitch = static_cast<std::uint8_t>(n.pitch);
    put_meta(track, static_cast<std::uint32_t>(to_ticks(n.rest_before)), kMetaLyric, score.syllables[t]);
    write_vlq(track, 0);
    track.insert(track.end(), {0x90, pitch, kNoteVelocity});
    write_vlq(track, static_cast<std::uint32_t>(to_ticks(n.duration)));
    track.insert(track.end(), {0x80, pitch, 0});
  }
  put_meta(track, 0, kMetaEndOfTrack, std::string_view{});

  std::vector<std::uint8_t> out{'M', 'T', 'h', 'd'};
  put_u32(out, 6);
  put_u16(out, 0);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(kTicksPerQuarter));
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  put_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

MidiFile read_midi(std::span<const std::uint8_t> bytes) {
  Cursor c{bytes};
  if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, "MThd"))
    throw MidiError("not a MIDI file: missing MThd magic", MidiError::Fault::bad_magic);
  c.pos = 4;
  const std::uint32_t header_len = c.u32("header length");
  if (header_len < 6) throw MidiError("header length " + std::to_string(header_len) + " is below 6",
                                      MidiError::Fault::malformed);
  MidiFile file;
  file.format = c.u16("format");
  const std::uint16_t tracks = c.u16("track count");
  file.division = c.u16("division");
  c.need(header_len - 6, "header");
  c.pos += header_len - 6;
  if (file.format != 0 || tracks != 1)
    throw MidiError("only single-track format 0 files are supported (format " + std::to_string(file.format) +
                        ", " + std::to_string(tracks) + " tracks)",
                    MidiError::Fault::unsupported);
  if (file.division & 0x8000) throw MidiError("SMPTE time division is not supported", MidiError::Fault::unsupported);

  c.need(4, "track magic");
  if (!std::equal(bytes.begin() + static_cast<std::ptrdiff_t>(c.pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(c.pos) + 4, "MTrk"))
    throw MidiError("missing MTrk magic at byte " + std::to_string(c.pos), MidiError::Fault::bad_magic);
  c.pos += 4;
  const std::uint32_t track_len = c.u32("track length");
  c.need(track_len, "track data");
  const std::size_t end = c.pos + track_len;
  const auto track = bytes.first(end);

  std::uint64_t time = 0;
  std::uint8_t running = 0;
  bool ended = false;
  while (c.pos < end) {
    if (ended) throw MidiError("events after end of track", MidiError::Fault::malformed);
    time += read_vlq(track, c.pos);
    MidiEvent e;
    e.time = time;
    std::uint8_t status = c.pos < end ? track[c.pos] : 0;
    if (c.pos >= end) throw MidiError("truncated event at byte " + std::to_string(c.pos), MidiError::Fault::truncated);
    if (status & 0x80) {
      ++c.pos;
    } else {
      if (running == 0)
        throw MidiError("data byte without running status at byte " + std::to_string(c.pos),
                        MidiError::Fault::malformed);
      status = running;
    }
    e.status = status;
    Cursor tc{track, c.pos};
    if (status == 0xFF) {
      e.kind = MidiEventKind::meta;
      e.meta_type = tc.u8("meta type");
      const std::uint32_t len = read_vlq(track, tc.pos);
      tc.need(len, "meta payload");
      e.data.assign(track.begin() + static_cast<std::ptrdiff_t>(tc.pos),
                    track.begin() + static_cast<std::ptrdiff_t>(tc.pos + len));
      tc.pos += len;
      running = 0;
      ended = e.meta_type == kMetaEndOfTrack;
    } else if (status == 0xF0 || status == 0xF7) {
      e.kind = MidiEventKind::sysex;
      const std::uint32_t len = read_vlq(track, tc.pos);
      tc.need(len, "sysex payload");
      e.data.assign(track.begin() + static_cast<std::ptrdiff_t>(tc.pos),
                    track.begin() + static_cast<std::ptrdiff_t>(tc.pos + len));
      tc.pos += len;
      running = 0;
    } else if (status >= 0xF0) {
      throw MidiError("unsupported system message with status " + std::to_string(status), MidiError::Fault::unsupported);
    } else {
      const std::uint8_t type = status & 0xF0;
      const std::size_t n = (type == 0xC0 || type == 0xD0) ? 1 : 2;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t d = tc.u8("channel data");
        if (d & 0x80) throw MidiError("status byte inside channel data at byte " + std::to_string(tc.pos - 1),
                                      MidiError::Fault::malformed);
        e.data.push_back(d);
      }
      if (type == 0x80 || (type == 0x90 && e.data[1] == 0))
        e.kind = MidiEventKind::note_off;
      else if (type == 0x90)
        e.kind = MidiEventKind::note_on;
      else
        e.kind = MidiEventKind::channel;
      running = status;
    }
    c.pos = tc.pos;
    file.events.push_back(std::move(e));
  }
  if (!ended) throw MidiError("track ends without an end-of-track event", MidiError::Fault::truncated);
  return file;
}

Score rebuild_score(const MidiFile& file) {
  if (file.division != kTicksPerQuarter)
    throw MidiError("expected 480 ticks per quarter, found " + std::to_string(file.division),
                    MidiError::Fault::unsupported);
  Score s;
  s.tempo_bpm = 0;
  const double tick = 1.0 / kTicksPerQuarter;
  std::uint64_t last_off = 0;
  std::uint64_t on_time = 0;
  int sounding = -1;
  bool lyric_pending = false;
  auto fail = [](const std::string& what) { throw MidiError(what, MidiError::Fault::malformed); };
  for (const auto& e : file.events) {
    if (e.kind == MidiEventKind::meta) {
      switch (e.meta_type) {
        case kMetaTrackName: s.id = text_of(e); break;
        case kMetaText: {
          const json j = json::parse(text_of(e), nullptr, false);
          if (j.is_discarded() || !j.is_object()) fail("score text event is not JSON");
          try {
            s.seed = j.at("seed").get<std::uint64_t>();
            s.overrides = overrides_from_json(j);
          } catch (const std::exception& ex) {
            fail(std::string("score text event: ") + ex.what());
          }
          break;
        }
        case kMetaTempo: {
          if (e.data.size() != 3) fail("tempo event must carry 3 bytes");
          const std::uint32_t us = static_cast<std::uint32_t>(e.data[0]) << 16 |
                                   static_cast<std::uint32_t>(e.data[1]) << 8 | e.data[2];
          if (us == 0) fail("tempo of zero microseconds per quarter");
          s.tempo_bpm = static_cast<int>(std::lround(60'000'000.0 / us));
          break;
        }
        case kMetaLyric:
          if (lyric_pending || sounding >= 0) fail("lyric at tick " + std::to_string(e.time) + " is not before a note");
          s.syllables.push_back(text_of(e));
          s.notes.push_back(Note{0, 0.0, static_cast<double>(e.time - last_off) * tick});
          lyric_pending = true;
          break;
        default: break;
      }
    } else if (e.kind == MidiEventKind::note_on) {
      if (!lyric_pending) fail("note-on at tick " + std::to_string(e.time) + " has no lyric");
      if (e.time != last_off + to_ticks(s.notes.back().rest_before)) fail("note-on is not at its lyric time");
      sounding = e.data[0];
      on_time = e.time;
      s.notes.back().pitch = sounding;
      lyric_pending = false;
    } else if (e.kind == MidiEventKind::note_off) {
      if (sounding < 0 || e.data[0] != sounding) fail("note-off at tick " + std::to_string(e.time) + " does not match");
      s.notes.back().duration = static_cast<double>(e.time - on_time) * tick;
      last_off = e.time;
      sounding = -1;
    }
  }
  if (lyric_pending || sounding >= 0) fail("last note is incomplete");
  if (s.tempo_bpm == 0) s.tempo_bpm = kDefaultTempoBpm;
  try {
    s.validate();
  } catch (const ContractError& e) {
    fail(std::string("rebuilt score is invalid: ") + e.what());
  }
  return s;
}

std::string score_to_json(const Score& score) {
  json steps = json::array();
  for (std::size_t t = 0; t < score.notes.size(); ++t) {
    const Note& n = score.notes[t];
    steps.push_back({{"step", t},
                     {"syllable", t < score.syllables.size() ? score.syllables[t] : std::string()},
                     {"pitch", n.pitch},
                     {"duration", n.duration},
                     {"rest", n.rest_before}});
  }
  const json j{{"id", score.id},
               {"seed", score.seed},
               {"tempo_bpm", score.tempo_bpm},
               {"steps", steps},
               {"overrides", overrides_json(score.overrides)}};
  return j.dump();
}

Score score_from_json(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("score JSON is malformed");
  Score s;
  try {
    s.id = j.at("id").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.tempo_bpm = j.at("tempo_bpm").get<int>();
    for (const auto& step : j.at("steps")) {
      s.syllables.push_back(step.at("syllable").get<std::string>());
      s.notes.push_back(
          Note{step.at("pitch").get<int>(), step.at("duration").get<double>(), step.at("rest").get<double>()});
    }
    s.overrides = overrides_from_json(j);
  } catch (const json::exception& e) {
    throw FormatError(std::string("score JSON: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace lyre
