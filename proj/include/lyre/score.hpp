#pragma once

// Syllable-aligned scores, Standard MIDI File (format 0) writing and reading,
// and the canonical score JSON.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lyre/attributes.hpp"

namespace lyre {

inline constexpr std::uint32_t kTicksPerQuarter = 480;
inline constexpr int kDefaultTempoBpm = 100;
inline constexpr std::uint8_t kNoteVelocity = 90;

struct Note {
  int pitch = 60;            ///< MIDI number
  double duration = 1.0;     ///< quarter notes, > 0
  double rest_before = 0.0;  ///< quarter notes, >= 0

  bool operator==(const Note&) const = default;
};

struct Override {
  std::size_t step = 0;
  Attribute attribute = Attribute::pitch;
  double value = 0.0;

  bool operator==(const Override&) const = default;
};

struct Score {
  std::string id;
  std::vector<std::string> syllables;
  std::vector<Note> notes;  ///< one per syllable
  int tempo_bpm = kDefaultTempoBpm;
  std::uint64_t seed = 0;
  std::vector<Override> overrides;  ///< sorted by (step, attribute)

  /// Throws ContractError: misalignment, empty syllables, pitch outside
  /// 0..127, durations or rests that are not positive (non-negative)
  /// multiples of 1/4, tempo outside 4..1000.
  void validate() const;
  bool operator==(const Score&) const = default;
};

/// Throws ContractError naming the step and attribute of an out-of-range index.
std::vector<Note> decode_attributes(std::span<const AttributeIndices> indices, const AttributeVocab& vocab);

/// Value of one attribute of a note (pitch as a double).
double attribute_value(const Note& note, Attribute a);
/// Sets one attribute; the value must already be valid for it.
void set_attribute(Note& note, Attribute a, double value);

/// Exact tick count of a quarter-note multiple of 1/4.
std::uint64_t to_ticks(double quarters);

/// Format 0, 480 ticks per quarter. The track holds a track-name event with
/// the score id, a text event with the seed and overrides, the tempo, then
/// per note: lyric at rest_before, note-on (velocity 90, channel 0) at the
/// same time, note-off after the duration. Throws ContractError for an
/// invalid score.
std::vector<std::uint8_t> write_midi(const Score& score);

enum class MidiEventKind { note_off, note_on, channel, meta, sysex };

struct MidiEvent {
  std::uint64_t time = 0;  ///< absolute ticks
  MidiEventKind kind = MidiEventKind::meta;
  std::uint8_t status = 0;     ///< status byte after running status is resolved
  std::uint8_t meta_type = 0;  ///< for meta events
  std::vector<std::uint8_t> data;

  bool operator==(const MidiEvent&) const = default;
};

struct MidiFile {
  std::uint16_t format = 0;
  std::uint16_t division = kTicksPerQuarter;
  std::vector<MidiEvent> events;
};

/// Decodes a single-track file, resolving running status. Note-on with
/// velocity 0 is reported as note_off. Throws MidiError (bad magic,
/// truncation, overlong variable-length quantity, unsupported layout).
MidiFile read_midi(std::span<const std::uint8_t> bytes);

/// Variable-length quantity at `pos`, advancing it. At most four bytes.
std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& pos);
void write_vlq(std::vector<std::uint8_t>& out, std::uint32_t value);

/// Score from the events written by write_midi. Throws MidiError when the
/// events do not follow that layout.
Score rebuild_score(const MidiFile& file);

/// Canonical JSON: sorted keys, no whitespace. Per step: syllable, pitch,
/// duration, rest.
std::string score_to_json(const Score& score);
/// Throws FormatError for malformed JSON and ContractError for invalid scores.
Score score_from_json(std::string_view text);

}  // namespace lyre
