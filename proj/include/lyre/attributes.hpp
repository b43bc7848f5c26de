#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lyre {

enum class Attribute : std::uint8_t { pitch = 0, duration = 1, rest = 2 };

inline constexpr std::array<Attribute, 3> kAttributes{Attribute::pitch, Attribute::duration,
                                                      Attribute::rest};

std::string_view to_string(Attribute a);
/// Throws ContractError for anything but "pitch", "duration" or "rest".
Attribute parse_attribute(std::string_view name);

/// Discrete value sets the generator chooses from. Durations and rests are in
/// quarter notes and must be multiples of 1/4 so they map to whole MIDI ticks.
struct AttributeVocab {
  std::vector<double> pitches;
  std::vector<double> durations;
  std::vector<double> rests;

  /// MIDI 48..83, {0.25, 0.5, 1, 1.5, 2, 4}, {0, 0.5, 1, 2}.
  static AttributeVocab standard();

  const std::vector<double>& values(Attribute a) const;
  std::size_t size(Attribute a) const { return values(a).size(); }
  std::optional<std::size_t> index_of(Attribute a, double value) const;

  /// Throws ConfigError when a list is empty, unsorted, duplicated or out of range.
  void validate() const;

  bool operator==(const AttributeVocab&) const = default;
};

/// Vocabulary indices of one note.
struct AttributeIndices {
  std::array<std::size_t, 3> index{};

  std::size_t& operator[](Attribute a) { return index[static_cast<std::size_t>(a)]; }
  std::size_t operator[](Attribute a) const { return index[static_cast<std::size_t>(a)]; }
  bool operator==(const AttributeIndices&) const = default;
};

}  // namespace lyre
