#include "lyre/attributes.hpp"

#include <algorithm>
#include <cmath>

#include "lyre/error.hpp"

namespace lyre {

std::string_view to_string(Attribute a) {
  switch (a) {
    case Attribute::pitch:
      return "pitch";
    case Attribute::duration:
      return "duration";
    case Attribute::rest:
      return "rest";
  }
  return "?";
}

Attribute parse_attribute(std::string_view name) {
  for (Attribute a : kAttributes)
    if (to_string(a) == name) return a;
  throw ContractError("unknown attribute '" + std::string(name) +
                      "' (expected pitch, duration or rest)");
}

AttributeVocab AttributeVocab::standard() {
  AttributeVocab v;
  for (int p = 48; p <= 83; ++p) v.pitches.push_back(p);
  v.durations = {0.25, 0.5, 1.0, 1.5, 2.0, 4.0};
  v.rests = {0.0, 0.5, 1.0, 2.0};
  return v;
}

const std::vector<double>& AttributeVocab::values(Attribute a) const {
  switch (a) {
    case Attribute::pitch:
      return pitches;
    case Attribute::duration:
      return durations;
    case Attribute::rest:
      return rests;
  }
  throw ContractError("bad attribute");
}

std::optional<std::size_t> AttributeVocab::index_of(Attribute a, double value) const {
  const auto& v = values(a);
  auto it = std::find(v.begin(), v.end(), value);
  if (it == v.end()) return std::nullopt;
  return static_cast<std::size_t>(it - v.begin());
}

void AttributeVocab::validate() const {
  for (Attribute a : kAttributes) {
    const auto& v = values(a);
    const std::string name(to_string(a));
    if (v.empty()) throw ConfigError(name + " vocabulary is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw ConfigError(name + " vocabulary has a non-finite value");
      if (i > 0 && !(v[i] > v[i - 1]))
        throw ConfigError(name + " vocabulary must be strictly increasing");
      if (a == Attribute::pitch) {
        if (v[i] < 0 || v[i] > 127 || v[i] != std::floor(v[i]))
          throw ConfigError("pitch " + std::to_string(v[i]) + " is not a MIDI note number");
      } else {
        if (v[i] * 4 != std::floor(v[i] * 4))
          throw ConfigError(name + " value " + std::to_string(v[i]) + " is not a multiple of 1/4");
        if (a == Attribute::duration ? v[i] <= 0 : v[i] < 0)
          throw ConfigError(name + " value " + std::to_string(v[i]) + " out of range");
      }
    }
  }
}

}  // namespace lyre
