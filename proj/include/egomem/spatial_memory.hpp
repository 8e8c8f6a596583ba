#pragma once

// Working memory binding azimuth bins to tracked people. Each bin holds a
// list of occupants; an unoccupied bin is the empty set, not an error.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/sls.hpp"
#include "egomem/tracker.hpp"

namespace egomem {

enum class Color : std::uint8_t { Blue, Green, Red };

inline constexpr std::array<Color, 3> kAllColors{Color::Blue, Color::Green, Color::Red};

constexpr std::string_view to_string(Color c) noexcept {
  switch (c) {
    case Color::Blue: return "blue";
    case Color::Green: return "green";
    case Color::Red: return "red";
  }
  return "?";
}

inline std::optional<Color> parse_color(std::string_view s) {
  for (auto c : kAllColors)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// Name given to a slot whose name could not be extracted.
inline std::string unknown_name(Color c) { return "unknown-" + std::string(to_string(c)); }

/// One remembered person. The color is attached once the person has been
/// positioned; before that the slot is known only by its track.
struct PersonSlot {
  TrackId track_id = 0;
  std::optional<Color> color;
  std::optional<std::string> name;

  std::string label() const {
    if (name) return *name;
    if (color) return std::string(to_string(*color));
    return "track-" + std::to_string(track_id);
  }
  friend bool operator==(const PersonSlot&, const PersonSlot&) = default;
};

struct EmptyBin {};
struct Ambiguous {
  std::size_t occupants = 0;
};
using Occupancy = std::variant<EmptyBin, PersonSlot, Ambiguous>;

class SpatialMemory {
 public:
  void bind(AzimuthBin bin, PersonSlot slot) {
    if (locate(slot.track_id)) throw ConsistencyError("track " + std::to_string(slot.track_id) + " already bound");
    if (slot.color && by_color(*slot.color))
      throw ConsistencyError("color " + std::string(to_string(*slot.color)) + " already assigned");
    bins_[bin_index(bin)].push_back(std::move(slot));
  }

  /// Moves a slot to another bin; a no-op when it is already there.
  void relocate(TrackId id, AzimuthBin to) {
    auto where = locate(id);
    if (!where) throw NotFoundError("track " + std::to_string(id) + " not bound");
    if (where->first == to) return;
    auto& from = bins_[bin_index(where->first)];
    PersonSlot slot = std::move(from[where->second]);
    from.erase(from.begin() + static_cast<std::ptrdiff_t>(where->second));
    bins_[bin_index(to)].push_back(std::move(slot));
  }

  Occupancy identity_at(AzimuthBin bin) const {
    const auto& occ = bins_[bin_index(bin)];
    if (occ.empty()) return EmptyBin{};
    if (occ.size() == 1) return occ.front();
    return Ambiguous{occ.size()};
  }

  /// Unique occupant's track id, if any.
  std::optional<TrackId> unique_track_at(AzimuthBin bin) const {
    const auto& occ = bins_[bin_index(bin)];
    if (occ.size() == 1) return occ.front().track_id;
    return std::nullopt;
  }

  void set_name(TrackId id, std::string name) { mutable_slot(id).name = std::move(name); }

  void assign_color(TrackId id, Color c) {
    if (auto* other = by_color(c); other && other->track_id != id)
      throw ConsistencyError("color " + std::string(to_string(c)) + " already assigned");
    mutable_slot(id).color = c;
  }

  const PersonSlot* slot(TrackId id) const {
    auto where = locate(id);
    return where ? &bins_[bin_index(where->first)][where->second] : nullptr;
  }

  const PersonSlot* by_color(Color c) const {
    for (const auto& occ : bins_)
      for (const auto& s : occ)
        if (s.color == c) return &s;
    return nullptr;
  }

  std::optional<AzimuthBin> bin_of(TrackId id) const {
    auto where = locate(id);
    if (!where) return std::nullopt;
    return where->first;
  }

  const std::vector<PersonSlot>& occupants(AzimuthBin bin) const { return bins_[bin_index(bin)]; }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& occ : bins_) n += occ.size();
    return n;
  }

  /// One line per slot: "<bin> <track_id> <color|-> <name|->".
  std::string snapshot() const {
    std::ostringstream os;
    for (auto b : kAllBins)
      for (const auto& s : bins_[bin_index(b)])
        os << to_string(b) << ' ' << s.track_id << ' ' << (s.color ? to_string(*s.color) : "-") << ' '
           << (s.name ? escape(*s.name) : std::string("-")) << '\n';
    return os.str();
  }

  static SpatialMemory from_snapshot(std::string_view text) {
    SpatialMemory m;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string bin, color, name;
      TrackId id = 0;
      if (!(ls >> bin >> id >> color >> name)) throw DomainError("malformed memory line: " + line);
      auto b = parse_bin(bin);
      if (!b) throw DomainError("bad bin in memory line: " + line);
      PersonSlot s{id, std::nullopt, std::nullopt};
      if (color != "-") {
        s.color = parse_color(color);
        if (!s.color) throw DomainError("bad color in memory line: " + line);
      }
      if (name != "-") s.name = unescape(name);
      m.bind(*b, std::move(s));
    }
    return m;
  }

  friend bool operator==(const SpatialMemory&, const SpatialMemory&) = default;

 private:
  std::optional<std::pair<AzimuthBin, std::size_t>> locate(TrackId id) const {
    for (auto b : kAllBins) {
      const auto& occ = bins_[bin_index(b)];
      for (std::size_t i = 0; i < occ.size(); ++i)
        if (occ[i].track_id == id) return std::pair{b, i};
    }
    return std::nullopt;
  }

  PersonSlot& mutable_slot(TrackId id) {
    auto where = locate(id);
    if (!where) throw NotFoundError("track " + std::to_string(id) + " not bound");
    return bins_[bin_index(where->first)][where->second];
  }

  static std::string escape(std::string s) {
    std::replace(s.begin(), s.end(), ' ', '_');
    return s;
  }
  static std::string unescape(std::string s) {
    std::replace(s.begin(), s.end(), '_', ' ');
    return s;
  }

  std::array<std::vector<PersonSlot>, 3> bins_;
};

}  // namespace egomem
