#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace overgen {

/// Overgeneration taxonomy, ordered from none to the subtlest category.
enum class OvergenLabel {
  None,
  Oscillatory,
  Detached,
  PartiallyDetached,
  MinimallyDetached,
};

inline constexpr std::array<OvergenLabel, 5> kAllLabels = {
    OvergenLabel::None, OvergenLabel::Oscillatory, OvergenLabel::Detached,
    OvergenLabel::PartiallyDetached, OvergenLabel::MinimallyDetached};

constexpr std::string_view to_string(OvergenLabel label) {
  switch (label) {
    case OvergenLabel::None: return "none";
    case OvergenLabel::Oscillatory: return "oscillatory";
    case OvergenLabel::Detached: return "detached";
    case OvergenLabel::PartiallyDetached: return "partially_detached";
    case OvergenLabel::MinimallyDetached: return "minimally_detached";
  }
  return "none";
}

constexpr std::optional<OvergenLabel> label_from_string(std::string_view s) {
  for (auto label : kAllLabels) {
    if (to_string(label) == s) return label;
  }
  return std::nullopt;
}

constexpr bool is_overgeneration(OvergenLabel label) {
  return label != OvergenLabel::None;
}

}  // namespace overgen
