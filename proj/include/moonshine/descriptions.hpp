#pragma once

#include <array>
#include <string>

namespace moonshine {

inline constexpr int kLongCount = 5;
inline constexpr int kShortCount = 5;
inline constexpr int kDescriptionCount = kLongCount + kShortCount;

struct DescriptionSet {
  std::array<std::string, kLongCount> long_texts;
  std::array<std::string, kShortCount> short_texts;

  // Position i in [0,10): longs first, then shorts.
  const std::string& at(int i) const {
    return i < kLongCount ? long_texts[static_cast<std::size_t>(i)]
                          : short_texts[static_cast<std::size_t>(i - kLongCount)];
  }

  friend bool operator==(const DescriptionSet&, const DescriptionSet&) = default;
};

}  // namespace moonshine
