#pragma once

#include <string_view>

namespace tipcrit {

// Which side of the attractor a basin endpoint (or an escape) lies on.
enum class Side : int { Lower = -1, Upper = +1 };

constexpr int sign(Side s) noexcept { return static_cast<int>(s); }

constexpr Side opposite(Side s) noexcept { return s == Side::Upper ? Side::Lower : Side::Upper; }

constexpr std::string_view to_string(Side s) noexcept { return s == Side::Upper ? "+1" : "-1"; }

}  // namespace tipcrit
