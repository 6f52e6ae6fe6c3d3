#pragma once

#include "hydrograph/error.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace hydrograph {

/// Identity of a river segment, waterbody or synthetic point source.
struct Comid {
    std::uint64_t value = 0;

    constexpr Comid() = default;
    constexpr explicit Comid(std::uint64_t v) : value(v) {}

    friend constexpr auto operator<=>(const Comid&, const Comid&) = default;
    friend std::ostream& operator<<(std::ostream& os, const Comid& c) { return os << c.value; }
};

/// Synthetic point-source ids start here, clear of the NHD COMID space.
inline constexpr std::uint64_t kPointSourceIdBase = 1'000'000'000'000ULL;

/// Twelve-digit hydrologic unit code; HUC10 and HUC8 are its prefixes.
class HucCode {
public:
    HucCode() = default;

    explicit HucCode(std::string digits) : digits_(std::move(digits)) {
        if (digits_.size() != 12) throw ValidationError("HUC12 must have 12 digits: '" + digits_ + "'");
        for (char c : digits_)
            if (c < '0' || c > '9') throw ValidationError("HUC12 must be decimal digits: '" + digits_ + "'");
    }

    const std::string& str() const { return digits_; }
    std::string_view huc10() const { return std::string_view(digits_).substr(0, 10); }
    std::string_view huc8() const { return std::string_view(digits_).substr(0, 8); }

    friend auto operator<=>(const HucCode&, const HucCode&) = default;
    friend std::ostream& operator<<(std::ostream& os, const HucCode& h) { return os << h.digits_; }

private:
    std::string digits_;
};

struct FlowEdge {
    Comid from;
    Comid to;

    friend constexpr auto operator<=>(const FlowEdge&, const FlowEdge&) = default;
};

enum class NodeKind { River, Waterbody, PointSource };

inline std::string_view to_string(NodeKind k) {
    switch (k) {
    case NodeKind::River: return "River";
    case NodeKind::Waterbody: return "Waterbody";
    case NodeKind::PointSource: return "PointSource";
    }
    return "River";
}

inline NodeKind parse_node_kind(std::string_view s) {
    if (s == "River") return NodeKind::River;
    if (s == "Waterbody") return NodeKind::Waterbody;
    if (s == "PointSource") return NodeKind::PointSource;
    throw ValidationError("unknown node kind '" + std::string(s) + "'");
}

} // namespace hydrograph

template <>
struct std::hash<hydrograph::Comid> {
    std::size_t operator()(const hydrograph::Comid& c) const noexcept {
        return std::hash<std::uint64_t>{}(c.value);
    }
};
