#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mann {

/// Raised for contract violations and malformed inputs across the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kNumRbs = 100;

/// Center-band widths (RBs) a cell may adopt.
inline constexpr std::array<int, 3> kCenterBandwidths{40, 64, 88};
inline constexpr int kMinThreshold = 25;
inline constexpr int kMaxThreshold = 33;
inline constexpr int kNumThresholds = kMaxThreshold - kMinThreshold + 1;
inline constexpr int kNumActions = static_cast<int>(kCenterBandwidths.size()) * kNumThresholds;

enum class MetricKind { maxmin, mean };

inline std::string_view to_string(MetricKind kind) {
    return kind == MetricKind::maxmin ? "maxmin" : "mean";
}

inline MetricKind metric_kind_from_string(std::string_view s) {
    if (s == "maxmin") return MetricKind::maxmin;
    if (s == "mean") return MetricKind::mean;
    throw Error("unknown metric kind '" + std::string(s) + "'");
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace mann
