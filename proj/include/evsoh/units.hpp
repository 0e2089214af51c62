#pragma once

// Internal quantities are SI (seconds, volts, amperes, coulombs, joules).
// Ampere-hours and kilowatt-hours only appear at API and file boundaries,
// through the named conversions below.

#include <compare>

namespace evsoh {

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kJoulesPerKwh = 3.6e6;

class Charge {
public:
    constexpr Charge() = default;
    static constexpr Charge coulombs(double c) { return Charge{c}; }
    static constexpr Charge amp_hours(double ah) { return Charge{ah * kSecondsPerHour}; }

    constexpr double coulombs() const { return value_; }
    constexpr double amp_hours() const { return value_ / kSecondsPerHour; }

    constexpr Charge operator+(Charge o) const { return Charge{value_ + o.value_}; }
    constexpr Charge operator-(Charge o) const { return Charge{value_ - o.value_}; }
    constexpr Charge operator*(double k) const { return Charge{value_ * k}; }
    constexpr double operator/(Charge o) const { return value_ / o.value_; }
    constexpr auto operator<=>(const Charge&) const = default;

private:
    constexpr explicit Charge(double c) : value_(c) {}
    double value_ = 0.0;
};

class Energy {
public:
    constexpr Energy() = default;
    static constexpr Energy joules(double j) { return Energy{j}; }
    static constexpr Energy kilowatt_hours(double kwh) { return Energy{kwh * kJoulesPerKwh}; }

    constexpr double joules() const { return value_; }
    constexpr double kilowatt_hours() const { return value_ / kJoulesPerKwh; }

    constexpr Energy operator+(Energy o) const { return Energy{value_ + o.value_}; }
    constexpr Energy operator-(Energy o) const { return Energy{value_ - o.value_}; }
    constexpr Energy operator*(double k) const { return Energy{value_ * k}; }
    constexpr double operator/(Energy o) const { return value_ / o.value_; }
    constexpr auto operator<=>(const Energy&) const = default;

private:
    constexpr explicit Energy(double j) : value_(j) {}
    double value_ = 0.0;
};

// Closed voltage interval at pack level.
struct VoltageWindow {
    double low = 0.0;
    double high = 0.0;

    constexpr double span() const { return high - low; }
    constexpr bool valid() const { return low < high; }
    bool operator==(const VoltageWindow&) const = default;
};

}  // namespace evsoh
