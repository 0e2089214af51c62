#include "evsoh/session.hpp"

#include <algorithm>

#include "evsoh/errors.hpp"

namespace evsoh {
namespace {

template <typename T>
std::vector<T> sub(const std::vector<T>& v, std::size_t b, std::size_t e) {
    if (v.empty()) return {};
    return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(b), v.begin() + static_cast<std::ptrdiff_t>(e));
}

}  // namespace

ChargingSession ChargingSession::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw DomainError("slice bounds outside the session");
    ChargingSession s;
    s.time = sub(time, begin, end);
    s.voltage = sub(voltage, begin, end);
    s.current = sub(current, begin, end);
    s.power = sub(power, begin, end);
    s.soc = sub(soc, begin, end);
    for (const auto& c : temperatures) s.temperatures.push_back(sub(c, begin, end));
    for (const auto& c : cell_voltages) s.cell_voltages.push_back(sub(c, begin, end));
    s.metadata = metadata;
    return s;
}

}  // namespace evsoh
