#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evsoh/units.hpp"

namespace evsoh {

// One decoded signal on its native (possibly irregular) timestamps.
struct Signal {
    std::vector<double> t;
    std::vector<double> v;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
    void push(double time, double value) {
        t.push_back(time);
        v.push_back(value);
    }
    bool operator==(const Signal&) const = default;
};

struct MalformedRow {
    std::size_t row = 0;  // 1-based line number in the source
    std::string reason;
};

// Long-format telemetry as decoded from the vehicle bus: every channel keeps
// its own time base. Voltage and current are mandatory, the rest optional.
struct RawTraces {
    Signal voltage;
    Signal current;
    Signal soc;
    std::vector<Signal> temperatures;
    std::vector<Signal> cell_voltages;

    // Free-form "key: value" header entries (vehicle, label, mileage_km, ...).
    std::map<std::string, std::string> metadata;
    std::vector<MalformedRow> malformed;
};

struct SampleStats {
    std::size_t count = 0;
    double min_interval = 0.0;
    double max_interval = 0.0;
    double mean_interval = 0.0;
};

struct SessionMetadata {
    std::map<std::string, std::string> labels;
    double grid_step = 0.0;
    std::optional<double> smoothing_fraction;
    std::optional<VoltageWindow> window;
    // Indices of the window crossings in the session the crop was taken from.
    std::optional<std::size_t> low_crossing;
    std::optional<std::size_t> high_crossing;
    // Processing steps in the order they were applied.
    std::vector<std::string> processing;
    std::map<std::string, SampleStats> samples;

    std::string label(const std::string& key, const std::string& fallback = {}) const {
        auto it = labels.find(key);
        return it == labels.end() ? fallback : it->second;
    }
};

// Synchronized charging session: every channel shares `time`.
// Charging current is positive.
struct ChargingSession {
    std::vector<double> time;
    std::vector<double> voltage;
    std::vector<double> current;
    std::vector<double> power;
    std::vector<double> soc;  // empty when the trace carried no SOC
    std::vector<std::vector<double>> temperatures;
    std::vector<std::vector<double>> cell_voltages;
    SessionMetadata metadata;

    std::size_t size() const { return time.size(); }
    bool empty() const { return time.empty(); }
    bool has_soc() const { return !soc.empty(); }
    bool has_temperature() const { return !temperatures.empty(); }
    double duration() const { return empty() ? 0.0 : time.back() - time.front(); }

    // Samples [begin, end) as a new session; metadata is copied.
    ChargingSession slice(std::size_t begin, std::size_t end) const;
};

}  // namespace evsoh
