#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evsoh/dva.hpp"
#include "evsoh/metrics.hpp"
#include "evsoh/protocol.hpp"
#include "evsoh/simulate.hpp"

namespace evsoh {

nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const MeasurementResult& r);
nlohmann::json to_json(const FeatureSet& f);
nlohmann::json to_json(const DegradationReport& r);
nlohmann::json to_json(const GroundTruth& t);
nlohmann::json to_json(const DegradationState& s);

std::string format_validation(const ValidationReport& r);
std::string format_measurement(const MeasurementResult& r);
std::string format_degradation(const DegradationReport& r, const FeatureSet& aged, const FeatureSet& reference);

// Two tab-separated columns, capacity_ah and dv_v, after a '#' header line.
void write_dv_curve(std::ostream& out, const DVCurve& curve);

struct SpreadStats {
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double cv = 0.0;  // sample standard deviation / mean
};

SpreadStats spread(std::span<const double> values);

struct TrendInput {
    ChargingSession session;  // synchronized, uncropped
    std::string source;
};

struct TrendEntry {
    std::string label;
    std::optional<double> mileage_km;
    std::string source;
    std::optional<MeasurementResult> voltage_window;
    std::optional<MeasurementResult> soc_window;
    std::optional<std::string> refused;  // why the voltage-window measurement was refused
    double rest_voltage_v = 0.0;         // last rest sample before the charge
    double full_charge_voltage_v = 0.0;  // last sample of the charge
};

struct PairDiagnosis {
    std::string label;
    std::string reference_label;
    std::optional<DegradationReport> report;
    std::optional<std::string> error;
};

struct TrendReport {
    std::string vehicle;
    VoltageWindow window;
    std::pair<double, double> soc_window{0.0, 100.0};
    std::vector<TrendEntry> entries;  // ordered by mileage, else by label
    std::vector<PairDiagnosis> diagnoses;  // every later entry against the first
    std::optional<SpreadStats> voltage_window_energy;
    std::optional<SpreadStats> soc_window_energy;
    std::optional<SpreadStats> voltage_window_capacity;
    SpreadStats full_charge_voltage;
    double full_charge_voltage_spread_v = 0.0;
    std::vector<std::string> warnings;
};

struct TrendOptions {
    MeasureOptions measure;
    std::pair<double, double> soc_window{0.0, 100.0};
    // Operating-span change against the first entry that triggers a warning.
    double span_tolerance_v = 2.0;
    std::optional<ChemistryTemplate> dva_template;
    bool diagnose = true;
};

// Needs >= 2 sessions of one vehicle model.
TrendReport build_trend(std::vector<TrendInput> inputs, const PackSpec& spec, const TrendOptions& options = {});

nlohmann::json to_json(const TrendReport& r);
std::string format_trend(const TrendReport& r);

}  // namespace evsoh
