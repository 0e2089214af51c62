#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "evsoh/pack_model.hpp"
#include "evsoh/session.hpp"

namespace evsoh {

struct ChargeOptions {
    double power_w = 2000.0;
    VoltageWindow window;  // the measurement window the trace must span
    SensorSpec sensor;
    double ambient_c = 20.0;
    std::uint64_t seed = 0;

    double step_s = 1.0;
    // Pre-charge rest: the terminal voltage recovers from a prior discharge as
    // OCV - amplitude * exp(-t / tau).
    double rest_s = 2400.0;
    double relaxation_amplitude_v = 2.0;
    double relaxation_tau_s = 600.0;

    int temperature_channels = 2;
    double temperature_rise_c_per_h = 0.4;
    double temperature_cap_c = 30.0;

    bool export_cells = false;
    double cell_sample_rate_hz = 0.5;
};

// Exact (unquantized) quantities of a simulated charge, for oracle checks.
struct GroundTruth {
    double charge_ah = 0.0;  // total pack charge taken up
    double energy_kwh = 0.0;
    // Exact charge and energy between the terminal-voltage crossings of the
    // window; absent when the charge stopped before U_high.
    std::optional<double> window_charge_ah;
    std::optional<double> window_energy_kwh;
    double start_ocv_v = 0.0;
    double end_voltage_v = 0.0;
    double charge_duration_s = 0.0;
    std::string termination;  // "pack_voltage", "cell_voltage" or "domain"
    DegradationState degradation;
    // Pack-level electrode capacities (cell value x n_parallel).
    double q_pe_ah = 0.0;
    double q_ne_ah = 0.0;
    double q_b_ah = 0.0;
    double usable_capacity_ah = 0.0;
    std::uint64_t pack_seed = 0;
    std::uint64_t noise_seed = 0;
};

struct SimulatedCharge {
    RawTraces traces;
    GroundTruth truth;
};

// Constant-power charge from the BMS 0 % point (after a rest) until the BMS
// terminates: pack terminal voltage at the upper anchor or any block at the
// cell limit.
SimulatedCharge simulate_charge(const PackModel& model, const ChargeOptions& options);

SimulatedCharge simulate_charge(const PackModel& model, double power_w, VoltageWindow window,
                                const SensorSpec& sensor, double ambient_c, std::uint64_t seed);

}  // namespace evsoh
