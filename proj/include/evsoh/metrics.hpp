#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "evsoh/pack_model.hpp"
#include "evsoh/protocol.hpp"
#include "evsoh/session.hpp"
#include "evsoh/units.hpp"

namespace evsoh {

// Trapezoidal integrals over a cropped session. Currents below -tolerance
// violate the charging-positive convention and raise SignConventionError.
Charge integrate_capacity(const ChargingSession& session, double sign_tolerance_a = 0.5);
Energy integrate_energy(const ChargingSession& session, double sign_tolerance_a = 0.5);

// U_n * Q, an approximation of the integrated energy.
Energy approx_energy(Charge q, double nominal_voltage_v);

enum class ReferenceKind { nominal, initial };
std::string_view to_string(ReferenceKind k);

struct SohReference {
    ReferenceKind kind = ReferenceKind::nominal;
    std::optional<double> capacity_ah;
    std::optional<double> energy_kwh;
};

struct SohValues {
    double soh_q = 0.0;
    double soh_e = 0.0;
    ReferenceKind kind = ReferenceKind::nominal;
};

SohValues soh(Charge q, Energy e, const SohReference& reference);

enum class WindowKind { voltage, soc };

struct MeasurementResult {
    double q_calc_ah = 0.0;
    double e_calc_kwh = 0.0;
    double e_approx_kwh = 0.0;  // always an approximation
    WindowKind window_kind = WindowKind::voltage;
    double window_low = 0.0;   // volts, or percent for an SOC window
    double window_high = 0.0;
    // Both references are reported when known; neither is preferred.
    std::optional<SohValues> nominal;
    std::optional<SohValues> initial;
    std::optional<ValidationReport> validation;
    double start_time_s = 0.0;
    double duration_s = 0.0;
    double full_charge_voltage_v = 0.0;  // last raw voltage sample of the session
    std::string vehicle;
    std::string label;
};

struct MeasureOptions {
    double smoothing_fraction = 0.01;
    std::optional<VoltageWindow> window;  // defaults to the pack spec window
    std::optional<std::pair<double, double>> soc_window;
    std::optional<double> initial_capacity_ah;
    std::optional<double> initial_energy_kwh;
    bool validate = true;
    ValidationOptions validation;
    ProtocolSpec protocol;  // window overwritten by the measurement window
};

// smooth -> crop -> integrate -> SOH on a synchronized session. A window that
// is never reached raises WindowNotCoveredError with the premature cut-off
// explanation.
MeasurementResult measure(const ChargingSession& session, const PackSpec& spec, const MeasureOptions& options = {});

inline constexpr std::string_view kWindowNotCoveredExplanation =
    "the cut-off voltage was not reached: the BMS terminated the charge before U_high, as happens when a "
    "weak or defective cell meets its cut-off condition prematurely. The fixed voltage window is not "
    "reachable on pack level, so no SOH can be calculated from this session.";

}  // namespace evsoh
