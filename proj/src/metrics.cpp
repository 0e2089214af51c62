#include "evsoh/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"

namespace evsoh {
namespace {

void check_sign(const ChargingSession& s, double tolerance) {
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s.current[k] < -tolerance)
            throw SignConventionError("current " + std::to_string(s.current[k]) + " A at t = " +
                                      std::to_string(s.time[k]) +
                                      " s is negative; charging current must be positive");
}

template <typename Fn>
double trapezoid(const ChargingSession& s, Fn&& f) {
    double sum = 0.0;
    for (std::size_t k = 1; k < s.size(); ++k)
        sum += 0.5 * (f(k) + f(k - 1)) * (s.time[k] - s.time[k - 1]);
    return sum;
}

}  // namespace

Charge integrate_capacity(const ChargingSession& session, double tol) {
    check_sign(session, tol);
    return Charge::coulombs(trapezoid(session, [&](std::size_t k) { return session.current[k]; }));
}

Energy integrate_energy(const ChargingSession& session, double tol) {
    check_sign(session, tol);
    const bool have_power = session.power.size() == session.size();
    return Energy::joules(trapezoid(session, [&](std::size_t k) {
        return have_power ? session.power[k] : session.voltage[k] * session.current[k];
    }));
}

Energy approx_energy(Charge q, double nominal_voltage_v) {
    if (!(nominal_voltage_v > 0.0)) throw DomainError("nominal voltage must be > 0");
    return Energy::joules(q.coulombs() * nominal_voltage_v);
}

std::string_view to_string(ReferenceKind k) { return k == ReferenceKind::nominal ? "nominal" : "initial"; }

SohValues soh(Charge q, Energy e, const SohReference& ref) {
    const char* hint = ref.kind == ReferenceKind::nominal
                           ? "supply the nominal capacity Q_N and net energy E_N from the vehicle registration documents"
                           : "supply the initial capacity Q_0 and energy E_0 measured on the pristine vehicle";
    if (!ref.capacity_ah || !ref.energy_kwh)
        throw ReferenceError(std::string("missing ") + std::string(to_string(ref.kind)) + " SOH reference: " + hint);
    if (!(*ref.capacity_ah > 0.0) || !(*ref.energy_kwh > 0.0))
        throw ReferenceError(std::string("SOH reference values must be > 0: ") + hint);
    return {q.amp_hours() / *ref.capacity_ah, e.kilowatt_hours() / *ref.energy_kwh, ref.kind};
}

MeasurementResult measure(const ChargingSession& session, const PackSpec& spec, const MeasureOptions& options) {
    MeasurementResult r;
    r.vehicle = session.metadata.label("vehicle", spec.vehicle);
    r.label = session.metadata.label("label");
    r.full_charge_voltage_v = session.voltage.empty() ? 0.0 : session.voltage.back();

    const VoltageWindow window = options.window.value_or(spec.window);
    if (options.validate) {
        ProtocolSpec p = options.protocol;
        p.window = window;
        r.validation = validate_session(session, p, spec, options.validation);
    }

    const ChargingSession smoothed = smooth_session(session, options.smoothing_fraction);
    ChargingSession cropped;
    if (options.soc_window) {
        r.window_kind = WindowKind::soc;
        r.window_low = options.soc_window->first;
        r.window_high = options.soc_window->second;
        cropped = crop_to_soc_window(smoothed, r.window_low, r.window_high);
    } else {
        r.window_low = window.low;
        r.window_high = window.high;
        try {
            cropped = crop_to_window(smoothed, window.low, window.high);
        } catch (const WindowNotCoveredError& e) {
            throw WindowNotCoveredError(std::string("measurement refused: ") + e.what() + "; " +
                                        std::string(kWindowNotCoveredExplanation));
        }
    }

    const Charge q = integrate_capacity(cropped, options.protocol.current_threshold_a);
    const Energy e = integrate_energy(cropped, options.protocol.current_threshold_a);
    r.q_calc_ah = q.amp_hours();
    r.e_calc_kwh = e.kilowatt_hours();
    r.e_approx_kwh = approx_energy(q, spec.nominal_voltage_v).kilowatt_hours();
    r.start_time_s = cropped.time.front();
    r.duration_s = cropped.duration();
    r.nominal = soh(q, e, {ReferenceKind::nominal, spec.nominal_capacity_ah, spec.nominal_energy_kwh});
    if (options.initial_capacity_ah || options.initial_energy_kwh)
        r.initial = soh(q, e, {ReferenceKind::initial, options.initial_capacity_ah, options.initial_energy_kwh});
    return r;
}

}  // namespace evsoh
