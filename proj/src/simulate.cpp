#include "evsoh/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "evsoh/errors.hpp"

namespace evsoh {
namespace {

double quantize(double value, double resolution) { return resolution * std::round(value / resolution); }

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Sampling schedule for one channel: regular when min == max rate, otherwise
// every interval is drawn uniformly between 1/max and 1/min seconds and
// snapped to the simulation step.
class Schedule {
public:
    Schedule(double min_rate, double max_rate, double step, std::mt19937_64& rng)
        : lo_(1.0 / max_rate), hi_(1.0 / min_rate), step_(step), rng_(&rng) {}

    bool due(double t) {
        if (t + 1e-9 < next_) return false;
        next_ = t + draw();
        return true;
    }

private:
    double draw() {
        double dt = lo_;
        if (hi_ > lo_) dt = std::uniform_real_distribution<double>(lo_, hi_)(*rng_);
        return std::max(step_, step_ * std::round(dt / step_));
    }

    double lo_, hi_, step_;
    std::mt19937_64* rng_;
    double next_ = 0.0;
};

// Constant-power operating point: U = OCV + I R and U I = P.
double cp_current(double ocv, double resistance, double power) {
    if (resistance <= 0.0) return power / ocv;
    return (-ocv + std::sqrt(ocv * ocv + 4.0 * resistance * power)) / (2.0 * resistance);
}

}  // namespace

SimulatedCharge simulate_charge(const PackModel& model, const ChargeOptions& opt) {
    if (!(opt.power_w > 0.0)) throw DomainError("charging power must be > 0");
    if (!opt.window.valid()) throw DomainError("window requires U_low < U_high");
    if (!(opt.step_s > 0.0)) throw DomainError("simulation step must be > 0");
    if (opt.rest_s < 0.0) throw DomainError("rest duration must be >= 0");
    opt.sensor.validate();

    const auto& spec = model.spec();
    const double n_p = spec.n_parallel;
    const auto [z_min, z_max] = model.cell_charge_domain();
    const double ocv_floor = model.ocv_at_cell_charge(z_min);
    // The upper bound is what a defect-free pack of this cell could reach; a weak
    // block only makes the BMS stop early, which the trace itself must show.
    const double ocv_ceiling = spec.n_series * model.cell().ocv(model.cell().charge_domain().second);
    if (opt.window.low < ocv_floor || opt.window.high > ocv_ceiling)
        throw WindowUnreachableError("window [" + format_number(opt.window.low) + ", " +
                                     format_number(opt.window.high) +
                                     "] V lies outside the pack's reachable OCV span [" +
                                     format_number(ocv_floor) + ", " + format_number(ocv_ceiling) + "] V");

    const double resistance = model.series_resistance();
    const double z0 = model.charge_origin();
    const double ocv0 = model.ocv_at_cell_charge(z0);
    {
        const double i0 = cp_current(ocv0, resistance, opt.power_w);
        if (ocv0 + i0 * resistance >= opt.window.high)
            throw WindowUnreachableError("window unreachable: overpotential at " +
                                         format_number(opt.power_w) + " W lifts the starting voltage to " +
                                         format_number(ocv0 + i0 * resistance) + " V, above U_high");
    }

    std::mt19937_64 rng(opt.seed);
    const auto& sensor = opt.sensor;
    Schedule sched_u(sensor.min_rate_hz, sensor.max_rate_hz, opt.step_s, rng);
    Schedule sched_i(sensor.min_rate_hz, sensor.max_rate_hz, opt.step_s, rng);
    Schedule sched_soc(sensor.min_rate_hz, sensor.max_rate_hz, opt.step_s, rng);
    Schedule sched_temp(sensor.min_rate_hz, sensor.max_rate_hz, opt.step_s, rng);
    Schedule sched_cell(opt.cell_sample_rate_hz, opt.cell_sample_rate_hz, opt.step_s, rng);
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    SimulatedCharge out;
    auto& tr = out.traces;
    const int n_temp = std::max(0, opt.temperature_channels);
    tr.temperatures.resize(static_cast<std::size_t>(n_temp));
    if (opt.export_cells) tr.cell_voltages.resize(model.blocks().size());

    tr.metadata["source"] = "simulator";
    tr.metadata["vehicle"] = spec.vehicle;
    tr.metadata["pack_seed"] = std::to_string(model.seed());
    tr.metadata["noise_seed"] = std::to_string(opt.seed);
    tr.metadata["power_w"] = format_number(opt.power_w);
    tr.metadata["ambient_c"] = format_number(opt.ambient_c);

    const double usable = model.usable_capacity_ah();
    auto soc_of = [&](double z) {
        const double s = spec.bms.soc_max_percent * (z - z0) * n_p / usable;
        return std::clamp(s, 0.0, spec.bms.soc_max_percent);
    };
    auto temperature_of = [&](int channel, double charge_hours) {
        const double base = opt.ambient_c + 0.3 * static_cast<double>(channel % 3 - 1);
        const double t = base + opt.temperature_rise_c_per_h * charge_hours;
        return t > opt.temperature_cap_c ? std::max(opt.temperature_cap_c, base) : t;
    };

    auto emit = [&](double t, double u, double i, double soc, double charge_hours, double z, bool charging) {
        if (sched_u.due(t)) tr.voltage.push(t, quantize(u + sensor.voltage_noise * unit_normal(rng), sensor.voltage_resolution));
        if (sched_i.due(t)) tr.current.push(t, quantize(i + sensor.current_noise * unit_normal(rng), sensor.current_resolution));
        if (sched_soc.due(t)) tr.soc.push(t, quantize(soc, sensor.soc_resolution));
        if (n_temp > 0 && sched_temp.due(t))
            for (int c = 0; c < n_temp; ++c)
                tr.temperatures[static_cast<std::size_t>(c)].push(
                    t, quantize(temperature_of(c, charge_hours), sensor.temperature_resolution));
        if (opt.export_cells && sched_cell.due(t)) {
            for (std::size_t b = 0; b < model.blocks().size(); ++b) {
                double v = model.block_ocv(b, z);
                if (charging) v += i * model.block_resistance(b);
                tr.cell_voltages[b].push(t, quantize(v, sensor.voltage_resolution / 100.0));
            }
        }
    };

    // Rest at the 0 % point.
    double t = 0.0;
    const auto rest_steps = static_cast<long>(std::llround(opt.rest_s / opt.step_s));
    for (long k = 0; k < rest_steps; ++k) {
        t = static_cast<double>(k) * opt.step_s;
        const double u = ocv0 - opt.relaxation_amplitude_v * std::exp(-t / opt.relaxation_tau_s);
        emit(t, u, 0.0, 0.0, 0.0, z0, false);
    }

    auto& truth = out.truth;
    truth.start_ocv_v = ocv0;
    truth.degradation = model.degradation();
    truth.q_pe_ah = model.cell().q_pe_ah * n_p;
    truth.q_ne_ah = model.cell().q_ne_ah * n_p;
    truth.q_b_ah = model.cell().q_b_ah * n_p;
    truth.usable_capacity_ah = usable;
    truth.pack_seed = model.seed();
    truth.noise_seed = opt.seed;

    const double t_start = static_cast<double>(rest_steps) * opt.step_s;
    const double dq_per_amp = opt.step_s / kSecondsPerHour / n_p;  // cell Ah per A over one step
    double z = z0;
    double i_prev = 0.0;
    double u_prev = ocv0 - opt.relaxation_amplitude_v * std::exp(-t_start / opt.relaxation_tau_s);
    double charge_ah = 0.0, energy_wh = 0.0;
    std::optional<double> low_q, low_e;
    for (long k = 0;; ++k) {
        t = t_start + static_cast<double>(k) * opt.step_s;
        // Trapezoidal charge update, consistent with integrating the samples.
        double i_next = i_prev > 0.0 ? i_prev : cp_current(ocv0, resistance, opt.power_w);
        double z_next = z;
        bool hit_domain = false;
        for (int it = 0; it < 4; ++it) {
            z_next = z + 0.5 * (i_prev + i_next) * dq_per_amp;
            if (z_next >= z_max) {
                z_next = z_max;
                hit_domain = true;
            }
            i_next = cp_current(model.ocv_at_cell_charge(z_next), resistance, opt.power_w);
        }
        const double ocv = model.ocv_at_cell_charge(z_next);
        const double u = ocv + i_next * resistance;
        const double dq = (z_next - z) * n_p;
        const double de = 0.5 * (u_prev * i_prev + u * i_next) * opt.step_s / kSecondsPerHour;

        if (!low_q && u >= opt.window.low) {
            const double f = u_prev < opt.window.low ? (opt.window.low - u_prev) / (u - u_prev) : 0.0;
            low_q = charge_ah + f * dq;
            low_e = energy_wh + f * de;
        }
        if (low_q && !truth.window_charge_ah && u >= opt.window.high) {
            const double f = (opt.window.high - u_prev) / (u - u_prev);
            truth.window_charge_ah = charge_ah + f * dq - *low_q;
            truth.window_energy_kwh = (energy_wh + f * de - *low_e) / 1000.0;
        }
        charge_ah += dq;
        energy_wh += de;
        z = z_next;
        i_prev = i_next;
        u_prev = u;

        const double hours = static_cast<double>(k) * opt.step_s / kSecondsPerHour;
        emit(t, u, i_next, soc_of(z), hours, z, true);

        double block_max = 0.0;
        for (std::size_t b = 0; b < model.blocks().size(); ++b)
            block_max = std::max(block_max, model.block_ocv(b, z) + i_next * model.block_resistance(b));
        if (u >= model.bms_high_v()) truth.termination = "pack_voltage";
        else if (block_max >= model.cell().v_max) truth.termination = "cell_voltage";
        else if (hit_domain) truth.termination = "domain";
        if (!truth.termination.empty()) {
            truth.end_voltage_v = u;
            truth.charge_duration_s = t - t_start;
            break;
        }
    }
    truth.charge_ah = charge_ah;
    truth.energy_kwh = energy_wh / 1000.0;
    return out;
}

SimulatedCharge simulate_charge(const PackModel& model, double power_w, VoltageWindow window,
                                const SensorSpec& sensor, double ambient_c, std::uint64_t seed) {
    ChargeOptions opt;
    opt.power_w = power_w;
    opt.window = window;
    opt.sensor = sensor;
    opt.ambient_c = ambient_c;
    opt.seed = seed;
    return simulate_charge(model, opt);
}

}  // namespace evsoh
