#include <doctest.h>

#include <cmath>

#include "evsoh/ingestion.hpp"

#include "evsoh/errors.hpp"
#include "evsoh/simulate.hpp"
#include "evsoh/vehicles.hpp"

using namespace evsoh;

namespace {

ChargeOptions options_for(const PackSpec& spec, const SensorSpec& sensor, std::uint64_t seed = 0) {
    ChargeOptions o;
    o.power_w = spec.nominal_energy_kwh * 1000.0 / 30.0;
    o.window = spec.window;
    o.sensor = sensor;
    o.seed = seed;
    return o;
}

bool on_grid(double v, double res) { return std::abs(v / res - std::round(v / res)) < 1e-6; }

}  // namespace

TEST_CASE("simulation is deterministic per seed") {
    const auto spec = vehicles::cupra_born();
    const auto m = build_pack(spec, {}, 5);
    const auto a = simulate_charge(m, options_for(spec, vehicles::vw_sensor(), 9));
    const auto b = simulate_charge(m, options_for(spec, vehicles::vw_sensor(), 9));
    const auto c = simulate_charge(m, options_for(spec, vehicles::vw_sensor(), 10));
    CHECK(a.traces.voltage == b.traces.voltage);
    CHECK(a.traces.current == b.traces.current);
    CHECK(a.truth.window_charge_ah == b.truth.window_charge_ah);
    CHECK_FALSE(a.traces.voltage == c.traces.voltage);
    CHECK(a.truth.charge_ah == c.truth.charge_ah);  // noise seed does not touch the physics
}

TEST_CASE("pristine presets hold their nominal capacity inside the window") {
    for (const auto& name : {"id3", "taycan", "model3_lfp", "model_y"}) {
        CAPTURE(name);
        const auto spec = vehicles::by_name(name);
        const auto sim = simulate_charge(build_pack(spec, {}, 0), options_for(spec, SensorSpec::ideal()));
        REQUIRE(sim.truth.window_charge_ah);
        CHECK(*sim.truth.window_charge_ah == doctest::Approx(spec.nominal_capacity_ah).epsilon(0.01));
        CHECK(sim.truth.termination == "pack_voltage");
    }
}

TEST_CASE("ideal sensor traces are constant power and conserve charge") {
    const auto spec = vehicles::id3();
    const auto opt = options_for(spec, SensorSpec::ideal());
    const auto sim = simulate_charge(build_pack(spec, {}, 0), opt);
    const auto& u = sim.traces.voltage;
    const auto& i = sim.traces.current;
    REQUIRE(u.t == i.t);
    double q = 0.0;
    for (std::size_t k = 0; k < i.size(); ++k) {
        if (i.v[k] > 0.0) CHECK(u.v[k] * i.v[k] == doctest::Approx(opt.power_w).epsilon(1e-6));
        if (k > 0) q += 0.5 * (i.v[k] + i.v[k - 1]) * (i.t[k] - i.t[k - 1]) / 3600.0;
    }
    CHECK(q == doctest::Approx(sim.truth.charge_ah).epsilon(1e-6));
    // Mean window voltage lies inside the window.
    const double mean_u = *sim.truth.window_energy_kwh * 1000.0 / *sim.truth.window_charge_ah;
    CHECK(mean_u > spec.window.low);
    CHECK(mean_u < spec.window.high);
}

TEST_CASE("rest segment relaxes exponentially towards the start OCV") {
    const auto spec = vehicles::id3();
    auto opt = options_for(spec, SensorSpec::ideal());
    const auto sim = simulate_charge(build_pack(spec, {}, 0), opt);
    const auto& u = sim.traces.voltage;
    for (std::size_t k : {0u, 300u, 1200u}) {
        const double t = u.t[k];
        CHECK(u.v[k] == doctest::Approx(sim.truth.start_ocv_v - opt.relaxation_amplitude_v *
                                                                     std::exp(-t / opt.relaxation_tau_s)));
        CHECK(sim.traces.current.v[k] == 0.0);
    }
}

TEST_CASE("gateway sensor quantizes and samples irregularly") {
    const auto spec = vehicles::id3();
    const auto s = vehicles::vw_sensor();
    const auto sim = simulate_charge(build_pack(spec, {}, 0), options_for(spec, s, 3));
    for (double v : sim.traces.voltage.v) CHECK(on_grid(v, s.voltage_resolution));
    for (double v : sim.traces.current.v) CHECK(on_grid(v, s.current_resolution));
    double lo = 1e9, hi = 0.0;
    const auto& t = sim.traces.voltage.t;
    for (std::size_t k = 1; k < t.size(); ++k) {
        lo = std::min(lo, t[k] - t[k - 1]);
        hi = std::max(hi, t[k] - t[k - 1]);
    }
    CHECK(lo >= 1.0);
    CHECK(hi <= 10.0);
    CHECK(hi > lo);
}

TEST_CASE("optional channels") {
    const auto spec = vehicles::id3();
    auto opt = options_for(spec, vehicles::vw_sensor());
    opt.export_cells = true;
    opt.temperature_channels = 3;
    const auto sim = simulate_charge(build_pack(spec, {}, 0), opt);
    CHECK(sim.traces.cell_voltages.size() == static_cast<std::size_t>(spec.n_series));
    REQUIRE(sim.traces.temperatures.size() == 3);
    for (const auto& ch : sim.traces.temperatures)
        for (double v : ch.v) CHECK(v <= opt.temperature_cap_c + 1.0);
    CHECK(sim.traces.metadata.at("vehicle") == spec.vehicle);
    CHECK(sim.traces.metadata.at("source") == "simulator");
}

TEST_CASE("a weak block ends the charge on the cell limit before U_high") {
    auto spec = vehicles::id3();
    spec.defective_cells.push_back({5, 0.8});
    const auto sim = simulate_charge(build_pack(spec, {}, 0), options_for(spec, SensorSpec::ideal()));
    CHECK(sim.truth.termination == "cell_voltage");
    CHECK_FALSE(sim.truth.window_charge_ah.has_value());
    CHECK(sim.truth.end_voltage_v < spec.window.high);
}

TEST_CASE("unreachable windows are rejected up front") {
    const auto spec = vehicles::id3();
    const auto m = build_pack(spec, {}, 0);
    auto high = options_for(spec, SensorSpec::ideal());
    high.window = {360.0, 480.0};
    CHECK_THROWS_AS(simulate_charge(m, high), WindowUnreachableError);
    auto low = options_for(spec, SensorSpec::ideal());
    low.window = {200.0, 450.0};
    CHECK_THROWS_AS(simulate_charge(m, low), WindowUnreachableError);
    auto bad = options_for(spec, SensorSpec::ideal());
    bad.power_w = 0.0;
    CHECK_THROWS_AS(simulate_charge(m, bad), DomainError);
}

TEST_CASE("ground truth reports pack-level electrode capacities") {
    const auto spec = vehicles::id3();
    const DegradationState s{0.03, 0.02, 0.05};
    const auto sim = simulate_charge(build_pack(spec, s, 0), options_for(spec, SensorSpec::ideal()));
    CHECK(sim.truth.degradation == s);
    CHECK(sim.truth.q_ne_ah == doctest::Approx(spec.cell.q_ne_ah * 0.97 * spec.n_parallel));
    CHECK(sim.truth.q_pe_ah == doctest::Approx(spec.cell.q_pe_ah * 0.98 * spec.n_parallel));
}

TEST_CASE("synchronized sessions are bit-identical for identical seeds") {
    const auto spec = vehicles::cupra_born();
    const auto m = build_pack(spec, {}, 8);
    const auto a = synchronize(simulate_charge(m, options_for(spec, vehicles::vw_sensor(), 2)).traces);
    const auto b = synchronize(simulate_charge(build_pack(spec, {}, 8), options_for(spec, vehicles::vw_sensor(), 2)).traces);
    CHECK(a.time == b.time);
    CHECK(a.voltage == b.voltage);
    CHECK(a.current == b.current);
    CHECK(a.soc == b.soc);
}

TEST_CASE("quantized current integrates to the model charge within one step per sample") {
    const auto spec = vehicles::id3();
    const auto s = vehicles::vw_sensor();
    const auto sim = simulate_charge(build_pack(spec, {}, 0), options_for(spec, s, 6));
    const auto& i = sim.traces.current;
    double q = 0.0;
    for (std::size_t k = 1; k < i.size(); ++k) q += 0.5 * (i.v[k] + i.v[k - 1]) * (i.t[k] - i.t[k - 1]) / 3600.0;
    // Each sample is off by at most res/2, plus the final interval the trace may miss.
    const double bound = s.current_resolution * (i.t.back() - i.t.front()) / 3600.0 + i.v.back() * 10.0 / 3600.0;
    CHECK(std::abs(q - sim.truth.charge_ah) <= bound);
}

TEST_CASE("smoothed quantized voltage never decreases during a constant-power charge") {
    const auto spec = vehicles::id3();
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const auto s = synchronize(simulate_charge(build_pack(spec, {}, 0), options_for(spec, vehicles::vw_sensor(), seed)).traces);
        const auto u = smooth(s.voltage, 0.01);
        bool monotone = true;
        for (std::size_t k = 1; k < u.size(); ++k) monotone = monotone && u[k] >= u[k - 1] - 1e-9;
        CHECK(monotone);
    }
}

TEST_CASE("a defective block never adds charge") {
    const auto spec = vehicles::id3();
    const double healthy = simulate_charge(build_pack(spec, {}, 0), options_for(spec, SensorSpec::ideal())).truth.charge_ah;
    double prev = healthy;
    for (double f : {0.99, 0.95, 0.9, 0.8}) {
        auto weak = spec;
        weak.defective_cells.push_back({17, f});
        const double q = simulate_charge(build_pack(weak, {}, 0), options_for(weak, SensorSpec::ideal())).truth.charge_ah;
        CHECK(q <= healthy);
        CHECK(q <= prev);
        prev = q;
    }
}
