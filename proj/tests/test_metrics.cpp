#include <doctest.h>

#include <cmath>
#include <string>

#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"
#include "evsoh/metrics.hpp"
#include "evsoh/simulate.hpp"
#include "evsoh/vehicles.hpp"

using namespace evsoh;

namespace {

ChargingSession from_fn(double t_end, double dt, double (*u)(double), double (*i)(double)) {
    ChargingSession s;
    for (double t = 0.0; t <= t_end + 1e-9; t += dt) {
        s.time.push_back(t);
        s.voltage.push_back(u(t));
        s.current.push_back(i(t));
        s.power.push_back(u(t) * i(t));
    }
    return s;
}

ChargingSession simulated(const PackSpec& spec, const DegradationState& d = {}, const SensorSpec& sensor = vehicles::vw_sensor()) {
    return synchronize(simulate_charge(build_pack(spec, d, 0), spec.nominal_energy_kwh * 1000.0 / 30.0, spec.window,
                                       sensor, 20.0, 1)
                           .traces);
}

}  // namespace

TEST_CASE("trapezoid integration of closed-form currents") {
    // i(t) = 2 + t / 1000 over 3600 s: Q = 2 * 3600 + 3600^2 / 2000 coulombs, exact for a linear integrand.
    const auto s = from_fn(3600.0, 1.0, [](double) { return 400.0; }, [](double t) { return 2.0 + t / 1000.0; });
    const double q = 2.0 * 3600.0 + 3600.0 * 3600.0 / 2000.0;
    CHECK(integrate_capacity(s).coulombs() == doctest::Approx(q).epsilon(1e-12));
    CHECK(integrate_energy(s).joules() == doctest::Approx(400.0 * q).epsilon(1e-12));
}

TEST_CASE("energy uses the power channel and capacity uses current") {
    auto s = from_fn(100.0, 1.0, [](double t) { return 360.0 + t; }, [](double) { return 10.0; });
    const double e = integrate_energy(s).joules();
    // Closed form: 10 * (360 t + t^2 / 2) at t = 100.
    CHECK(e == doctest::Approx(10.0 * (36000.0 + 5000.0)));
    for (auto& p : s.power) p = 0.0;
    CHECK(integrate_energy(s).joules() == 0.0);
    CHECK(integrate_capacity(s).amp_hours() == doctest::Approx(1000.0 / 3600.0));
}

TEST_CASE("negative charging current violates the sign convention") {
    auto s = from_fn(10.0, 1.0, [](double) { return 400.0; }, [](double) { return -5.0; });
    CHECK_THROWS_AS(integrate_capacity(s), SignConventionError);
    CHECK_THROWS_AS(integrate_energy(s), SignConventionError);
    auto small = from_fn(10.0, 1.0, [](double) { return 400.0; }, [](double) { return -0.1; });
    CHECK_NOTHROW(integrate_capacity(small));
}

TEST_CASE("nominal-voltage energy approximation") {
    CHECK(approx_energy(Charge::amp_hours(145.0), 400.0).kilowatt_hours() == doctest::Approx(58.0));
    CHECK_THROWS_AS(approx_energy(Charge::amp_hours(1.0), 0.0), DomainError);
}

TEST_CASE("SOH against each reference") {
    const auto v = soh(Charge::amp_hours(130.5), Energy::kilowatt_hours(52.2), {ReferenceKind::nominal, 145.0, 58.0});
    CHECK(v.soh_q == doctest::Approx(0.9));
    CHECK(v.soh_e == doctest::Approx(0.9));
    try {
        soh(Charge::amp_hours(1), Energy::kilowatt_hours(1), {ReferenceKind::nominal, std::nullopt, 58.0});
        FAIL("expected ReferenceError");
    } catch (const ReferenceError& e) {
        CHECK(std::string(e.what()).find("registration documents") != std::string::npos);
    }
    CHECK_THROWS_AS(soh(Charge::amp_hours(1), Energy::kilowatt_hours(1), {ReferenceKind::initial, 0.0, 1.0}),
                    ReferenceError);
}

TEST_CASE("pristine simulated pack measures SOH near one, against both references") {
    const auto spec = vehicles::id3();
    MeasureOptions o;
    o.initial_capacity_ah = 144.0;
    o.initial_energy_kwh = 59.0;
    const auto r = measure(simulated(spec), spec, o);
    REQUIRE(r.nominal);
    REQUIRE(r.initial);
    CHECK(r.nominal->soh_q == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.initial->soh_q == doctest::Approx(r.q_calc_ah / 144.0));
    CHECK(r.validation->compliant());
    CHECK(r.window_kind == WindowKind::voltage);
    CHECK(r.vehicle == spec.vehicle);
}

TEST_CASE("measured window charge matches the simulator truth") {
    const auto spec = vehicles::id3();
    const DegradationState d{0.0, 0.0, 0.05};
    const auto sim = simulate_charge(build_pack(spec, d, 0), spec.nominal_energy_kwh * 1000.0 / 30.0, spec.window,
                                     SensorSpec::ideal(), 20.0, 0);
    const auto r = measure(synchronize(sim.traces), spec);
    CHECK(r.q_calc_ah == doctest::Approx(*sim.truth.window_charge_ah).epsilon(2e-3));
    CHECK(r.e_calc_kwh == doctest::Approx(*sim.truth.window_energy_kwh).epsilon(2e-3));
}

TEST_CASE("LLI lowers measured capacity monotonically") {
    const auto spec = vehicles::id3();
    double prev = 1e9;
    for (double lli : {0.0, 0.02, 0.05, 0.08}) {
        const double q = measure(simulated(spec, {0, 0, lli}), spec).q_calc_ah;
        CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("SOC-window measurements") {
    const auto spec = vehicles::id3();
    MeasureOptions o;
    o.soc_window = std::pair{0.0, 100.0};
    o.validate = false;
    const auto r = measure(simulated(spec), spec, o);
    CHECK(r.window_kind == WindowKind::soc);
    CHECK_FALSE(r.validation.has_value());
    CHECK(r.q_calc_ah > measure(simulated(spec), spec).q_calc_ah);
}

TEST_CASE("a window that is never reached refuses the measurement") {
    const auto spec = vehicles::id3();
    MeasureOptions o;
    o.window = VoltageWindow{360.0, 460.0};
    try {
        measure(simulated(spec), spec, o);
        FAIL("expected WindowNotCoveredError");
    } catch (const WindowNotCoveredError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("measurement refused") != std::string::npos);
        CHECK(msg.find(std::string(kWindowNotCoveredExplanation)) != std::string::npos);
    }
}

TEST_CASE("missing temperature still yields a result, with a non-compliant verdict") {
    const auto spec = vehicles::id3();
    auto raw = simulate_charge(build_pack(spec, {}, 0), spec.nominal_energy_kwh * 1000.0 / 30.0, spec.window,
                               vehicles::vw_sensor(), 20.0, 0)
                   .traces;
    raw.temperatures.clear();
    const auto r = measure(synchronize(raw), spec);
    CHECK(r.q_calc_ah > 0.0);
    CHECK(r.validation->verdict == Verdict::non_compliant);
}

TEST_CASE("integration is additive over adjacent spans") {
    const auto s = simulated(vehicles::id3());
    const std::size_t mid = s.size() / 3;
    const double whole = integrate_capacity(s).coulombs();
    const double parts = integrate_capacity(s.slice(0, mid + 1)).coulombs() + integrate_capacity(s.slice(mid, s.size())).coulombs();
    CHECK(parts == doctest::Approx(whole).epsilon(1e-12));
    const double e_whole = integrate_energy(s).joules();
    const double e_parts = integrate_energy(s.slice(0, mid + 1)).joules() + integrate_energy(s.slice(mid, s.size())).joules();
    CHECK(e_parts == doctest::Approx(e_whole).epsilon(1e-12));
}

TEST_CASE("enlarging the window never decreases Q or E") {
    const auto spec = vehicles::id3();
    const auto s = simulated(spec);
    MeasureOptions o;
    o.validate = false;
    double q_prev = 0.0, e_prev = 0.0;
    for (const VoltageWindow w : {VoltageWindow{400, 420}, VoltageWindow{390, 420}, VoltageWindow{390, 440},
                                  VoltageWindow{370, 440}, VoltageWindow{360, 450}}) {
        o.window = w;
        const auto r = measure(s, spec, o);
        CHECK(r.q_calc_ah >= q_prev);
        CHECK(r.e_calc_kwh >= e_prev);
        q_prev = r.q_calc_ah;
        e_prev = r.e_calc_kwh;
    }
}

TEST_CASE("SOH is invariant under scaling charge and reference together") {
    for (double k : {0.5, 2.0, 10.0}) {
        const auto a = soh(Charge::amp_hours(130.0), Energy::kilowatt_hours(52.0), {ReferenceKind::nominal, 145.0, 58.0});
        const auto b = soh(Charge::amp_hours(130.0 * k), Energy::kilowatt_hours(52.0 * k),
                           {ReferenceKind::nominal, 145.0 * k, 58.0 * k});
        CHECK(a.soh_q == doctest::Approx(b.soh_q));
        CHECK(a.soh_e == doctest::Approx(b.soh_e));
    }
}
