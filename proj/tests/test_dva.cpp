#include <doctest.h>

#include <cmath>
#include <random>

#include "evsoh/dva.hpp"
#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"
#include "evsoh/simulate.hpp"
#include "evsoh/vehicles.hpp"

using namespace evsoh;

namespace {

ChargingSession linear_session(double q_total_ah, double u0, double u1, double current, double step = 1.0) {
    ChargingSession s;
    const double t_end = q_total_ah / current * 3600.0;
    for (double t = 0.0; t <= t_end + 1e-9; t += step) {
        s.time.push_back(t);
        s.voltage.push_back(u0 + (u1 - u0) * t / t_end);
        s.current.push_back(current);
        s.power.push_back(s.voltage.back() * current);
    }
    s.metadata.grid_step = step;
    return s;
}

ChargingSession simulated(const PackSpec& spec, const DegradationState& d, const SensorSpec& sensor, std::uint64_t seed) {
    return synchronize(simulate_charge(build_pack(spec, d, 0), spec.nominal_energy_kwh * 1000.0 / 30.0, spec.window,
                                       sensor, 20.0, seed)
                           .traces);
}

DvAnalysis analyze(const PackSpec& spec, const DegradationState& d, const SensorSpec& sensor = SensorSpec::ideal(),
                   std::uint64_t seed = 0) {
    return analyze_session(simulated(spec, d, sensor, seed), spec.window, spec.nominal_capacity_ah,
                           ChemistryTemplate::for_chemistry(spec.chemistry));
}

}  // namespace

TEST_CASE("DV of a linear voltage ramp is the normalized slope") {
    // 90 V over 145 Ah with Q_N = 145 Ah: dU/dQ * Q_N = 90 V everywhere.
    const auto c = dv_curve(linear_session(145.0, 360.0, 450.0, 5.0), 145.0);
    REQUIRE(c.size() > 100);
    for (double v : c.dv) CHECK(v == doctest::Approx(90.0).epsilon(1e-6));
    CHECK(c.span_ah() == doctest::Approx(145.0).epsilon(1e-3));
    CHECK(c.q_n_used == 145.0);
    CHECK(c.merged_steps == 0);
}

TEST_CASE("differences stretch to the current resolution at low current") {
    const auto c = dv_curve(linear_session(1.0, 360.0, 361.0, 0.04), 145.0, {0.1});
    CHECK(c.merged_steps > 0);
    for (std::size_t k = 1; k < c.size(); ++k) CHECK(c.capacity_ah[k] - c.capacity_ah[k - 1] >= c.min_dq_ah - 1e-15);
    for (double v : c.dv) CHECK(v == doctest::Approx(145.0).epsilon(1e-6));
}

TEST_CASE("DV curve input checks") {
    auto s = linear_session(1.0, 360.0, 361.0, 1.0);
    CHECK_THROWS_AS(dv_curve(s, 0.0), DomainError);
    s.current[10] = -5.0;
    s.current[11] = -5.0;
    CHECK_THROWS_AS(dv_curve(s, 145.0), DataError);
    CHECK_THROWS_AS(dv_curve(linear_session(1.0, 1, 2, 1).slice(0, 1), 145.0), InsufficientDataError);
}

TEST_CASE("peak prominence on separated Gaussians equals their heights") {
    std::vector<double> x, y;
    for (int k = 0; k <= 1000; ++k) {
        const double t = k / 1000.0;
        x.push_back(t);
        y.push_back(1.0 * std::exp(-std::pow((t - 0.2) / 0.02, 2)) + 2.0 * std::exp(-std::pow((t - 0.6) / 0.02, 2)) +
                    0.5 * std::exp(-std::pow((t - 0.64) / 0.005, 2)));
    }
    const auto all = find_peaks(x, y, 0.1, 0.0);
    REQUIRE(all.size() == 3);
    CHECK(all[0].capacity_ah == doctest::Approx(0.2).epsilon(1e-3));
    CHECK(all[0].prominence == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(all[1].prominence == doctest::Approx(2.0).epsilon(1e-3));
    // The shoulder peak sits on the flank of the large one.
    CHECK(all[2].prominence < 0.5);
    const auto thinned = find_peaks(x, y, 0.1, 0.1);
    CHECK(thinned.size() == 2);
    CHECK(find_peaks(x, y, 1.5, 0.0).size() == 1);
}

TEST_CASE("flat tops count once") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5, 6}, y{0, 1, 3, 3, 3, 1, 0};
    const auto p = find_peaks(x, y, 0.5, 0.0);
    REQUIRE(p.size() == 1);
    CHECK(p[0].capacity_ah == 3.0);
}

TEST_CASE("templates") {
    CHECK_NOTHROW(ChemistryTemplate::nmc_graphite().validate());
    CHECK_NOTHROW(ChemistryTemplate::lfp_graphite().validate());
    CHECK(ChemistryTemplate::lfp_graphite().balancing == BalancingRule::upper_cutoff);
    CHECK_THROWS_AS(ChemistryTemplate::for_chemistry(Chemistry::custom), DomainError);
    auto t = ChemistryTemplate::nmc_graphite();
    t.features.pop_back();
    CHECK_THROWS_AS(t.validate(), ValidationError);
    for (auto r : {BalancingRule::electrode_origins, BalancingRule::upper_cutoff})
        CHECK(balancing_rule_from_string(to_string(r)) == r);
}

TEST_CASE("feature spacing recovers the pack electrode capacities") {
    const auto spec = vehicles::id3();
    const DegradationState d{0.03, 0.02, 0.05};
    const auto sim = simulate_charge(build_pack(spec, d, 0), spec.nominal_energy_kwh * 1000.0 / 30.0, spec.window,
                                     SensorSpec::ideal(), 20.0, 0);
    const auto a = analyze_session(synchronize(sim.traces), spec.window, spec.nominal_capacity_ah,
                                   ChemistryTemplate::nmc_graphite());
    REQUIRE(a.features.q_ne);
    REQUIRE(a.features.q_pe);
    CHECK(*a.features.q_ne == doctest::Approx(sim.truth.q_ne_ah).epsilon(0.02));
    CHECK(*a.features.q_pe == doctest::Approx(sim.truth.q_pe_ah).epsilon(0.02));
    for (const char* name : {"NE1", "NE2", "PE1", "PE2"}) CHECK(a.features.feature(name) != nullptr);
}

TEST_CASE("identical sessions diagnose zero degradation") {
    const auto spec = vehicles::id3();
    const auto a = analyze(spec, {});
    const auto r = degradation_modes(a.features, a.features);
    CHECK(*r.lam_ne == 0.0);
    CHECK(*r.lam_pe == 0.0);
    CHECK(*r.lli == 0.0);
    CHECK(r.provenance.size() == 3);
}

TEST_CASE("diagnosed LLI grows with injected LLI") {
    const auto spec = vehicles::id3();
    const auto ref = analyze(spec, {});
    double prev = -1.0;
    for (double lli : {0.02, 0.05, 0.10}) {
        CAPTURE(lli);
        const auto r = degradation_modes(analyze(spec, {0, 0, lli}).features, ref.features);
        REQUIRE(r.lli);
        CHECK(*r.lli == doctest::Approx(lli).epsilon(0.1));
        CHECK(*r.lli > prev);
        prev = *r.lli;
    }
}

TEST_CASE("LFP has no PE feature, so lam_pe stays absent") {
    const auto spec = vehicles::model3_lfp();
    const auto ref = analyze(spec, {});
    const auto aged = analyze(spec, {0.03, 0.02, 0.05});
    CHECK_FALSE(aged.features.q_pe);
    const auto r = degradation_modes(aged.features, ref.features);
    CHECK_FALSE(r.lam_pe.has_value());
    REQUIRE(r.lam_ne);
    REQUIRE(r.lli);
    CHECK(*r.lam_ne == doctest::Approx(0.03).epsilon(0.34));
    CHECK(*r.lli == doctest::Approx(0.05).epsilon(0.2));
}

TEST_CASE("comparing across templates is rejected") {
    const auto nmc = analyze(vehicles::id3(), {});
    const auto lfp = analyze(vehicles::model3_lfp(), {});
    CHECK_THROWS_AS(degradation_modes(nmc.features, lfp.features), ValidationError);
}

TEST_CASE("a parameter-free ramp has no features") {
    const auto c = dv_curve(linear_session(145.0, 360.0, 450.0, 5.0), 145.0);
    const auto f = detect_features(c, Chemistry::nmc_graphite);
    CHECK(f.empty());
    CHECK_FALSE(f.caveats.empty());
}

TEST_CASE("DV of a strictly increasing voltage is strictly positive") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> du(1e-4, 0.05), di(0.5, 20.0);
    ChargingSession s;
    double u = 360.0;
    for (int k = 0; k < 5000; ++k) {
        s.time.push_back(k);
        s.voltage.push_back(u);
        s.current.push_back(di(rng));
        s.power.push_back(u * s.current.back());
        u += du(rng);
    }
    s.metadata.grid_step = 1.0;
    for (double v : dv_curve(s, 145.0).dv) CHECK(v > 0.0);
}

TEST_CASE("features do not depend on a uniform voltage offset") {
    const auto spec = vehicles::id3();
    auto s = crop_to_window(smooth_session(simulated(spec, {}, SensorSpec::ideal(), 0), 0.01), 360, 450);
    const auto tmpl = ChemistryTemplate::nmc_graphite();
    const auto base = detect_features(dv_curve(s, 145.0), tmpl);
    for (auto& v : s.voltage) v += 12.5;
    const auto shifted = detect_features(dv_curve(s, 145.0), tmpl);
    REQUIRE(base.q_ne);
    CHECK(*shifted.q_ne == doctest::Approx(*base.q_ne));
    CHECK(*shifted.q_pe == doctest::Approx(*base.q_pe));
    CHECK(*shifted.q_b == doctest::Approx(*base.q_b));
}

TEST_CASE("cell-to-cell variation fades the DV features") {
    auto spec = vehicles::id3();
    double prev = 1e9;
    for (double var : {0.0, 0.005, 0.01, 0.02}) {
        CAPTURE(var);
        spec.cell_variation = var;
        const auto a = analyze_session(simulated(spec, {}, SensorSpec::ideal(), 0), {360.0, 440.0}, spec.nominal_capacity_ah,
                                       ChemistryTemplate::nmc_graphite());
        const auto* ne2 = a.features.feature("NE2");
        REQUIRE(ne2 != nullptr);
        CHECK(ne2->prominence < prev);
        prev = ne2->prominence;
    }
}
