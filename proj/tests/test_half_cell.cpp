#include <doctest.h>

#include <cmath>
#include <functional>

#include "evsoh/errors.hpp"
#include "evsoh/half_cell.hpp"

using namespace evsoh;

namespace {

// Location of the largest |dU/dx| inside [lo, hi], by central differences.
double steepest(const std::function<double(double)>& u, double lo, double hi) {
    double best_x = lo, best = -1.0;
    const double h = 1e-5;
    for (double x = lo; x <= hi; x += 1e-4) {
        const double d = std::abs(u(x + h) - u(x - h)) / (2 * h);
        if (d > best) {
            best = d;
            best_x = x;
        }
    }
    return best_x;
}

}  // namespace

TEST_CASE("tabulated curves interpolate the analytic potential at and between nodes") {
    const auto g = curves::graphite(4001);
    for (double x : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK(g.potential(x) == doctest::Approx(curves::graphite_potential(x)));
    const double mid = 0.5 * (g.grid()[10] + g.grid()[11]);
    CHECK(g.potential(mid) == doctest::Approx(0.5 * (g.potentials()[10] + g.potentials()[11])));
}

TEST_CASE("potential outside [0, 1] is a domain error") {
    const auto n = curves::nmc();
    CHECK_THROWS_AS(n.potential(-1e-6), DomainError);
    CHECK_THROWS_AS(n.potential(1.0 + 1e-6), DomainError);
}

TEST_CASE("cell OCV rises along the charging axis") {
    const auto pe = curves::nmc();
    const auto ne = curves::graphite();
    double prev = -1e9;
    for (int k = 1; k < 100; ++k) {
        const double s = k / 100.0;
        CHECK(pe.potential(s) >= pe.potential(s - 0.01));
        CHECK(ne.potential(s) <= ne.potential(s - 0.01));
        const double ocv = pe.potential(s) - ne.potential(s);
        CHECK(ocv > prev);
        prev = ocv;
    }
}

TEST_CASE("DV features sit at the documented stoichiometries") {
    CHECK(steepest(curves::graphite_potential, 0.15, 0.35) == doctest::Approx(curves::kGraphiteStageLow).epsilon(0.02));
    CHECK(steepest(curves::graphite_potential, 0.40, 0.65) == doctest::Approx(curves::kGraphiteStageHigh).epsilon(0.02));
    CHECK(steepest(curves::nmc_potential, 0.30, 0.55) == doctest::Approx(curves::kNmcFeatureLow).epsilon(0.02));
    CHECK(steepest(curves::nmc_potential, 0.70, 0.86) == doctest::Approx(curves::kNmcFeatureHigh).epsilon(0.02));
}

TEST_CASE("LFP plateau is flat in the interior") {
    const double lo = curves::lfp_potential(0.3), hi = curves::lfp_potential(0.8);
    CHECK(hi - lo < 0.03);
    CHECK(hi > lo);
}

TEST_CASE("chemistry names round trip") {
    for (auto c : {Chemistry::nmc_graphite, Chemistry::lfp_graphite, Chemistry::custom})
        CHECK(chemistry_from_string(to_string(c)) == c);
    CHECK_THROWS(chemistry_from_string("nca"));
}

TEST_CASE("curve construction rejects inconsistent grids") {
    CHECK_THROWS(HalfCellCurve({0.0, 1.0}, {1.0}, ElectrodeRole::positive));
    CHECK_THROWS(HalfCellCurve({0.0, 0.5, 0.4, 1.0}, {1, 2, 3, 4}, ElectrodeRole::positive));
}
