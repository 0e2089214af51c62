#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace evsoh {

enum class ElectrodeRole { positive, negative };

enum class Chemistry { nmc_graphite, lfp_graphite, custom };

std::string_view to_string(Chemistry c);
Chemistry chemistry_from_string(std::string_view s);

// Tabulated half-cell open-circuit potential against Li/Li+.
//
// The stoichiometry axis runs in the charging direction for both electrodes:
// degree of delithiation for the positive electrode, degree of lithiation for
// the negative one. With that convention the positive potential rises and the
// negative potential falls along the axis, so U_PE - U_NE increases while
// charging.
class HalfCellCurve {
public:
    HalfCellCurve(std::vector<double> grid, std::vector<double> potential, ElectrodeRole role);

    // Samples `fn` on a uniform grid of `points` nodes over [0, 1].
    static HalfCellCurve tabulate(const std::function<double(double)>& fn, std::size_t points,
                                  ElectrodeRole role);

    // Linear interpolation; DomainError outside [0, 1].
    double potential(double stoichiometry) const;

    ElectrodeRole role() const { return role_; }
    std::span<const double> grid() const { return grid_; }
    std::span<const double> potentials() const { return potential_; }

private:
    std::vector<double> grid_;
    std::vector<double> potential_;
    ElectrodeRole role_;
    bool uniform_ = false;
};

// Synthetic analytic electrode curves. Each graphite staging transition and
// each NMC inflection is a logistic step, so the location of every DV peak is
// known in closed form (see the stoichiometries below).
namespace curves {

inline constexpr double kGraphiteStageLow = 0.22;   // stage 3/2 transition
inline constexpr double kGraphiteStageHigh = 0.52;  // stage 2/1 transition
inline constexpr double kNmcFeatureLow = 0.405;
inline constexpr double kNmcFeatureHigh = 0.78;

double graphite_potential(double lithiation);
double nmc_potential(double delithiation);
double lfp_potential(double delithiation);

HalfCellCurve graphite(std::size_t points = 4001);
HalfCellCurve nmc(std::size_t points = 4001);
HalfCellCurve lfp(std::size_t points = 4001);

}  // namespace curves

}  // namespace evsoh
