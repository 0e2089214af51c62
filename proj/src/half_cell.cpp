#include "evsoh/half_cell.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evsoh/errors.hpp"

namespace evsoh {

std::string_view to_string(Chemistry c) {
    switch (c) {
        case Chemistry::nmc_graphite: return "nmc_graphite";
        case Chemistry::lfp_graphite: return "lfp_graphite";
        case Chemistry::custom: return "custom";
    }
    return "custom";
}

Chemistry chemistry_from_string(std::string_view s) {
    if (s == "nmc_graphite") return Chemistry::nmc_graphite;
    if (s == "lfp_graphite") return Chemistry::lfp_graphite;
    if (s == "custom") return Chemistry::custom;
    throw FormatError("unknown chemistry '" + std::string(s) + "'");
}

HalfCellCurve::HalfCellCurve(std::vector<double> grid, std::vector<double> potential,
                             ElectrodeRole role)
    : grid_(std::move(grid)), potential_(std::move(potential)), role_(role) {
    if (grid_.size() < 2 || grid_.size() != potential_.size())
        throw ValidationError("half-cell curve needs >= 2 points and matching potential samples");
    if (grid_.front() != 0.0 || grid_.back() != 1.0)
        throw ValidationError("half-cell grid must cover [0, 1]");
    for (std::size_t k = 1; k < grid_.size(); ++k) {
        if (!(grid_[k] > grid_[k - 1]))
            throw ValidationError("half-cell grid must be strictly increasing");
        const double step = potential_[k] - potential_[k - 1];
        if (role_ == ElectrodeRole::positive && !(step > 0.0))
            throw ValidationError("positive-electrode potential must rise with delithiation");
        if (role_ == ElectrodeRole::negative && !(step < 0.0))
            throw ValidationError("negative-electrode potential must fall with lithiation");
    }
    const double h = 1.0 / static_cast<double>(grid_.size() - 1);
    uniform_ = std::all_of(grid_.begin(), grid_.end(), [&, k = 0.0](double g) mutable {
        return std::abs(g - h * k++) < 1e-12;
    });
}

HalfCellCurve HalfCellCurve::tabulate(const std::function<double(double)>& fn, std::size_t points,
                                      ElectrodeRole role) {
    if (points < 2) throw DomainError("tabulation needs at least two points");
    std::vector<double> grid(points), pot(points);
    for (std::size_t k = 0; k < points; ++k) {
        grid[k] = k + 1 == points ? 1.0 : static_cast<double>(k) / static_cast<double>(points - 1);
        pot[k] = fn(grid[k]);
    }
    return HalfCellCurve(std::move(grid), std::move(pot), role);
}

double HalfCellCurve::potential(double s) const {
    if (!(s >= 0.0 && s <= 1.0))
        throw DomainError("stoichiometry " + std::to_string(s) + " outside [0, 1]");
    std::size_t k;
    if (uniform_) {
        k = std::min(static_cast<std::size_t>(s * static_cast<double>(grid_.size() - 1)),
                     grid_.size() - 2);
    } else {
        auto it = std::upper_bound(grid_.begin(), grid_.end(), s);
        k = std::min(static_cast<std::size_t>(std::distance(grid_.begin(), it)), grid_.size() - 1);
        k = k == 0 ? 0 : k - 1;
        k = std::min(k, grid_.size() - 2);
    }
    const double w = (s - grid_[k]) / (grid_[k + 1] - grid_[k]);
    return potential_[k] + w * (potential_[k + 1] - potential_[k]);
}

namespace curves {
namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace

double graphite_potential(double x) {
    return 0.085 - 0.01 * x + 0.045 * logistic((kGraphiteStageHigh - x) / 0.012) +
           0.07 * logistic((kGraphiteStageLow - x) / 0.016) + 0.10 * logistic((0.10 - x) / 0.02) +
           0.6 * std::exp(-x / 0.02);
}

double nmc_potential(double y) {
    return 3.55 + 0.6 * y + 0.045 * logistic((y - kNmcFeatureLow) / 0.018) +
           0.04 * logistic((y - kNmcFeatureHigh) / 0.018) - 0.4 * std::exp(-y / 0.035) +
           0.25 * std::exp((y - 1.0) / 0.05);
}

// Near-flat two-phase plateau; the only structure sits at the ends.
double lfp_potential(double y) {
    return 3.41 + 0.04 * y - 0.5 * std::exp(-y / 0.03) + 0.3 * std::exp((y - 1.0) / 0.02);
}

HalfCellCurve graphite(std::size_t points) {
    return HalfCellCurve::tabulate(graphite_potential, points, ElectrodeRole::negative);
}

HalfCellCurve nmc(std::size_t points) {
    return HalfCellCurve::tabulate(nmc_potential, points, ElectrodeRole::positive);
}

HalfCellCurve lfp(std::size_t points) {
    return HalfCellCurve::tabulate(lfp_potential, points, ElectrodeRole::positive);
}

}  // namespace curves
}  // namespace evsoh
