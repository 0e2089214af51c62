#include "evsoh/pack_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "evsoh/errors.hpp"

namespace evsoh {
namespace {

// Root of an increasing function on [lo, hi]; clamps when target is outside.
template <typename F>
double solve_increasing(F&& f, double lo, double hi, double target) {
    if (f(lo) >= target) return lo;
    if (f(hi) <= target) return hi;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Standard normal truncated at +-3 sigma.
double truncated_normal(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        const double v = normal(rng);
        if (std::abs(v) <= 3.0) return v;
    }
}

CellModel degrade(const CellModel& pristine, const DegradationState& s, double cell_nominal_ah) {
    CellModel c = pristine;
    c.q_ne_ah = pristine.q_ne_ah * (1.0 - s.lam_ne);
    c.q_pe_ah = pristine.q_pe_ah * (1.0 - s.lam_pe);
    c.q_b_ah = pristine.q_b_ah + s.lli * cell_nominal_ah;
    return c;
}

}  // namespace

double CellModel::ocv(double z) const {
    if (!pe_curve || !ne_curve) throw ValidationError("cell model has no half-cell curves");
    return pe_curve->potential(pe_stoichiometry(z)) - ne_curve->potential(ne_stoichiometry(z));
}

std::pair<double, double> CellModel::charge_domain() const {
    const double lo = std::max(0.0, q_b_ah);
    const double hi = std::min(q_pe_ah, q_b_ah + q_ne_ah);
    return {lo, hi};
}

CellModel make_cell(Chemistry chemistry, double q_pe_ah, double q_ne_ah, double q_b_ah,
                    double r_internal_ohm, double v_max) {
    CellModel c;
    c.ne_curve = std::make_shared<const HalfCellCurve>(curves::graphite());
    switch (chemistry) {
        case Chemistry::lfp_graphite:
            c.pe_curve = std::make_shared<const HalfCellCurve>(curves::lfp());
            break;
        case Chemistry::nmc_graphite:
        case Chemistry::custom:
            c.pe_curve = std::make_shared<const HalfCellCurve>(curves::nmc());
            break;
    }
    c.q_pe_ah = q_pe_ah;
    c.q_ne_ah = q_ne_ah;
    c.q_b_ah = q_b_ah;
    c.r_internal_ohm = r_internal_ohm;
    c.v_max = v_max;
    return c;
}

void DegradationState::validate() const {
    auto check = [](double v, const char* name) {
        if (!(v >= 0.0 && v < 1.0))
            throw DomainError(std::string(name) + " must lie in [0, 1), got " + std::to_string(v));
    };
    check(lam_ne, "lam_ne");
    check(lam_pe, "lam_pe");
    check(lli, "lli");
}

DegradationState DegradationState::then(const DegradationState& next) const {
    if (next.is_zero()) return *this;
    if (is_zero()) return next;
    return {1.0 - (1.0 - lam_ne) * (1.0 - next.lam_ne), 1.0 - (1.0 - lam_pe) * (1.0 - next.lam_pe),
            lli + next.lli};
}

void PackSpec::validate() const {
    std::vector<std::string> violated;
    if (n_series < 1) violated.push_back("n_series >= 1");
    if (n_parallel < 1) violated.push_back("n_parallel >= 1");
    if (!window.valid()) violated.push_back("window U_low < U_high");
    if (!cell.pe_curve || !cell.ne_curve) violated.push_back("cell half-cell curves present");
    if (!(cell.q_pe_ah > 0.0)) violated.push_back("q_pe > 0");
    if (!(cell.q_ne_ah > 0.0)) violated.push_back("q_ne > 0");
    if (cell.r_internal_ohm < 0.0) violated.push_back("r_internal >= 0");
    if (!(nominal_capacity_ah > 0.0)) violated.push_back("nominal capacity > 0");
    if (!(nominal_energy_kwh > 0.0)) violated.push_back("nominal energy > 0");
    if (!(nominal_voltage_v > 0.0)) violated.push_back("nominal voltage > 0");
    if (n_parallel >= 1 && cell.q_ne_ah < cell_nominal_capacity_ah())
        violated.push_back("q_ne >= usable cell capacity (anode oversizing)");
    if (!(cell_variation >= 0.0 && cell_variation < 0.2)) violated.push_back("0 <= cell_variation < 0.2");
    for (const auto& d : defective_cells) {
        if (n_series >= 1 && d.index >= static_cast<std::size_t>(n_series))
            violated.push_back("defective cell index < n_series");
        if (!(d.capacity_fraction > 0.0 && d.capacity_fraction <= 1.0))
            violated.push_back("defective capacity_fraction in (0, 1]");
    }
    if (!(bms.low_v < bms.high_v)) violated.push_back("BMS low anchor < high anchor");
    if (!(bms.soc_max_percent > 0.0 && bms.soc_max_percent <= 100.0))
        violated.push_back("BMS soc_max in (0, 100]");
    if (bms.anchor_sigma_v < 0.0) violated.push_back("BMS anchor sigma >= 0");
    if (violated.empty() && cell.q_pe_ah > 0.0) {
        const auto [lo, hi] = cell.charge_domain();
        if (!(hi > lo)) {
            violated.push_back("electrode balance leaves a non-empty charge domain");
        } else {
            const double v_min_cell = cell.ocv(lo);
            if (window.high > n_series * cell.v_max) violated.push_back("U_high <= n_series * cell v_max");
            if (window.low < n_series * v_min_cell)
                violated.push_back("U_low >= n_series * minimum cell OCV");
        }
    }
    if (!violated.empty()) {
        std::ostringstream os;
        os << "invalid pack spec '" << vehicle << "': violated ";
        for (std::size_t k = 0; k < violated.size(); ++k) os << (k ? "; " : "") << violated[k];
        throw ValidationError(os.str());
    }
}

void SensorSpec::validate() const {
    if (!(voltage_resolution > 0.0 && current_resolution > 0.0 && soc_resolution > 0.0 &&
          temperature_resolution > 0.0))
        throw ValidationError("sensor resolutions must be > 0");
    if (!(min_rate_hz > 0.0 && max_rate_hz >= min_rate_hz))
        throw ValidationError("sensor sample rates must satisfy 0 < min <= max");
    if (voltage_noise < 0.0 || current_noise < 0.0)
        throw ValidationError("sensor noise must be >= 0");
}

SensorSpec SensorSpec::ideal() {
    SensorSpec s;
    s.voltage_resolution = 1e-9;
    s.current_resolution = 1e-9;
    s.soc_resolution = 1e-9;
    s.temperature_resolution = 1e-9;
    return s;
}

double PackModel::block_charge(std::size_t block, double z) const {
    if (uniform_) return z;
    const auto& b = blocks_[block];
    return z_align_ + (z - z_align_) / b.capacity_scale + b.offset_ah;
}

double PackModel::block_ocv(std::size_t block, double z) const {
    return cell_.ocv(block_charge(block, z));
}

double PackModel::ocv_at_cell_charge(double z) const {
    if (uniform_) return spec_.n_series * cell_.ocv(z);
    double sum = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) sum += block_ocv(k, z);
    return sum;
}

double PackModel::max_block_ocv(double z) const {
    if (uniform_) return cell_.ocv(z);
    double best = -1e300;
    for (std::size_t k = 0; k < blocks_.size(); ++k) best = std::max(best, block_ocv(k, z));
    return best;
}

double PackModel::block_resistance(std::size_t block) const {
    return cell_.r_internal_ohm / (spec_.n_parallel * blocks_[block].capacity_scale);
}

double PackModel::ocv(double charged_ah) const { return ocv_at_cell_charge(cell_charge(charged_ah)); }

void PackModel::finalize() {
    const auto [clo, chi] = cell_.charge_domain();
    if (!(chi > clo)) throw ValidationError("degraded cell has an empty charge domain");
    double lo = -1e300, hi = 1e300;
    for (const auto& b : blocks_) {
        // invert z_eff = z_a + (z - z_a) / c + d
        const double a = z_align_ + (clo - b.offset_ah - z_align_) * b.capacity_scale;
        const double e = z_align_ + (chi - b.offset_ah - z_align_) * b.capacity_scale;
        lo = std::max(lo, a);
        hi = std::min(hi, e);
    }
    const double pad = 1e-9 * (chi - clo);
    lo += pad;
    hi -= pad;
    if (!(hi > lo)) throw ValidationError("cell-to-cell spread leaves no common charge domain");
    domain_ = {lo, hi};

    auto f = [this](double z) { return ocv_at_cell_charge(z); };
    if (f(lo) > bms_low_v_)
        throw ValidationError("BMS lower anchor " + std::to_string(bms_low_v_) +
                              " V is below the lowest reachable pack OCV");
    z_origin_ = solve_increasing(f, lo, hi, bms_low_v_);
    const double z_pack_top = solve_increasing(f, z_origin_, hi, bms_high_v_);
    const double z_cell_top = solve_increasing([this](double z) { return max_block_ocv(z); },
                                               z_origin_, hi, cell_.v_max);
    usable_ah_ = (std::min(z_pack_top, z_cell_top) - z_origin_) * spec_.n_parallel;

    r_series_ = 0.0;
    for (std::size_t k = 0; k < blocks_.size(); ++k) r_series_ += block_resistance(k);
}

PackModel build_pack(const PackSpec& spec, const DegradationState& degradation, std::uint64_t seed) {
    spec.validate();
    degradation.validate();

    PackModel m;
    m.spec_ = spec;
    m.seed_ = seed;
    m.pristine_cell_ = spec.cell;
    m.cell_ = spec.cell;

    std::mt19937_64 rng(seed);
    m.bms_low_v_ = spec.bms.low_v + spec.bms.anchor_sigma_v * truncated_normal(rng);
    m.bms_high_v_ = spec.bms.high_v + spec.bms.anchor_sigma_v * truncated_normal(rng);

    const double sigma = spec.cell_variation;
    const double c_nom = spec.cell_nominal_capacity_ah();
    m.blocks_.resize(static_cast<std::size_t>(spec.n_series));
    for (auto& b : m.blocks_) {
        const double dc = truncated_normal(rng);
        const double dz = truncated_normal(rng);
        b.capacity_scale = 1.0 + sigma * dc;
        b.offset_ah = sigma * c_nom * dz;
    }
    for (const auto& d : spec.defective_cells) m.blocks_[d.index].capacity_scale *= d.capacity_fraction;
    m.uniform_ = sigma == 0.0 && spec.defective_cells.empty();

    // Blocks are aligned where the nominal pristine pack sits at 0 % SOC.
    const auto [clo, chi] = spec.cell.charge_domain();
    m.z_align_ = solve_increasing([&](double z) { return spec.n_series * spec.cell.ocv(z); },
                                  clo, chi, spec.bms.low_v);

    m.degradation_ = degradation;
    m.cell_ = degrade(m.pristine_cell_, degradation, c_nom);
    m.finalize();
    return m;
}

double pack_ocv(const PackModel& model, double charged_ah) {
    const double cap = model.usable_capacity_ah();
    if (!(charged_ah >= 0.0 && charged_ah <= cap * (1.0 + 1e-12)))
        throw DomainError("charge " + std::to_string(charged_ah) + " Ah outside [0, " +
                          std::to_string(cap) + "] Ah");
    return model.ocv(charged_ah);
}

PackModel apply_degradation(const PackModel& model, const DegradationState& state) {
    state.validate();
    if (state.is_zero()) return model;
    PackModel m = model;
    m.degradation_ = model.degradation_.then(state);
    m.degradation_.validate();
    m.cell_ = degrade(m.pristine_cell_, m.degradation_, m.spec_.cell_nominal_capacity_ah());
    m.finalize();
    return m;
}

}  // namespace evsoh
