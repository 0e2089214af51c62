#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evsoh/half_cell.hpp"
#include "evsoh/units.hpp"

namespace evsoh {

// One cell (or one parallel block scaled to a single cell) described by its
// electrode capacities and their relative alignment.
//
// With z the charge put into the cell (Ah, zero where the positive electrode is
// fully lithiated):
//   PE delithiation  y = z / q_pe
//   NE lithiation    x = (z - q_b) / q_ne
//   OCV              U_PE(y) - U_NE(x)
struct CellModel {
    // Curves are immutable and shared between copies.
    std::shared_ptr<const HalfCellCurve> pe_curve;
    std::shared_ptr<const HalfCellCurve> ne_curve;
    double q_pe_ah = 0.0;
    double q_ne_ah = 0.0;
    double q_b_ah = 0.0;
    double r_internal_ohm = 0.0;
    double v_max = 4.2;  // BMS per-cell upper limit

    double pe_stoichiometry(double z) const { return z / q_pe_ah; }
    double ne_stoichiometry(double z) const { return (z - q_b_ah) / q_ne_ah; }
    double ocv(double z) const;
    // Charge interval over which both electrodes stay inside [0, 1].
    std::pair<double, double> charge_domain() const;
};

CellModel make_cell(Chemistry chemistry, double q_pe_ah, double q_ne_ah, double q_b_ah,
                    double r_internal_ohm, double v_max);

struct DegradationState {
    double lam_ne = 0.0;
    double lam_pe = 0.0;
    double lli = 0.0;

    void validate() const;
    bool is_zero() const { return lam_ne == 0.0 && lam_pe == 0.0 && lli == 0.0; }
    // Applying `next` after `*this`: active-material losses compound, LLI adds.
    DegradationState then(const DegradationState& next) const;
    bool operator==(const DegradationState&) const = default;
};

struct DefectiveCell {
    std::size_t index = 0;  // series element (a whole parallel block)
    double capacity_fraction = 1.0;
};

// Battery management anchors: the open-circuit voltage the BMS reports as 0 %
// SOC, the terminal voltage at which it ends a charge, and the SOC value
// reported at that point. `anchor_sigma_v` scatters both voltages per pack,
// modelling the per-vehicle SOC calibration spread seen across a fleet.
struct BmsSpec {
    double low_v = 0.0;
    double high_v = 0.0;
    double soc_max_percent = 100.0;
    double anchor_sigma_v = 0.0;
};

struct PackSpec {
    std::string vehicle;
    Chemistry chemistry = Chemistry::nmc_graphite;
    int n_series = 1;
    int n_parallel = 1;
    CellModel cell;
    double cell_variation = 0.0;  // relative std-dev of block capacity and alignment
    std::vector<DefectiveCell> defective_cells;
    double nominal_capacity_ah = 0.0;
    double nominal_energy_kwh = 0.0;
    double nominal_voltage_v = 0.0;
    VoltageWindow window;
    BmsSpec bms;

    // Nominal capacity of one series element's cell, the unit LLI is expressed in.
    double cell_nominal_capacity_ah() const { return nominal_capacity_ah / n_parallel; }
    // Throws ValidationError naming every violated invariant.
    void validate() const;
};

struct SensorSpec {
    double voltage_resolution = 0.25;
    double current_resolution = 0.1;
    double soc_resolution = 0.4;
    double temperature_resolution = 0.5;
    double min_rate_hz = 1.0;
    double max_rate_hz = 1.0;
    double voltage_noise = 0.0;  // std-dev before quantization
    double current_noise = 0.0;

    void validate() const;
    // Effectively continuous sensor for noiseless oracle runs.
    static SensorSpec ideal();
};

// Per series element draw.
struct BlockState {
    double capacity_scale = 1.0;
    double offset_ah = 0.0;  // alignment offset in unit-cell charge
};

// Immutable simulated pack. Charge coordinates:
//   cell charge z (Ah through one cell of the unit CellModel),
//   pack `charged` (Ah at the pack terminals from the BMS 0 % point).
class PackModel {
public:
    const PackSpec& spec() const { return spec_; }
    const DegradationState& degradation() const { return degradation_; }
    const CellModel& cell() const { return cell_; }
    const CellModel& pristine_cell() const { return pristine_cell_; }
    std::span<const BlockState> blocks() const { return blocks_; }
    std::uint64_t seed() const { return seed_; }

    double bms_low_v() const { return bms_low_v_; }
    double bms_high_v() const { return bms_high_v_; }
    // Cell charge z of `charged == 0`.
    double charge_origin() const { return z_origin_; }
    double alignment_charge() const { return z_align_; }
    // Pack charge from the BMS 0 % point to the upper BMS anchor at rest.
    double usable_capacity_ah() const { return usable_ah_; }
    std::pair<double, double> cell_charge_domain() const { return domain_; }
    double series_resistance() const { return r_series_; }

    // Open-circuit voltage given pack charge from the 0 % point.
    double ocv(double charged_ah) const;
    double ocv_at_cell_charge(double z) const;
    double block_ocv(std::size_t block, double z) const;
    double max_block_ocv(double z) const;
    double block_resistance(std::size_t block) const;
    double cell_charge(double charged_ah) const {
        return z_origin_ + charged_ah / spec_.n_parallel;
    }

private:
    friend PackModel build_pack(const PackSpec&, const DegradationState&, std::uint64_t);
    friend PackModel apply_degradation(const PackModel&, const DegradationState&);

    PackModel() = default;
    double block_charge(std::size_t block, double z) const;
    void finalize();

    PackSpec spec_;
    DegradationState degradation_;
    CellModel cell_;
    CellModel pristine_cell_;
    std::vector<BlockState> blocks_;
    bool uniform_ = true;
    std::uint64_t seed_ = 0;
    double bms_low_v_ = 0.0;
    double bms_high_v_ = 0.0;
    double z_align_ = 0.0;
    double z_origin_ = 0.0;
    double usable_ah_ = 0.0;
    double r_series_ = 0.0;
    std::pair<double, double> domain_{0.0, 0.0};
};

PackModel build_pack(const PackSpec& spec, const DegradationState& degradation, std::uint64_t seed);

double pack_ocv(const PackModel& model, double charged_ah);

PackModel apply_degradation(const PackModel& model, const DegradationState& state);

}  // namespace evsoh
