#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evsoh/half_cell.hpp"
#include "evsoh/session.hpp"

namespace evsoh {

struct DVCurve {
    std::vector<double> capacity_ah;  // cumulative charge from the session start
    std::vector<double> dv;           // dU/dQ * Q_N, volts
    double q_n_used = 0.0;
    double min_dq_ah = 0.0;
    std::size_t merged_steps = 0;  // grid steps folded into longer differences
    std::string smoothing;         // processing applied to the input session

    std::size_t size() const { return dv.size(); }
    double span_ah() const { return capacity_ah.empty() ? 0.0 : capacity_ah.back() - capacity_ah.front(); }
};

struct DvOptions {
    // Differences are taken over at least current_resolution * grid_step of charge.
    double current_resolution_a = 0.1;
};

// Forward differences on the cumulative-capacity axis of a cropped, smoothed
// session.
DVCurve dv_curve(const ChargingSession& session, double q_n_ah, const DvOptions& options = {});

// Where a characteristic DV peak sits and which electrode it belongs to.
struct FeatureRule {
    std::string name;
    ElectrodeRole electrode;
    double stoichiometry;  // electrode stoichiometry at which the peak forms
    double band_low;       // search band as fractions of the curve span
    double band_high;
};

enum class BalancingRule {
    // Q_B = NE origin - PE origin, both extrapolated from the feature pairs.
    electrode_origins,
    // Q_B = distance from the upper NE feature to the end of the curve.
    upper_cutoff,
};

std::string_view to_string(BalancingRule r);
BalancingRule balancing_rule_from_string(std::string_view s);

struct ChemistryTemplate {
    std::string name;
    Chemistry chemistry = Chemistry::custom;
    // Exactly two NE features, and zero or two PE features, in ascending
    // stoichiometry per electrode.
    std::vector<FeatureRule> features;
    BalancingRule balancing = BalancingRule::electrode_origins;
    double prominence_fraction = 0.15;  // of median |DV|
    double separation_fraction = 0.05;  // of the curve span
    double smoothing_fraction = 0.01;

    void validate() const;
    static ChemistryTemplate nmc_graphite();
    static ChemistryTemplate lfp_graphite();
    static ChemistryTemplate for_chemistry(Chemistry c);
};

struct Peak {
    double capacity_ah = 0.0;
    double dv = 0.0;
    double prominence = 0.0;
    std::string feature;  // template feature name, empty when unassigned
};

// Local maxima with topographic prominence >= min_prominence, then thinned
// greedily by prominence so that kept peaks are >= min_separation apart.
std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_prominence,
                             double min_separation);

struct FeatureSet {
    Chemistry chemistry = Chemistry::custom;
    std::string template_name;
    BalancingRule balancing = BalancingRule::electrode_origins;
    std::optional<double> q_ne;
    std::optional<double> q_pe;
    std::optional<double> q_b;
    std::vector<Peak> peaks;  // every detected peak; assigned ones carry a name
    double span_ah = 0.0;
    std::vector<std::string> caveats;

    const Peak* feature(std::string_view name) const;
    bool empty() const { return !q_ne && !q_pe && !q_b; }
};

FeatureSet detect_features(const DVCurve& curve, const ChemistryTemplate& tmpl);
FeatureSet detect_features(const DVCurve& curve, Chemistry chemistry);

struct ModeProvenance {
    std::string mode;
    std::string features;
    std::string formula;
};

struct DegradationReport {
    std::optional<double> lam_ne;
    std::optional<double> lam_pe;
    std::optional<double> lli;
    double reference_capacity_ah = 0.0;  // LLI denominator
    std::vector<ModeProvenance> provenance;
    std::vector<std::string> caveats;
};

DegradationReport degradation_modes(const FeatureSet& aged, const FeatureSet& reference);

struct DvAnalysis {
    DVCurve curve;
    FeatureSet features;
};

// smooth -> crop to the voltage window -> DV curve -> features, on a
// synchronized session.
DvAnalysis analyze_session(const ChargingSession& session, VoltageWindow window, double q_n_ah,
                           const ChemistryTemplate& tmpl, double smoothing_fraction = 0.01,
                           const DvOptions& options = {});

}  // namespace evsoh
