#include "evsoh/dva.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"

namespace evsoh {
namespace {

std::string fmt(double v, int precision = 5) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

double median_abs(std::vector<double> v) {
    for (double& x : v) x = std::abs(x);
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::vector<const FeatureRule*> rules_for(const ChemistryTemplate& t, ElectrodeRole role) {
    std::vector<const FeatureRule*> out;
    for (const auto& r : t.features)
        if (r.electrode == role) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->stoichiometry < b->stoichiometry; });
    return out;
}

}  // namespace

DVCurve dv_curve(const ChargingSession& s, double q_n_ah, const DvOptions& options) {
    if (!(q_n_ah > 0.0)) throw DomainError("nominal capacity Q_N must be > 0");
    if (s.size() < 2) throw InsufficientDataError("DV curve needs at least two samples");
    const std::size_t n = s.size();
    std::vector<double> q(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        const double dq = 0.5 * (s.current[k] + s.current[k - 1]) * (s.time[k] - s.time[k - 1]) / kSecondsPerHour;
        q[k] = q[k - 1] + dq;
        if (dq < -1e-12)
            throw DataError("cumulative capacity decreases at t = " + fmt(s.time[k], 10) +
                            " s; the DV curve needs strictly positive charging current");
    }
    const double step = s.metadata.grid_step > 0.0 ? s.metadata.grid_step : s.time[1] - s.time[0];
    DVCurve c;
    c.q_n_used = q_n_ah;
    c.min_dq_ah = std::max(options.current_resolution_a * step / kSecondsPerHour, 1e-12);
    for (const auto& p : s.metadata.processing) c.smoothing += (c.smoothing.empty() ? "" : "; ") + p;
    std::size_t k = 0;
    while (k + 1 < n) {
        std::size_t j = k + 1;
        while (j + 1 < n && q[j] - q[k] < c.min_dq_ah) ++j;
        if (q[j] - q[k] < c.min_dq_ah) break;
        c.merged_steps += j - k - 1;
        c.capacity_ah.push_back(q[k]);
        c.dv.push_back((s.voltage[j] - s.voltage[k]) / (q[j] - q[k]) * q_n_ah);
        k = j;
    }
    if (c.dv.empty()) throw InsufficientDataError("session carries too little charge for a DV curve");
    return c;
}

std::string_view to_string(BalancingRule r) {
    return r == BalancingRule::electrode_origins ? "electrode_origins" : "upper_cutoff";
}

BalancingRule balancing_rule_from_string(std::string_view s) {
    if (s == "electrode_origins") return BalancingRule::electrode_origins;
    if (s == "upper_cutoff") return BalancingRule::upper_cutoff;
    throw FormatError("unknown balancing rule '" + std::string(s) + "'");
}

void ChemistryTemplate::validate() const {
    const auto ne = rules_for(*this, ElectrodeRole::negative);
    const auto pe = rules_for(*this, ElectrodeRole::positive);
    if (ne.size() != 2) throw ValidationError("template '" + name + "' needs exactly two NE features");
    if (!pe.empty() && pe.size() != 2) throw ValidationError("template '" + name + "' needs zero or two PE features");
    if (balancing == BalancingRule::electrode_origins && pe.empty())
        throw ValidationError("template '" + name + "': electrode_origins balancing needs PE features");
    for (const auto& r : features) {
        if (!(r.band_low >= 0.0 && r.band_low < r.band_high && r.band_high <= 1.0))
            throw ValidationError("feature '" + r.name + "': band must satisfy 0 <= low < high <= 1");
        if (!(r.stoichiometry > 0.0 && r.stoichiometry < 1.0))
            throw ValidationError("feature '" + r.name + "': stoichiometry must lie in (0, 1)");
    }
    for (const auto* set : {&ne, &pe})
        if (set->size() == 2 && !((*set)[1]->stoichiometry > (*set)[0]->stoichiometry))
            throw ValidationError("template '" + name + "': feature stoichiometries must differ");
    if (!(prominence_fraction > 0.0)) throw ValidationError("prominence fraction must be > 0");
    if (!(separation_fraction >= 0.0 && separation_fraction < 1.0))
        throw ValidationError("separation fraction must lie in [0, 1)");
    if (!(smoothing_fraction > 0.0 && smoothing_fraction <= 0.5))
        throw ValidationError("smoothing fraction must lie in (0, 0.5]");
}

ChemistryTemplate ChemistryTemplate::nmc_graphite() {
    ChemistryTemplate t;
    t.name = "nmc_graphite";
    t.chemistry = Chemistry::nmc_graphite;
    t.features = {
        {"NE1", ElectrodeRole::negative, curves::kGraphiteStageLow, 0.05, 0.28},
        {"PE1", ElectrodeRole::positive, curves::kNmcFeatureLow, 0.28, 0.48},
        {"NE2", ElectrodeRole::negative, curves::kGraphiteStageHigh, 0.48, 0.72},
        {"PE2", ElectrodeRole::positive, curves::kNmcFeatureHigh, 0.72, 0.95},
    };
    t.balancing = BalancingRule::electrode_origins;
    return t;
}

ChemistryTemplate ChemistryTemplate::lfp_graphite() {
    ChemistryTemplate t;
    t.name = "lfp_graphite";
    t.chemistry = Chemistry::lfp_graphite;
    t.features = {
        {"NE1", ElectrodeRole::negative, curves::kGraphiteStageLow, 0.05, 0.45},
        {"NE2", ElectrodeRole::negative, curves::kGraphiteStageHigh, 0.45, 0.95},
    };
    t.balancing = BalancingRule::upper_cutoff;
    return t;
}

ChemistryTemplate ChemistryTemplate::for_chemistry(Chemistry c) {
    switch (c) {
        case Chemistry::nmc_graphite: return nmc_graphite();
        case Chemistry::lfp_graphite: return lfp_graphite();
        case Chemistry::custom: break;
    }
    throw DomainError("no built-in template for chemistry 'custom'; load one from a template file");
}

std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_prominence,
                             double min_separation) {
    const std::size_t n = y.size();
    std::vector<Peak> cand;
    std::size_t k = 1;
    while (k + 1 < n) {
        if (!(y[k] > y[k - 1])) {
            ++k;
            continue;
        }
        // Flat tops count once, located at their middle.
        std::size_t e = k;
        while (e + 1 < n && y[e + 1] == y[k]) ++e;
        if (e + 1 < n && y[e + 1] < y[k]) {
            const std::size_t mid = (k + e) / 2;
            double left_min = y[k], right_min = y[k];
            for (std::size_t j = k; j-- > 0;) {
                if (y[j] > y[k]) break;
                left_min = std::min(left_min, y[j]);
            }
            for (std::size_t j = e + 1; j < n; ++j) {
                if (y[j] > y[k]) break;
                right_min = std::min(right_min, y[j]);
            }
            const double prom = y[k] - std::max(left_min, right_min);
            if (prom >= min_prominence) cand.push_back({x[mid], y[k], prom, {}});
        }
        k = e + 1;
    }
    std::sort(cand.begin(), cand.end(), [](const Peak& a, const Peak& b) { return a.prominence > b.prominence; });
    std::vector<Peak> kept;
    for (const auto& p : cand)
        if (std::all_of(kept.begin(), kept.end(),
                        [&](const Peak& q) { return std::abs(q.capacity_ah - p.capacity_ah) >= min_separation; }))
            kept.push_back(p);
    std::sort(kept.begin(), kept.end(), [](const Peak& a, const Peak& b) { return a.capacity_ah < b.capacity_ah; });
    return kept;
}

const Peak* FeatureSet::feature(std::string_view name) const {
    for (const auto& p : peaks)
        if (p.feature == name) return &p;
    return nullptr;
}

FeatureSet detect_features(const DVCurve& curve, const ChemistryTemplate& tmpl) {
    tmpl.validate();
    FeatureSet fs;
    fs.chemistry = tmpl.chemistry;
    fs.template_name = tmpl.name;
    fs.balancing = tmpl.balancing;
    if (curve.size() < 3) {
        fs.caveats.push_back("DV curve too short for feature detection");
        return fs;
    }
    const double q0 = curve.capacity_ah.front();
    fs.span_ah = curve.span_ah();
    const auto dv = smooth(curve.dv, tmpl.smoothing_fraction);
    const double threshold = tmpl.prominence_fraction * median_abs(dv);
    fs.peaks = find_peaks(curve.capacity_ah, dv, threshold, tmpl.separation_fraction * fs.span_ah);

    for (const auto& rule : tmpl.features) {
        Peak* best = nullptr;
        for (auto& p : fs.peaks) {
            const double f = (p.capacity_ah - q0) / fs.span_ah;
            if (!p.feature.empty() || f < rule.band_low || f > rule.band_high) continue;
            if (!best || p.prominence > best->prominence) best = &p;
        }
        if (best) best->feature = rule.name;
        else
            fs.caveats.push_back("feature " + rule.name + " not found in band [" + fmt(rule.band_low, 3) + ", " +
                                 fmt(rule.band_high, 3) + "] of the span");
    }
    // Positions relative to the start of the curve.
    auto pos = [&](const FeatureRule* r) -> std::optional<double> {
        if (const Peak* p = fs.feature(r->name)) return p->capacity_ah - q0;
        return std::nullopt;
    };
    const auto ne = rules_for(tmpl, ElectrodeRole::negative);
    const auto pe = rules_for(tmpl, ElectrodeRole::positive);
    const auto n1 = pos(ne[0]), n2 = pos(ne[1]);
    if (n1 && n2 && *n2 > *n1) fs.q_ne = (*n2 - *n1) / (ne[1]->stoichiometry - ne[0]->stoichiometry);
    std::optional<double> p1, p2;
    if (pe.size() == 2) {
        p1 = pos(pe[0]);
        p2 = pos(pe[1]);
        if (p1 && p2 && *p2 > *p1) fs.q_pe = (*p2 - *p1) / (pe[1]->stoichiometry - pe[0]->stoichiometry);
    } else {
        fs.caveats.push_back("template has no PE feature; q_pe and lam_pe cannot be determined");
    }
    if (tmpl.balancing == BalancingRule::electrode_origins) {
        if (fs.q_ne && fs.q_pe) {
            const double ne_origin = *n1 - ne[0]->stoichiometry * *fs.q_ne;
            const double pe_origin = *p1 - pe[0]->stoichiometry * *fs.q_pe;
            fs.q_b = ne_origin - pe_origin;
        }
    } else if (n2) {
        fs.q_b = fs.span_ah - *n2;
        fs.caveats.push_back("Q_B taken as the distance from the upper NE feature to the upper cut-off "
                             "(interpretation); it also moves with PE capacity changes");
    }
    return fs;
}

FeatureSet detect_features(const DVCurve& curve, Chemistry chemistry) {
    return detect_features(curve, ChemistryTemplate::for_chemistry(chemistry));
}

DegradationReport degradation_modes(const FeatureSet& aged, const FeatureSet& ref) {
    if (aged.template_name != ref.template_name || aged.chemistry != ref.chemistry || aged.balancing != ref.balancing)
        throw ValidationError("cannot compare feature sets from different chemistry templates ('" +
                              aged.template_name + "' vs '" + ref.template_name + "')");
    DegradationReport r;
    r.reference_capacity_ah = ref.span_ah;

    auto bounded = [&](const char* name, double raw) -> std::optional<double> {
        if (raw >= 1.0) {
            r.caveats.push_back(std::string(name) + " = " + fmt(raw) + " is outside [0, 1); reported absent");
            return std::nullopt;
        }
        if (raw < 0.0) {
            r.caveats.push_back(std::string(name) + " estimate " + fmt(raw) +
                                " is negative (below feature resolution); reported as 0");
            return 0.0;
        }
        return raw;
    };

    if (aged.q_ne && ref.q_ne) {
        r.lam_ne = bounded("lam_ne", 1.0 - *aged.q_ne / *ref.q_ne);
        r.provenance.push_back({"lam_ne", "NE1, NE2", "1 - Q_NE / Q_NE_ref"});
    }
    if (aged.q_pe && ref.q_pe) {
        r.lam_pe = bounded("lam_pe", 1.0 - *aged.q_pe / *ref.q_pe);
        r.provenance.push_back({"lam_pe", "PE1, PE2", "1 - Q_PE / Q_PE_ref"});
    }
    if (aged.q_b && ref.q_b && ref.span_ah > 0.0) {
        const double shift = aged.balancing == BalancingRule::electrode_origins ? *aged.q_b - *ref.q_b
                                                                               : *ref.q_b - *aged.q_b;
        r.lli = bounded("lli", shift / ref.span_ah);
        r.provenance.push_back({"lli",
                                aged.balancing == BalancingRule::electrode_origins ? "NE1, NE2, PE1, PE2"
                                                                                  : "NE2, upper cut-off",
                                "(Q_B - Q_B_ref) / Q_ref, Q_ref = reference span " + fmt(ref.span_ah) + " Ah"});
    }
    if (!r.lam_ne) r.caveats.push_back("lam_ne absent: NE features missing in one of the sessions");
    if (!r.lam_pe) r.caveats.push_back("lam_pe absent: PE features missing in one of the sessions");
    if (!r.lli) r.caveats.push_back("lli absent: balancing feature Q_B missing in one of the sessions");

    // Fading features hint at an unbalanced pack.
    for (const auto& p : ref.peaks) {
        if (p.feature.empty()) continue;
        const Peak* a = aged.feature(p.feature);
        if (a && a->prominence < 0.5 * p.prominence)
            r.caveats.push_back("feature " + p.feature + " prominence fell to " + fmt(100.0 * a->prominence / p.prominence, 3) +
                                " % of the reference; cell imbalance can fade DV features");
    }
    if (r.lli && ref.span_ah > 0.0) {
        const double loss = 1.0 - aged.span_ah / ref.span_ah;
        r.caveats.push_back("capacity loss over the window " + fmt(100.0 * loss, 3) + " %, LLI " +
                            fmt(100.0 * *r.lli, 3) + " %: check whether aging is LLI dominated");
    }
    return r;
}

DvAnalysis analyze_session(const ChargingSession& session, VoltageWindow window, double q_n_ah,
                           const ChemistryTemplate& tmpl, double smoothing_fraction, const DvOptions& options) {
    const auto cropped = crop_to_window(smooth_session(session, smoothing_fraction), window.low, window.high);
    DvAnalysis a{dv_curve(cropped, q_n_ah, options), {}};
    a.features = detect_features(a.curve, tmpl);
    return a;
}

}  // namespace evsoh
