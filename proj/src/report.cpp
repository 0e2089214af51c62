#include "evsoh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"

namespace evsoh {
namespace {

using nlohmann::json;

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string line(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

std::string num_or_dash(const std::optional<double>& v, const char* fmt = "%.4f") {
    return v ? line(fmt, *v) : std::string("-");
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    return std::nullopt;
}

json soh_json(const std::optional<SohValues>& s) {
    if (!s) return nullptr;
    return {{"soh_q", s->soh_q}, {"soh_e", s->soh_e}};
}

}  // namespace

json to_json(const ValidationReport& r) {
    json findings = json::array();
    for (const auto& f : r.findings)
        findings.push_back({{"check", to_string(f.check)},
                            {"status", to_string(f.status)},
                            {"measured", opt(f.measured)},
                            {"limit", opt(f.limit)},
                            {"detail", f.detail}});
    return {{"verdict", to_string(r.verdict)}, {"findings", findings}};
}

json to_json(const MeasurementResult& r) {
    json j{{"vehicle", r.vehicle},
           {"label", r.label},
           {"q_calc_ah", r.q_calc_ah},
           {"e_calc_kwh", r.e_calc_kwh},
           {"e_approx_kwh", r.e_approx_kwh},
           {"e_approx_is_approximation", true},
           {"window", {{"kind", r.window_kind == WindowKind::voltage ? "voltage" : "soc"},
                       {"low", r.window_low},
                       {"high", r.window_high},
                       {"unit", r.window_kind == WindowKind::voltage ? "V" : "%"}}},
           {"reference", {{"nominal", soh_json(r.nominal)}, {"initial", soh_json(r.initial)}}},
           {"start_time_s", r.start_time_s},
           {"duration_s", r.duration_s},
           {"full_charge_voltage_v", r.full_charge_voltage_v}};
    j["validation"] = r.validation ? to_json(*r.validation) : json(nullptr);
    return j;
}

json to_json(const FeatureSet& f) {
    json peaks = json::array();
    for (const auto& p : f.peaks)
        peaks.push_back({{"feature", p.feature.empty() ? json(nullptr) : json(p.feature)},
                         {"capacity_ah", p.capacity_ah},
                         {"dv_v", p.dv},
                         {"prominence_v", p.prominence}});
    return {{"chemistry", to_string(f.chemistry)},
            {"template", f.template_name},
            {"balancing_rule", to_string(f.balancing)},
            {"q_ne_ah", opt(f.q_ne)},
            {"q_pe_ah", opt(f.q_pe)},
            {"q_b_ah", opt(f.q_b)},
            {"span_ah", f.span_ah},
            {"peaks", peaks},
            {"caveats", f.caveats}};
}

json to_json(const DegradationReport& r) {
    json prov = json::array();
    for (const auto& p : r.provenance) prov.push_back({{"mode", p.mode}, {"features", p.features}, {"formula", p.formula}});
    return {{"lam_ne", opt(r.lam_ne)},
            {"lam_pe", opt(r.lam_pe)},
            {"lli", opt(r.lli)},
            {"lli_denominator", "reference capacity span"},
            {"reference_capacity_ah", r.reference_capacity_ah},
            {"provenance", prov},
            {"caveats", r.caveats}};
}

json to_json(const DegradationState& s) { return {{"lam_ne", s.lam_ne}, {"lam_pe", s.lam_pe}, {"lli", s.lli}}; }

json to_json(const GroundTruth& t) {
    return {{"charge_ah", t.charge_ah},
            {"energy_kwh", t.energy_kwh},
            {"window_charge_ah", opt(t.window_charge_ah)},
            {"window_energy_kwh", opt(t.window_energy_kwh)},
            {"start_ocv_v", t.start_ocv_v},
            {"end_voltage_v", t.end_voltage_v},
            {"charge_duration_s", t.charge_duration_s},
            {"termination", t.termination},
            {"degradation", to_json(t.degradation)},
            {"q_pe_ah", t.q_pe_ah},
            {"q_ne_ah", t.q_ne_ah},
            {"q_b_ah", t.q_b_ah},
            {"usable_capacity_ah", t.usable_capacity_ah},
            {"pack_seed", t.pack_seed},
            {"noise_seed", t.noise_seed}};
}

std::string format_validation(const ValidationReport& r) {
    std::string s = line("%-16s %-13s %14s %14s  %s\n", "check", "status", "measured", "limit", "detail");
    for (const auto& f : r.findings)
        s += line("%-16s %-13s %14s %14s  %s\n", std::string(to_string(f.check)).c_str(),
                  std::string(to_string(f.status)).c_str(), num_or_dash(f.measured, "%.6g").c_str(),
                  num_or_dash(f.limit, "%.6g").c_str(), f.detail.c_str());
    s += line("verdict: %s\n", std::string(to_string(r.verdict)).c_str());
    return s;
}

std::string format_measurement(const MeasurementResult& r) {
    std::string s;
    s += line("%-22s %s\n", "vehicle", r.vehicle.c_str());
    if (!r.label.empty()) s += line("%-22s %s\n", "label", r.label.c_str());
    if (r.window_kind == WindowKind::voltage)
        s += line("%-22s %.2f V to %.2f V\n", "window", r.window_low, r.window_high);
    else
        s += line("%-22s %.2f %% to %.2f %% BMS-SOC\n", "window", r.window_low, r.window_high);
    s += line("%-22s %12.4f Ah\n", "Q_calc", r.q_calc_ah);
    s += line("%-22s %12.4f kWh\n", "E_calc", r.e_calc_kwh);
    s += line("%-22s %12.4f kWh (approximation)\n", "U_n * Q_calc", r.e_approx_kwh);
    s += line("%-22s %12s %12s\n", "reference", "SOH_Q", "SOH_E");
    if (r.nominal) s += line("%-22s %12.4f %12.4f\n", "nominal (Q_N, E_N)", r.nominal->soh_q, r.nominal->soh_e);
    if (r.initial) s += line("%-22s %12.4f %12.4f\n", "initial (Q_0, E_0)", r.initial->soh_q, r.initial->soh_e);
    s += line("%-22s %12.2f h\n", "window duration", r.duration_s / 3600.0);
    if (r.validation) s += line("%-22s %s\n", "protocol verdict", std::string(to_string(r.validation->verdict)).c_str());
    return s;
}

std::string format_degradation(const DegradationReport& r, const FeatureSet& aged, const FeatureSet& ref) {
    std::string s = line("%-10s %14s %14s\n", "feature", "reference_ah", "aged_ah");
    s += line("%-10s %14s %14s\n", "Q_NE", num_or_dash(ref.q_ne).c_str(), num_or_dash(aged.q_ne).c_str());
    s += line("%-10s %14s %14s\n", "Q_PE", num_or_dash(ref.q_pe).c_str(), num_or_dash(aged.q_pe).c_str());
    s += line("%-10s %14s %14s\n", "Q_B", num_or_dash(ref.q_b).c_str(), num_or_dash(aged.q_b).c_str());
    s += line("%-10s %14s\n", "mode", "value");
    s += line("%-10s %14s\n", "LAM_NE", num_or_dash(r.lam_ne).c_str());
    s += line("%-10s %14s\n", "LAM_PE", num_or_dash(r.lam_pe).c_str());
    s += line("%-10s %14s\n", "LLI", num_or_dash(r.lli).c_str());
    for (const auto& c : r.caveats) s += "note: " + c + "\n";
    return s;
}

void write_dv_curve(std::ostream& out, const DVCurve& c) {
    out << "# capacity_ah\tdv_v\n";
    char buf[64];
    for (std::size_t k = 0; k < c.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.6f\t%.6f\n", c.capacity_ah[k], c.dv[k]);
        out << buf;
    }
}

SpreadStats spread(std::span<const double> v) {
    SpreadStats s;
    s.n = v.size();
    if (v.empty()) return s;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    s.min = *mn;
    s.max = *mx;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1 && s.mean != 0.0) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.cv = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::abs(s.mean);
    }
    return s;
}

TrendReport build_trend(std::vector<TrendInput> inputs, const PackSpec& spec, const TrendOptions& options) {
    if (inputs.size() < 2) throw DomainError("fleet and trend statistics need at least two traces");
    const std::string vehicle = inputs.front().session.metadata.label("vehicle", spec.vehicle);
    for (const auto& in : inputs) {
        const auto v = in.session.metadata.label("vehicle", spec.vehicle);
        if (v != vehicle)
            throw ValidationError("traces mix vehicle models ('" + vehicle + "' and '" + v + "' in " + in.source + ")");
    }

    TrendReport r;
    r.vehicle = vehicle;
    r.window = options.measure.window.value_or(spec.window);
    r.soc_window = options.soc_window;

    struct Work {
        TrendEntry entry;
        const ChargingSession* session;
    };
    std::vector<Work> work;
    for (const auto& in : inputs) {
        TrendEntry e;
        e.source = in.source;
        e.label = in.session.metadata.label("label", in.source);
        e.mileage_km = parse_double(in.session.metadata.label("mileage_km"));
        work.push_back({std::move(e), &in.session});
    }
    const bool by_mileage = std::all_of(work.begin(), work.end(), [](const Work& w) { return w.entry.mileage_km.has_value(); });
    std::stable_sort(work.begin(), work.end(), [&](const Work& a, const Work& b) {
        return by_mileage ? *a.entry.mileage_km < *b.entry.mileage_km : a.entry.label < b.entry.label;
    });

    for (auto& w : work) {
        const auto& s = *w.session;
        auto& e = w.entry;
        std::size_t c0 = 0;
        while (c0 < s.size() && s.current[c0] <= options.measure.protocol.current_threshold_a) ++c0;
        e.rest_voltage_v = s.voltage[c0 > 0 ? c0 - 1 : 0];
        e.full_charge_voltage_v = s.voltage.back();
        try {
            e.voltage_window = measure(s, spec, options.measure);
        } catch (const WindowNotCoveredError& ex) {
            e.refused = ex.what();
        }
        MeasureOptions soc = options.measure;
        soc.soc_window = options.soc_window;
        soc.validate = false;
        try {
            e.soc_window = measure(s, spec, soc);
        } catch (const WindowNotCoveredError&) {
        }
        r.entries.push_back(e);
    }

    std::vector<double> ev, es, qv, vf;
    for (const auto& e : r.entries) {
        if (e.voltage_window) {
            ev.push_back(e.voltage_window->e_calc_kwh);
            qv.push_back(e.voltage_window->q_calc_ah);
        }
        if (e.soc_window) es.push_back(e.soc_window->e_calc_kwh);
        vf.push_back(e.full_charge_voltage_v);
    }
    if (!ev.empty()) r.voltage_window_energy = spread(ev);
    if (!qv.empty()) r.voltage_window_capacity = spread(qv);
    if (!es.empty()) r.soc_window_energy = spread(es);
    r.full_charge_voltage = spread(vf);
    r.full_charge_voltage_spread_v = r.full_charge_voltage.max - r.full_charge_voltage.min;

    const auto& ref = r.entries.front();
    for (const auto& e : r.entries) {
        if (e.rest_voltage_v > r.window.low)
            r.warnings.push_back(e.label + ": relaxed voltage " + line("%.2f", e.rest_voltage_v) +
                                 " V lies above U_low " + line("%.2f", r.window.low) + " V");
        if (e.refused)
            r.warnings.push_back(e.label + ": charge ended at " + line("%.2f", e.full_charge_voltage_v) +
                                 " V, below U_high " + line("%.2f", r.window.high) + " V; measurement refused");
        if (&e == &ref) continue;
        const double d_hi = e.full_charge_voltage_v - ref.full_charge_voltage_v;
        const double d_lo = e.rest_voltage_v - ref.rest_voltage_v;
        if (std::abs(d_hi) > options.span_tolerance_v || std::abs(d_lo) > options.span_tolerance_v)
            r.warnings.push_back(e.label + ": operating span " + line("%.2f", e.rest_voltage_v) + " to " +
                                 line("%.2f", e.full_charge_voltage_v) + " V differs from the reference entry " +
                                 ref.label + " (" + line("%.2f", ref.rest_voltage_v) + " to " +
                                 line("%.2f", ref.full_charge_voltage_v) +
                                 " V) by more than " + line("%.2f", options.span_tolerance_v) +
                                 " V; BMS settings may have changed (e.g. a software update)");
    }

    if (options.diagnose) {
        const auto tmpl = options.dva_template.value_or(ChemistryTemplate::for_chemistry(spec.chemistry));
        const double frac = options.measure.smoothing_fraction;
        std::optional<DvAnalysis> ref_dv;
        std::string ref_error;
        try {
            ref_dv = analyze_session(*work.front().session, r.window, spec.nominal_capacity_ah, tmpl, frac);
        } catch (const Error& ex) {
            ref_error = ex.what();
        }
        for (std::size_t k = 1; k < work.size(); ++k) {
            PairDiagnosis d{work[k].entry.label, ref.label, std::nullopt, std::nullopt};
            if (!ref_dv) {
                d.error = "reference: " + ref_error;
            } else {
                try {
                    const auto a = analyze_session(*work[k].session, r.window, spec.nominal_capacity_ah, tmpl, frac);
                    d.report = degradation_modes(a.features, ref_dv->features);
                } catch (const Error& ex) {
                    d.error = ex.what();
                }
            }
            r.diagnoses.push_back(std::move(d));
        }
    }
    return r;
}

json to_json(const TrendReport& r) {
    auto stats = [](const std::optional<SpreadStats>& s) -> json {
        if (!s) return nullptr;
        return {{"n", s->n}, {"min", s->min}, {"max", s->max}, {"mean", s->mean}, {"cv", s->cv}};
    };
    json entries = json::array();
    for (const auto& e : r.entries)
        entries.push_back({{"label", e.label},
                           {"mileage_km", opt(e.mileage_km)},
                           {"source", e.source},
                           {"voltage_window", e.voltage_window ? to_json(*e.voltage_window) : json(nullptr)},
                           {"soc_window", e.soc_window ? to_json(*e.soc_window) : json(nullptr)},
                           {"refused", opt(e.refused)},
                           {"rest_voltage_v", e.rest_voltage_v},
                           {"full_charge_voltage_v", e.full_charge_voltage_v}});
    json diags = json::array();
    for (const auto& d : r.diagnoses)
        diags.push_back({{"label", d.label},
                         {"reference", d.reference_label},
                         {"modes", d.report ? to_json(*d.report) : json(nullptr)},
                         {"error", opt(d.error)}});
    return {{"vehicle", r.vehicle},
            {"window_v", {r.window.low, r.window.high}},
            {"soc_window_percent", {r.soc_window.first, r.soc_window.second}},
            {"entries", entries},
            {"diagnoses", diags},
            {"statistics",
             {{"voltage_window_energy_kwh", stats(r.voltage_window_energy)},
              {"soc_window_energy_kwh", stats(r.soc_window_energy)},
              {"voltage_window_capacity_ah", stats(r.voltage_window_capacity)},
              {"full_charge_voltage_v", stats(r.full_charge_voltage)},
              {"full_charge_voltage_spread_v", r.full_charge_voltage_spread_v}}},
            {"warnings", r.warnings}};
}

std::string format_trend(const TrendReport& r) {
    std::string s = line("vehicle: %s\n", r.vehicle.c_str());
    s += line("%-24s %10s %12s %12s %12s %10s\n", "label", "mileage", "E_volt_kWh", "Q_volt_Ah", "E_soc_kWh", "U_full_V");
    for (const auto& e : r.entries)
        s += line("%-24s %10s %12s %12s %12s %10.2f\n", e.label.c_str(), num_or_dash(e.mileage_km, "%.0f").c_str(),
                  e.voltage_window ? line("%.3f", e.voltage_window->e_calc_kwh).c_str() : "refused",
                  e.voltage_window ? line("%.3f", e.voltage_window->q_calc_ah).c_str() : "-",
                  e.soc_window ? line("%.3f", e.soc_window->e_calc_kwh).c_str() : "-", e.full_charge_voltage_v);
    auto row = [&](const char* name, const std::optional<SpreadStats>& st) {
        if (!st) return line("%-28s %s\n", name, "-");
        return line("%-28s min %9.3f  max %9.3f  mean %9.3f  CV %.5f\n", name, st->min, st->max, st->mean, st->cv);
    };
    s += line("window: %.2f V to %.2f V; SOC window %.1f %% to %.1f %%\n", r.window.low, r.window.high,
              r.soc_window.first, r.soc_window.second);
    s += row("voltage-window energy kWh", r.voltage_window_energy);
    s += row("SOC-window energy kWh", r.soc_window_energy);
    s += row("voltage-window capacity Ah", r.voltage_window_capacity);
    s += row("full-charge voltage V", r.full_charge_voltage);
    s += line("%-28s %.2f V\n", "full-charge voltage spread", r.full_charge_voltage_spread_v);
    for (const auto& d : r.diagnoses) {
        if (d.report)
            s += line("%s vs %s: LAM_NE %s  LAM_PE %s  LLI %s\n", d.label.c_str(), d.reference_label.c_str(),
                      num_or_dash(d.report->lam_ne).c_str(), num_or_dash(d.report->lam_pe).c_str(),
                      num_or_dash(d.report->lli).c_str());
        else
            s += line("%s vs %s: no diagnosis (%s)\n", d.label.c_str(), d.reference_label.c_str(),
                      d.error.value_or("").c_str());
    }
    for (const auto& w : r.warnings) s += "warning: " + w + "\n";
    return s;
}

}  // namespace evsoh
