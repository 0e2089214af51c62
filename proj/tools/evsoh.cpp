// evsoh: simulate, validate, measure, diagnose and compare charging sessions.
//
// Exit codes: 0 artifacts written, 1 error, 2 measurement refused.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evsoh/config.hpp"
#include "evsoh/dva.hpp"
#include "evsoh/errors.hpp"
#include "evsoh/ingestion.hpp"
#include "evsoh/metrics.hpp"
#include "evsoh/protocol.hpp"
#include "evsoh/report.hpp"
#include "evsoh/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evsoh;

namespace {

constexpr int kExitError = 1;
constexpr int kExitRefused = 2;

struct Global {
    std::string config = "id3";
    std::string protocol = "standard";
    std::string window;
    std::string soc_window;
    std::uint64_t seed = 0;
    std::string out = ".";
    double grid_step = 1.0;
    double smoothing = 0.01;
    std::vector<std::string> disable;
    bool json_stdout = false;
};

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError(std::string(flag) + " expects A:B, got '" + text + "'");
    try {
        std::size_t a = 0, b = 0;
        const double lo = std::stod(text.substr(0, colon), &a);
        const double hi = std::stod(text.substr(colon + 1), &b);
        if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument(text);
        if (!(lo < hi)) throw DomainError(std::string(flag) + " needs A < B, got '" + text + "'");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw DomainError(std::string(flag) + " expects two numbers A:B, got '" + text + "'");
    }
}

struct Context {
    VehicleConfig vehicle;
    ProtocolConfig protocol;
    VoltageWindow window;
    std::string window_source;
    std::optional<std::pair<double, double>> soc_window;
    fs::path out;
};

Context load_context(const Global& g) {
    Context c;
    c.vehicle = load_vehicle_config(resolve_config(g.config, "vehicles"));
    c.protocol = load_protocol_config(resolve_config(g.protocol, "protocol"));
    c.window = c.vehicle.pack.window;
    c.window_source = "vehicle config";
    if (c.protocol.has_window) {
        c.window = c.protocol.spec.window;
        c.window_source = "protocol config";
    }
    if (!g.window.empty()) {
        const auto [lo, hi] = parse_range(g.window, "--window");
        c.window = {lo, hi};
        c.window_source = "command line";
    }
    c.protocol.spec.window = c.window;
    for (const auto& name : g.disable) c.protocol.disabled.insert(check_id_from_string(name));
    if (!g.soc_window.empty()) c.soc_window = parse_range(g.soc_window, "--soc-window");
    c.out = g.out;
    fs::create_directories(c.out);
    return c;
}

json provenance(const Context& c) {
    const auto& p = c.vehicle.pack;
    return {{"vehicle_config", {{"id", c.vehicle.id}, {"source", c.vehicle.source}, {"fnv1a", c.vehicle.hash}}},
            {"protocol_config", {{"source", c.protocol.source}, {"fnv1a", c.protocol.hash}}},
            {"window_v", {c.window.low, c.window.high}},
            {"window_source", c.window_source},
            {"nominal_reference",
             {{"capacity_ah", p.nominal_capacity_ah},
              {"energy_kwh", p.nominal_energy_kwh},
              {"nominal_voltage_v", p.nominal_voltage_v},
              {"source", "vehicle config"}}}};
}

MeasureOptions measure_options(const Context& c, const Global& g) {
    MeasureOptions m;
    m.smoothing_fraction = g.smoothing;
    m.window = c.window;
    m.soc_window = c.soc_window;
    m.protocol = c.protocol.spec;
    m.validation.disabled = c.protocol.disabled;
    m.validation.voltage_resolution = c.vehicle.sensor.voltage_resolution;
    m.validation.smoothing_fraction = g.smoothing;
    return m;
}

ChargingSession load_session(const std::string& path, const Global& g) {
    auto s = synchronize(read_trace(path), g.grid_step);
    if (s.metadata.label("label").empty()) s.metadata.labels["label"] = fs::path(path).stem().string();
    return s;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

// ---- simulate ----

struct SimulateArgs {
    int fleet = 1;
    int repeat = 1;
    std::string degradation;  // lli:lam_ne:lam_pe
    std::vector<std::string> defects;  // index:fraction
    std::optional<double> variation;
    std::optional<double> anchor_sigma;
    std::optional<double> power;
    std::string trace_format = "csv";
    bool ideal_sensor = false;
    bool export_cells = false;
    std::optional<double> mileage;
    std::string label;
};

int run_simulate(const Global& g, const SimulateArgs& a) {
    auto c = load_context(g);
    PackSpec spec = c.vehicle.pack;
    if (a.variation) spec.cell_variation = *a.variation;
    if (a.anchor_sigma) spec.bms.anchor_sigma_v = *a.anchor_sigma;
    for (const auto& d : a.defects) {
        const auto colon = d.find(':');
        if (colon == std::string::npos) throw DomainError("--defect expects INDEX:FRACTION, got '" + d + "'");
        spec.defective_cells.push_back({std::stoul(d.substr(0, colon)), std::stod(d.substr(colon + 1))});
    }
    DegradationState deg;
    if (!a.degradation.empty()) {
        const auto p1 = a.degradation.find(':');
        const auto p2 = a.degradation.find(':', p1 == std::string::npos ? p1 : p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw DomainError("--degradation expects LLI:LAM_NE:LAM_PE, got '" + a.degradation + "'");
        deg.lli = std::stod(a.degradation.substr(0, p1));
        deg.lam_ne = std::stod(a.degradation.substr(p1 + 1, p2 - p1 - 1));
        deg.lam_pe = std::stod(a.degradation.substr(p2 + 1));
    }
    if (a.fleet < 1 || a.repeat < 1) throw DomainError("--fleet and --repeat must be >= 1");
    const auto fmt = trace_format_from_string(a.trace_format);
    const std::string ext = fmt == TraceFormat::csv ? ".csv" : ".jsonl";

    ChargeOptions opt;
    opt.power_w = a.power.value_or(c.vehicle.charge.power_w.value_or(max_charge_power(spec.nominal_energy_kwh, 30.0)));
    opt.window = c.window;
    opt.sensor = a.ideal_sensor ? SensorSpec::ideal() : c.vehicle.sensor;
    opt.ambient_c = c.vehicle.charge.ambient_c;
    opt.rest_s = c.vehicle.charge.rest_s;
    opt.export_cells = a.export_cells;

    for (int v = 0; v < a.fleet; ++v) {
        const std::uint64_t pack_seed = g.seed + static_cast<std::uint64_t>(v);
        const PackModel model = build_pack(spec, deg, pack_seed);
        for (int r = 0; r < a.repeat; ++r) {
            opt.seed = pack_seed * 1000 + static_cast<std::uint64_t>(r);
            auto sim = simulate_charge(model, opt);
            std::string name = a.label.empty() ? c.vehicle.id : a.label;
            if (a.label.empty() || a.fleet > 1) name += "_p" + std::to_string(pack_seed);
            if (a.repeat > 1) name += "_r" + std::to_string(r);
            sim.traces.metadata["label"] = name;
            if (a.mileage) sim.traces.metadata["mileage_km"] = std::to_string(*a.mileage);
            const fs::path trace = c.out / (name + ext);
            write_trace(trace, sim.traces);
            json truth = to_json(sim.truth);
            truth["provenance"] = provenance(c);
            truth["power_w"] = opt.power_w;
            truth["trace"] = trace.filename().string();
            write_json(c.out / (name + ".truth.json"), truth);
            std::cout << trace.string() << "  termination " << sim.truth.termination << "  charge "
                      << sim.truth.charge_ah << " Ah\n";
        }
    }
    return 0;
}

// ---- validate ----

int run_validate(const Global& g, const std::string& trace) {
    auto c = load_context(g);
    const auto s = load_session(trace, g);
    ValidationOptions vo;
    vo.disabled = c.protocol.disabled;
    vo.voltage_resolution = c.vehicle.sensor.voltage_resolution;
    vo.smoothing_fraction = g.smoothing;
    const auto r = validate_session(s, c.protocol.spec, c.vehicle.pack, vo);
    json j = to_json(r);
    j["provenance"] = provenance(c);
    j["trace"] = trace;
    write_json(c.out / (stem(trace) + ".validation.json"), j);
    std::cout << (g.json_stdout ? j.dump(2) + "\n" : format_validation(r));
    return 0;
}

// ---- measure ----

struct MeasureArgs {
    std::string trace;
    std::optional<double> initial_q;
    std::optional<double> initial_e;
};

int run_measure(const Global& g, const MeasureArgs& a) {
    auto c = load_context(g);
    const auto s = load_session(a.trace, g);
    auto mo = measure_options(c, g);
    mo.initial_capacity_ah = a.initial_q;
    mo.initial_energy_kwh = a.initial_e;
    const fs::path out = c.out / (stem(a.trace) + ".measurement.json");
    try {
        const auto r = measure(s, c.vehicle.pack, mo);
        json j = to_json(r);
        j["provenance"] = provenance(c);
        j["provenance"]["initial_reference"] = {{"capacity_ah", a.initial_q ? json(*a.initial_q) : json(nullptr)},
                                                {"energy_kwh", a.initial_e ? json(*a.initial_e) : json(nullptr)},
                                                {"source", "command line"}};
        j["trace"] = a.trace;
        j["refused"] = false;
        write_json(out, j);
        const std::string text = format_measurement(r);
        write_text(c.out / (stem(a.trace) + ".measurement.txt"), text);
        std::cout << (g.json_stdout ? j.dump(2) + "\n" : text);
        return 0;
    } catch (const WindowNotCoveredError& e) {
        json j{{"trace", a.trace}, {"refused", true}, {"reason", e.what()}, {"provenance", provenance(c)}};
        ValidationOptions vo = mo.validation;
        j["validation"] = to_json(validate_session(s, c.protocol.spec, c.vehicle.pack, vo));
        write_json(out, j);
        std::cerr << e.what() << "\n";
        return kExitRefused;
    }
}

// ---- diagnose ----

int run_diagnose(const Global& g, const std::string& trace, const std::string& reference,
                 const std::string& template_name) {
    auto c = load_context(g);
    const auto tmpl = template_name.empty() ? c.vehicle.dva_template : load_template(resolve_config(template_name, "templates"));
    const double q_n = c.vehicle.pack.nominal_capacity_ah;
    const auto aged = analyze_session(load_session(trace, g), c.window, q_n, tmpl, g.smoothing);
    const auto ref = analyze_session(load_session(reference, g), c.window, q_n, tmpl, g.smoothing);
    const auto r = degradation_modes(aged.features, ref.features);

    const fs::path aged_dv = c.out / (stem(trace) + ".dv.tsv");
    const fs::path ref_dv = c.out / (stem(reference) + ".dv.tsv");
    for (const auto& [path, curve] : {std::pair{aged_dv, &aged.curve}, std::pair{ref_dv, &ref.curve}}) {
        std::ofstream f(path);
        if (!f) throw Error("cannot write " + path.string());
        write_dv_curve(f, *curve);
    }
    json j = to_json(r);
    j["aged"] = to_json(aged.features);
    j["reference"] = to_json(ref.features);
    j["aged"]["trace"] = trace;
    j["aged"]["dv_file"] = aged_dv.filename().string();
    j["reference"]["trace"] = reference;
    j["reference"]["dv_file"] = ref_dv.filename().string();
    j["template"] = tmpl.name;
    j["provenance"] = provenance(c);
    write_json(c.out / (stem(trace) + ".diagnosis.json"), j);
    std::cout << (g.json_stdout ? j.dump(2) + "\n" : format_degradation(r, aged.features, ref.features));
    return 0;
}

// ---- fleet ----

int run_fleet(const Global& g, const std::vector<std::string>& traces, double tolerance, bool diagnose,
              const std::string& name) {
    auto c = load_context(g);
    std::vector<TrendInput> inputs;
    for (const auto& t : traces) inputs.push_back({load_session(t, g), t});
    TrendOptions to;
    to.measure = measure_options(c, g);
    to.measure.soc_window.reset();
    to.soc_window = c.soc_window.value_or(std::pair{0.0, 100.0});
    to.span_tolerance_v = tolerance;
    to.dva_template = c.vehicle.dva_template;
    to.diagnose = diagnose;
    const auto r = build_trend(std::move(inputs), c.vehicle.pack, to);
    json j = to_json(r);
    j["provenance"] = provenance(c);
    write_json(c.out / (name + ".json"), j);
    const std::string text = format_trend(r);
    write_text(c.out / (name + ".txt"), text);
    std::cout << (g.json_stdout ? j.dump(2) + "\n" : text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Charging-based state-of-health measurement for EV battery packs"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--config", g.config, "Vehicle config name or path")->capture_default_str();
    app.add_option("--protocol", g.protocol, "Protocol config name or path")->capture_default_str();
    app.add_option("--window", g.window, "Voltage window U_low:U_high");
    app.add_option("--soc-window", g.soc_window, "BMS-SOC window A:B in percent");
    app.add_option("--seed", g.seed, "Base seed")->capture_default_str();
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--grid-step", g.grid_step, "Synchronization grid step in s")->capture_default_str();
    app.add_option("--smoothing", g.smoothing, "Moving-mean window as a fraction of the session")->capture_default_str();
    app.add_option("--disable-check", g.disable, "Protocol check to skip (repeatable)");
    app.add_flag("--json", g.json_stdout, "Print the JSON report instead of the table");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Write simulated charge traces and ground-truth sidecars");
    sim->add_option("--fleet", sa.fleet, "Number of packs with consecutive seeds")->capture_default_str();
    sim->add_option("--repeat", sa.repeat, "Charges per pack with fresh noise seeds")->capture_default_str();
    sim->add_option("--degradation", sa.degradation, "Injected LLI:LAM_NE:LAM_PE");
    sim->add_option("--defect", sa.defects, "Weak series element INDEX:CAPACITY_FRACTION (repeatable)");
    sim->add_option("--variation", sa.variation, "Relative cell-to-cell variation");
    sim->add_option("--anchor-sigma", sa.anchor_sigma, "BMS anchor scatter in V");
    sim->add_option("--power", sa.power, "Charging power in W");
    sim->add_option("--trace-format", sa.trace_format, "csv or jsonl")->capture_default_str();
    sim->add_flag("--ideal-sensor", sa.ideal_sensor, "Noise-free, effectively continuous sensors");
    sim->add_flag("--cells", sa.export_cells, "Also export block voltages");
    sim->add_option("--mileage", sa.mileage, "mileage_km metadata label");
    sim->add_option("--label", sa.label, "label metadata (default: file stem)");

    std::string trace;
    auto* val = app.add_subcommand("validate", "Check a trace against the measurement protocol");
    val->add_option("trace", trace, "Trace file")->required()->check(CLI::ExistingFile);

    MeasureArgs ma;
    auto* mea = app.add_subcommand("measure", "Integrate Q and E over the window and report SOH");
    mea->add_option("trace", ma.trace, "Trace file")->required()->check(CLI::ExistingFile);
    mea->add_option("--initial-capacity", ma.initial_q, "Initial reference Q_0 in Ah");
    mea->add_option("--initial-energy", ma.initial_e, "Initial reference E_0 in kWh");

    std::string reference, template_name;
    auto* dia = app.add_subcommand("diagnose", "Differential-voltage degradation modes against a reference trace");
    dia->add_option("trace", trace, "Aged trace")->required()->check(CLI::ExistingFile);
    dia->add_option("--reference", reference, "Reference trace")->required()->check(CLI::ExistingFile);
    dia->add_option("--template", template_name, "Chemistry template name or path");

    std::vector<std::string> traces;
    double tolerance = 2.0;
    bool no_diagnose = false;
    std::string fleet_name = "fleet";
    auto* flt = app.add_subcommand("fleet", "Spread statistics and trend over traces of one vehicle model");
    flt->add_option("traces", traces, "Trace files")->required()->check(CLI::ExistingFile);
    flt->add_option("--span-tolerance", tolerance, "Operating-span change that raises a warning, V")->capture_default_str();
    flt->add_flag("--no-diagnose", no_diagnose, "Skip the pairwise degradation diagnosis");
    flt->add_option("--name", fleet_name, "Report file stem")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return run_simulate(g, sa);
        if (*val) return run_validate(g, trace);
        if (*mea) return run_measure(g, ma);
        if (*dia) return run_diagnose(g, trace, reference, template_name);
        if (*flt) return run_fleet(g, traces, tolerance, !no_diagnose, fleet_name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
