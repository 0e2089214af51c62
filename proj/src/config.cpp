#include "evsoh/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "evsoh/errors.hpp"

#ifndef EVSOH_DEFAULT_CONFIG_DIR
#define EVSOH_DEFAULT_CONFIG_DIR "configs"
#endif

namespace evsoh {
namespace {

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

struct Ctx {
    std::string source;

    [[noreturn]] void fail(const YAML::Node& n, const std::string& what) const {
        throw ConfigError(source, line_of(n), what);
    }

    void keys(const YAML::Node& map, std::initializer_list<const char*> allowed, const char* where) const {
        if (!map.IsMap()) fail(map, std::string(where) + " must be a mapping");
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) {
                std::string list;
                for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
                fail(kv.first, "unknown key '" + key + "' in " + where + " (allowed: " + list + ")");
            }
        }
    }

    template <typename T>
    T as(const YAML::Node& n, const std::string& key) const {
        try {
            return n.as<T>();
        } catch (const YAML::BadConversion&) {
            fail(n, "invalid value for '" + key + "'");
        }
    }

    template <typename T>
    T req(const YAML::Node& map, const char* key) const {
        const YAML::Node n = map[key];
        if (!n) fail(map, std::string("missing required key '") + key + "'");
        return as<T>(n, key);
    }

    template <typename T>
    T opt(const YAML::Node& map, const char* key, T fallback) const {
        const YAML::Node n = map[key];
        return n ? as<T>(n, key) : fallback;
    }

    std::pair<double, double> pair(const YAML::Node& map, const char* key) const {
        const YAML::Node n = map[key];
        if (!n) fail(map, std::string("missing required key '") + key + "'");
        if (!n.IsSequence() || n.size() != 2) fail(n, std::string("'") + key + "' must be a two-element list");
        return {as<double>(n[0], key), as<double>(n[1], key)};
    }
};

YAML::Node load_yaml(std::string_view text, const std::string& source) {
    try {
        return YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source, e.mark.line + 1, e.msg);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

SensorSpec parse_sensor(const Ctx& c, const YAML::Node& n) {
    SensorSpec s;
    if (!n) return s;
    c.keys(n, {"voltage_resolution", "current_resolution", "soc_resolution", "temperature_resolution", "min_rate_hz",
               "max_rate_hz", "voltage_noise", "current_noise"},
           "sensor");
    s.voltage_resolution = c.opt(n, "voltage_resolution", s.voltage_resolution);
    s.current_resolution = c.opt(n, "current_resolution", s.current_resolution);
    s.soc_resolution = c.opt(n, "soc_resolution", s.soc_resolution);
    s.temperature_resolution = c.opt(n, "temperature_resolution", s.temperature_resolution);
    s.min_rate_hz = c.opt(n, "min_rate_hz", s.min_rate_hz);
    s.max_rate_hz = c.opt(n, "max_rate_hz", s.max_rate_hz);
    s.voltage_noise = c.opt(n, "voltage_noise", s.voltage_noise);
    s.current_noise = c.opt(n, "current_noise", s.current_noise);
    try {
        s.validate();
    } catch (const ValidationError& e) {
        c.fail(n, e.what());
    }
    return s;
}

ChemistryTemplate template_from_node(const Ctx& c, const YAML::Node& root) {
    c.keys(root, {"name", "chemistry", "balancing", "prominence_fraction", "separation_fraction", "smoothing_fraction",
                  "features"},
           "template");
    ChemistryTemplate t;
    t.name = c.req<std::string>(root, "name");
    try {
        t.chemistry = chemistry_from_string(c.opt<std::string>(root, "chemistry", "custom"));
        t.balancing = balancing_rule_from_string(c.opt<std::string>(root, "balancing", "electrode_origins"));
    } catch (const FormatError& e) {
        c.fail(root, e.what());
    }
    t.prominence_fraction = c.opt(root, "prominence_fraction", t.prominence_fraction);
    t.separation_fraction = c.opt(root, "separation_fraction", t.separation_fraction);
    t.smoothing_fraction = c.opt(root, "smoothing_fraction", t.smoothing_fraction);
    const YAML::Node feats = root["features"];
    if (!feats || !feats.IsSequence()) c.fail(root, "'features' must be a list");
    for (const auto& f : feats) {
        c.keys(f, {"name", "electrode", "stoichiometry", "band"}, "feature");
        FeatureRule r;
        r.name = c.req<std::string>(f, "name");
        const auto role = c.req<std::string>(f, "electrode");
        if (role == "negative") r.electrode = ElectrodeRole::negative;
        else if (role == "positive") r.electrode = ElectrodeRole::positive;
        else c.fail(f["electrode"], "electrode must be 'negative' or 'positive'");
        r.stoichiometry = c.req<double>(f, "stoichiometry");
        std::tie(r.band_low, r.band_high) = c.pair(f, "band");
        t.features.push_back(r);
    }
    try {
        t.validate();
    } catch (const ValidationError& e) {
        c.fail(root, e.what());
    }
    return t;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

VehicleConfig parse_vehicle_config(std::string_view text, const std::string& source) {
    const Ctx c{source};
    const YAML::Node root = load_yaml(text, source);
    c.keys(root, {"vehicle", "chemistry", "n_series", "n_parallel", "nominal_capacity_ah", "nominal_energy_kwh",
                  "nominal_voltage_v", "window", "cell", "cell_variation", "defective_cells", "bms", "sensor", "charge",
                  "dva_template"},
           "vehicle config");
    VehicleConfig v;
    v.source = source;
    v.hash = fnv1a_hex(text);
    v.id = std::filesystem::path(source).stem().string();
    auto& p = v.pack;
    p.vehicle = c.req<std::string>(root, "vehicle");
    try {
        p.chemistry = chemistry_from_string(c.req<std::string>(root, "chemistry"));
    } catch (const FormatError& e) {
        c.fail(root["chemistry"], e.what());
    }
    p.n_series = c.req<int>(root, "n_series");
    p.n_parallel = c.req<int>(root, "n_parallel");
    p.nominal_capacity_ah = c.req<double>(root, "nominal_capacity_ah");
    p.nominal_energy_kwh = c.req<double>(root, "nominal_energy_kwh");
    p.nominal_voltage_v = c.req<double>(root, "nominal_voltage_v");
    std::tie(p.window.low, p.window.high) = c.pair(root, "window");

    const YAML::Node cell = root["cell"];
    if (!cell) c.fail(root, "missing required key 'cell'");
    c.keys(cell, {"q_pe_ah", "q_ne_ah", "q_b_ah", "r_internal_ohm", "v_max"}, "cell");
    p.cell = make_cell(p.chemistry, c.req<double>(cell, "q_pe_ah"), c.req<double>(cell, "q_ne_ah"),
                       c.req<double>(cell, "q_b_ah"), c.req<double>(cell, "r_internal_ohm"),
                       c.req<double>(cell, "v_max"));

    p.cell_variation = c.opt(root, "cell_variation", 0.0);
    if (const YAML::Node d = root["defective_cells"]) {
        if (!d.IsSequence()) c.fail(d, "'defective_cells' must be a list");
        for (const auto& e : d) {
            c.keys(e, {"index", "capacity_fraction"}, "defective cell");
            p.defective_cells.push_back({c.req<std::size_t>(e, "index"), c.req<double>(e, "capacity_fraction")});
        }
    }
    const YAML::Node bms = root["bms"];
    if (!bms) c.fail(root, "missing required key 'bms'");
    c.keys(bms, {"low_v", "high_v", "soc_max_percent", "anchor_sigma_v"}, "bms");
    p.bms.low_v = c.req<double>(bms, "low_v");
    p.bms.high_v = c.req<double>(bms, "high_v");
    p.bms.soc_max_percent = c.opt(bms, "soc_max_percent", 100.0);
    p.bms.anchor_sigma_v = c.opt(bms, "anchor_sigma_v", 0.0);
    try {
        p.validate();
    } catch (const ValidationError& e) {
        c.fail(root, e.what());
    }

    v.sensor = parse_sensor(c, root["sensor"]);
    if (const YAML::Node ch = root["charge"]) {
        c.keys(ch, {"power_w", "ambient_c", "rest_s"}, "charge");
        if (ch["power_w"]) v.charge.power_w = c.as<double>(ch["power_w"], "power_w");
        v.charge.ambient_c = c.opt(ch, "ambient_c", v.charge.ambient_c);
        v.charge.rest_s = c.opt(ch, "rest_s", v.charge.rest_s);
    }

    const auto tmpl = c.opt<std::string>(root, "dva_template", std::string(to_string(p.chemistry)));
    if (tmpl == "nmc_graphite") v.dva_template = ChemistryTemplate::nmc_graphite();
    else if (tmpl == "lfp_graphite") v.dva_template = ChemistryTemplate::lfp_graphite();
    else {
        auto path = std::filesystem::path(tmpl);
        if (path.is_relative() && !std::filesystem::exists(path))
            path = std::filesystem::path(source).parent_path() / path;
        if (!std::filesystem::exists(path)) path = resolve_config(tmpl, "templates");
        v.dva_template = load_template(path);
    }
    return v;
}

VehicleConfig load_vehicle_config(const std::filesystem::path& path) {
    return parse_vehicle_config(read_file(path), path.string());
}

ProtocolConfig parse_protocol_config(std::string_view text, const std::string& source) {
    const Ctx c{source};
    const YAML::Node root = load_yaml(text, source);
    ProtocolConfig pc;
    pc.source = source;
    pc.hash = fnv1a_hex(text);
    if (root.IsNull()) return pc;
    c.keys(root, {"min_duration_h", "temp_center_c", "temp_tolerance_c", "settle_rate_per_cell", "window",
                  "rest_min_minutes", "settle_confirmation_s", "cp_tolerance", "current_threshold_a",
                  "disabled_checks"},
           "protocol config");
    auto& s = pc.spec;
    s.min_duration_h = c.opt(root, "min_duration_h", s.min_duration_h);
    s.temp_center_c = c.opt(root, "temp_center_c", s.temp_center_c);
    s.temp_tolerance_c = c.opt(root, "temp_tolerance_c", s.temp_tolerance_c);
    s.settle_rate_per_cell = c.opt(root, "settle_rate_per_cell", s.settle_rate_per_cell);
    s.rest_min_minutes = c.opt(root, "rest_min_minutes", s.rest_min_minutes);
    s.settle_confirmation_s = c.opt(root, "settle_confirmation_s", s.settle_confirmation_s);
    s.cp_tolerance = c.opt(root, "cp_tolerance", s.cp_tolerance);
    s.current_threshold_a = c.opt(root, "current_threshold_a", s.current_threshold_a);
    if (root["window"]) {
        std::tie(s.window.low, s.window.high) = c.pair(root, "window");
        pc.has_window = true;
    }
    if (const YAML::Node d = root["disabled_checks"]) {
        if (!d.IsSequence()) c.fail(d, "'disabled_checks' must be a list");
        for (const auto& e : d) {
            try {
                pc.disabled.insert(check_id_from_string(c.as<std::string>(e, "disabled_checks")));
            } catch (const DomainError& err) {
                c.fail(e, err.what());
            }
        }
    }
    ProtocolSpec probe = s;
    if (!pc.has_window) probe.window = {0.0, 1.0};
    try {
        probe.validate();
    } catch (const ValidationError& e) {
        c.fail(root, e.what());
    }
    return pc;
}

ProtocolConfig load_protocol_config(const std::filesystem::path& path) {
    return parse_protocol_config(read_file(path), path.string());
}

ChemistryTemplate parse_template(std::string_view text, const std::string& source) {
    return template_from_node(Ctx{source}, load_yaml(text, source));
}

ChemistryTemplate load_template(const std::filesystem::path& path) {
    return parse_template(read_file(path), path.string());
}

std::filesystem::path config_dir() {
    if (const char* env = std::getenv("EVSOH_CONFIG_DIR"); env && *env) return env;
    return EVSOH_DEFAULT_CONFIG_DIR;
}

std::filesystem::path resolve_config(const std::string& name_or_path, std::string_view kind) {
    const std::filesystem::path direct(name_or_path);
    if (std::filesystem::exists(direct)) return direct;
    auto candidate = config_dir() / std::string(kind) / (name_or_path + ".yaml");
    if (std::filesystem::exists(candidate)) return candidate;
    throw ConfigError(name_or_path, 0,
                      "no such config file, and no '" + candidate.string() + "' in the config directory");
}

}  // namespace evsoh
