#include "evsoh/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "evsoh/errors.hpp"

namespace evsoh {
namespace {

using nlohmann::json;

enum class Column { time, voltage, current, soc, temperature, cell, ignored };

struct ColumnRef {
    Column kind;
    std::size_t index = 0;
};

std::optional<std::size_t> suffix_index(std::string_view name, std::string_view prefix) {
    if (name.size() <= prefix.size() || name.substr(0, prefix.size()) != prefix) return std::nullopt;
    std::size_t idx = 0;
    const auto digits = name.substr(prefix.size());
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
    if (ec != std::errc{} || p != digits.data() + digits.size()) return std::nullopt;
    return idx;
}

ColumnRef classify(std::string_view name) {
    if (name == "t") return {Column::time};
    if (name == "u") return {Column::voltage};
    if (name == "i") return {Column::current};
    if (name == "soc") return {Column::soc};
    if (auto k = suffix_index(name, "temp")) return {Column::temperature, *k};
    if (auto k = suffix_index(name, "cell")) return {Column::cell, *k};
    return {Column::ignored};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

Signal& channel(RawTraces& raw, ColumnRef ref) {
    switch (ref.kind) {
        case Column::voltage: return raw.voltage;
        case Column::current: return raw.current;
        case Column::soc: return raw.soc;
        case Column::temperature:
            if (raw.temperatures.size() <= ref.index) raw.temperatures.resize(ref.index + 1);
            return raw.temperatures[ref.index];
        case Column::cell:
            if (raw.cell_voltages.size() <= ref.index) raw.cell_voltages.resize(ref.index + 1);
            return raw.cell_voltages[ref.index];
        default: break;
    }
    throw FormatError("column has no signal");
}

// "# key: value" lines carry metadata; other comment lines are ignored.
void parse_meta_comment(std::string_view line, RawTraces& raw) {
    line.remove_prefix(1);
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) return;
    const auto key = trim(line.substr(0, colon));
    if (key.empty()) return;
    raw.metadata[std::string(key)] = std::string(trim(line.substr(colon + 1)));
}

void check_order(double t, std::optional<double>& last, std::size_t row) {
    if (last && t < *last)
        throw OrderingError("timestamp " + format_number(t) + " at row " + std::to_string(row) +
                                " is earlier than the previous row (" + format_number(*last) + ")",
                            row);
    last = t;
}

void require_mandatory(const std::vector<ColumnRef>& cols) {
    auto has = [&](Column c) {
        return std::any_of(cols.begin(), cols.end(), [c](const ColumnRef& r) { return r.kind == c; });
    };
    std::string missing;
    for (auto [c, name] : {std::pair{Column::time, "t"}, {Column::voltage, "u"}, {Column::current, "i"}})
        if (!has(c)) missing += missing.empty() ? name : std::string(", ") + name;
    if (!missing.empty()) throw FormatError("trace lacks mandatory column(s): " + missing);
}

RawTraces parse_csv(std::istream& in) {
    RawTraces raw;
    std::string line;
    std::size_t row = 0;
    std::vector<ColumnRef> cols;
    bool have_header = false;
    std::optional<double> last_t;
    while (std::getline(in, line)) {
        ++row;
        std::string_view view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            parse_meta_comment(view, raw);
            continue;
        }
        auto fields = split(view, ',');
        if (!have_header) {
            for (auto f : fields) cols.push_back(classify(trim(f)));
            require_mandatory(cols);
            for (const auto& c : cols)
                if (c.kind == Column::temperature || c.kind == Column::cell) channel(raw, c);
            have_header = true;
            continue;
        }
        if (fields.size() != cols.size()) {
            raw.malformed.push_back({row, "expected " + std::to_string(cols.size()) + " fields, got " +
                                              std::to_string(fields.size())});
            continue;
        }
        std::optional<double> t;
        std::vector<std::pair<ColumnRef, double>> values;
        std::string bad;
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k].kind == Column::ignored) continue;
            const auto cell = trim(fields[k]);
            if (cell.empty()) continue;
            const auto v = parse_number(cell);
            if (!v) {
                bad = "non-numeric value '" + std::string(cell) + "'";
                break;
            }
            if (cols[k].kind == Column::time) t = *v;
            else values.emplace_back(cols[k], *v);
        }
        if (bad.empty() && !t) bad = "missing timestamp";
        if (!bad.empty()) {
            raw.malformed.push_back({row, bad});
            continue;
        }
        check_order(*t, last_t, row);
        for (const auto& [ref, v] : values) channel(raw, ref).push(*t, v);
    }
    if (!have_header) throw FormatError("trace has no header line");
    return raw;
}

RawTraces parse_jsonl(std::istream& in) {
    RawTraces raw;
    std::string line;
    std::size_t row = 0;
    std::optional<double> last_t;
    while (std::getline(in, line)) {
        ++row;
        const auto view = trim(line);
        if (view.empty()) continue;
        json obj;
        try {
            obj = json::parse(view);
        } catch (const json::parse_error& e) {
            raw.malformed.push_back({row, std::string("invalid JSON: ") + e.what()});
            continue;
        }
        if (!obj.is_object()) {
            raw.malformed.push_back({row, "line is not a JSON object"});
            continue;
        }
        if (obj.contains("meta")) {
            if (!obj["meta"].is_object()) throw FormatError("'meta' must be an object");
            for (auto& [k, v] : obj["meta"].items())
                raw.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            continue;
        }
        if (!obj.contains("t") || !obj["t"].is_number()) {
            raw.malformed.push_back({row, "missing timestamp"});
            continue;
        }
        std::string bad;
        std::vector<std::pair<ColumnRef, double>> values;
        for (auto& [k, v] : obj.items()) {
            const auto ref = classify(k);
            if (ref.kind == Column::ignored || ref.kind == Column::time || v.is_null()) continue;
            if (!v.is_number()) {
                bad = "non-numeric value for '" + k + "'";
                break;
            }
            values.emplace_back(ref, v.get<double>());
        }
        if (!bad.empty()) {
            raw.malformed.push_back({row, bad});
            continue;
        }
        const double t = obj["t"].get<double>();
        check_order(t, last_t, row);
        for (const auto& [ref, v] : values) channel(raw, ref).push(t, v);
    }
    if (raw.voltage.empty() || raw.current.empty())
        throw FormatError("trace lacks mandatory signal(s) u and i");
    return raw;
}

struct NamedSignal {
    std::string name;
    const Signal* signal;
};

std::vector<NamedSignal> named_signals(const RawTraces& raw) {
    std::vector<NamedSignal> out{{"u", &raw.voltage}, {"i", &raw.current}};
    if (!raw.soc.empty()) out.push_back({"soc", &raw.soc});
    for (std::size_t k = 0; k < raw.temperatures.size(); ++k)
        out.push_back({"temp" + std::to_string(k), &raw.temperatures[k]});
    for (std::size_t k = 0; k < raw.cell_voltages.size(); ++k)
        out.push_back({"cell" + std::to_string(k), &raw.cell_voltages[k]});
    return out;
}

// Visits rows in time order; each row holds the channels sampled at that instant.
template <typename F>
void merge_rows(const std::vector<NamedSignal>& sigs, F&& emit_row) {
    std::vector<std::size_t> pos(sigs.size(), 0);
    std::vector<std::optional<double>> row(sigs.size());
    for (;;) {
        double t = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < sigs.size(); ++c)
            if (pos[c] < sigs[c].signal->size()) t = std::min(t, sigs[c].signal->t[pos[c]]);
        if (!std::isfinite(t)) break;
        for (std::size_t c = 0; c < sigs.size(); ++c) {
            row[c].reset();
            if (pos[c] < sigs[c].signal->size() && sigs[c].signal->t[pos[c]] == t)
                row[c] = sigs[c].signal->v[pos[c]++];
        }
        emit_row(t, row);
    }
}

SampleStats stats_of(const Signal& s) {
    SampleStats st;
    st.count = s.size();
    if (s.size() < 2) return st;
    st.min_interval = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double d = s.t[k] - s.t[k - 1];
        st.min_interval = std::min(st.min_interval, d);
        st.max_interval = std::max(st.max_interval, d);
    }
    st.mean_interval = (s.t.back() - s.t.front()) / static_cast<double>(s.size() - 1);
    return st;
}

// Linear interpolation of one signal onto an increasing grid inside its span.
std::vector<double> resample(const Signal& s, const std::vector<double>& grid) {
    std::vector<double> out(grid.size());
    std::size_t j = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double g = grid[k];
        while (j + 2 < s.size() && s.t[j + 1] <= g) ++j;
        const double t0 = s.t[j], t1 = s.t[j + 1];
        if (t1 == t0 || g <= t0) {
            out[k] = g <= t0 ? s.v[j] : s.v[j + 1];
        } else {
            const double w = std::min(1.0, (g - t0) / (t1 - t0));
            out[k] = s.v[j] + w * (s.v[j + 1] - s.v[j]);
        }
    }
    return out;
}

}  // namespace

TraceFormat trace_format_from_string(std::string_view s) {
    if (s == "csv") return TraceFormat::csv;
    if (s == "jsonl") return TraceFormat::jsonl;
    throw FormatError("unknown trace format '" + std::string(s) + "' (expected csv or jsonl)");
}

TraceFormat trace_format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".jsonl" || ext == ".json" ? TraceFormat::jsonl : TraceFormat::csv;
}

RawTraces parse_trace(std::istream& in, TraceFormat format) {
    RawTraces raw = format == TraceFormat::csv ? parse_csv(in) : parse_jsonl(in);
    if (!raw.malformed.empty()) raw.metadata["malformed_rows"] = std::to_string(raw.malformed.size());
    return raw;
}

RawTraces read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open trace '" + path.string() + "'");
    return parse_trace(in, trace_format_for(path));
}

void write_trace(std::ostream& out, const RawTraces& raw, TraceFormat format) {
    const auto sigs = named_signals(raw);
    if (format == TraceFormat::csv) {
        for (const auto& [k, v] : raw.metadata) out << "# " << k << ": " << v << '\n';
        out << 't';
        for (const auto& s : sigs) out << ',' << s.name;
        out << '\n';
        std::string line;
        merge_rows(sigs, [&](double t, const std::vector<std::optional<double>>& row) {
            line = format_number(t);
            for (const auto& v : row) {
                line += ',';
                if (v) line += format_number(*v);
            }
            line += '\n';
            out << line;
        });
    } else {
        if (!raw.metadata.empty()) out << json{{"meta", raw.metadata}}.dump() << '\n';
        merge_rows(sigs, [&](double t, const std::vector<std::optional<double>>& row) {
            std::string line = "{\"t\":" + format_number(t);
            for (std::size_t c = 0; c < row.size(); ++c)
                if (row[c]) line += ",\"" + sigs[c].name + "\":" + format_number(*row[c]);
            line += "}\n";
            out << line;
        });
    }
}

void write_trace(const std::filesystem::path& path, const RawTraces& traces) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write trace '" + path.string() + "'");
    write_trace(out, traces, trace_format_for(path));
}

ChargingSession synchronize(const RawTraces& raw, double grid_step) {
    if (!(grid_step > 0.0)) throw DomainError("grid step must be > 0");
    const auto sigs = named_signals(raw);
    double start = -std::numeric_limits<double>::infinity();
    double end = std::numeric_limits<double>::infinity();
    for (const auto& s : sigs) {
        if (s.signal->size() < 2)
            throw SynchronizationError("signal '" + s.name + "' has fewer than two samples");
        start = std::max(start, s.signal->t.front());
        end = std::min(end, s.signal->t.back());
    }
    if (!(end > start))
        throw SynchronizationError("signal spans do not overlap (intersection [" + format_number(start) +
                                   ", " + format_number(end) + "] s)");

    ChargingSession s;
    const auto n = static_cast<std::size_t>(std::floor((end - start) / grid_step + 1e-9)) + 1;
    s.time.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.time[k] = start + static_cast<double>(k) * grid_step;
    s.voltage = resample(raw.voltage, s.time);
    s.current = resample(raw.current, s.time);
    if (!raw.soc.empty()) s.soc = resample(raw.soc, s.time);
    for (const auto& c : raw.temperatures) s.temperatures.push_back(resample(c, s.time));
    for (const auto& c : raw.cell_voltages) s.cell_voltages.push_back(resample(c, s.time));
    s.power.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.power[k] = s.voltage[k] * s.current[k];

    s.metadata.labels = raw.metadata;
    s.metadata.grid_step = grid_step;
    for (const auto& sig : sigs) s.metadata.samples[sig.name] = stats_of(*sig.signal);
    s.metadata.processing.push_back("synchronize(step=" + format_number(grid_step) + " s)");
    return s;
}

ChargingSession crop_to_window(const ChargingSession& session, double u_low, double u_high) {
    if (!(u_low < u_high)) throw DomainError("crop window requires U_low < U_high");
    const auto& u = session.voltage;
    auto lo = std::find_if(u.begin(), u.end(), [&](double v) { return v >= u_low; });
    if (lo == u.end())
        throw WindowNotCoveredError("voltage never reaches U_low = " + format_number(u_low) + " V");
    auto hi = std::find_if(lo, u.end(), [&](double v) { return v >= u_high; });
    if (hi == u.end()) {
        const double reached = *std::max_element(u.begin(), u.end());
        throw WindowNotCoveredError("voltage never reaches U_high = " + format_number(u_high) +
                                    " V (maximum " + format_number(reached) + " V)");
    }
    const auto b = static_cast<std::size_t>(lo - u.begin());
    const auto e = static_cast<std::size_t>(hi - u.begin());
    ChargingSession out = session.slice(b, e + 1);
    out.metadata.window = VoltageWindow{u_low, u_high};
    out.metadata.low_crossing = b;
    out.metadata.high_crossing = e;
    out.metadata.processing.push_back("crop_to_window(" + format_number(u_low) + ", " + format_number(u_high) + ")");
    return out;
}

ChargingSession crop_to_soc_window(const ChargingSession& session, double soc_low, double soc_high) {
    if (!(soc_low < soc_high)) throw DomainError("SOC window requires low < high");
    if (!session.has_soc()) throw WindowNotCoveredError("session carries no SOC channel");
    const auto& s = session.soc;
    auto lo = std::find_if(s.begin(), s.end(), [&](double v) { return v >= soc_low; });
    if (lo == s.end()) throw WindowNotCoveredError("SOC never reaches " + format_number(soc_low) + " %");
    auto hi = std::find_if(lo, s.end(), [&](double v) { return v >= soc_high; });
    const auto b = static_cast<std::size_t>(lo - s.begin());
    const auto e = hi == s.end() ? s.size() - 1 : static_cast<std::size_t>(hi - s.begin());
    if (e <= b) throw WindowNotCoveredError("SOC window spans no samples");
    ChargingSession out = session.slice(b, e + 1);
    out.metadata.low_crossing = b;
    out.metadata.high_crossing = e;
    out.metadata.processing.push_back("crop_to_soc_window(" + format_number(soc_low) + ", " +
                                      format_number(soc_high) + ")");
    return out;
}

std::size_t smoothing_window(std::size_t length, double fraction) {
    if (!(fraction > 0.0 && fraction <= 0.5)) throw DomainError("smoothing fraction must lie in (0, 0.5]");
    const auto w = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(length) - 1e-9));
    return std::max<std::size_t>(1, w);
}

std::vector<double> smooth(std::span<const double> values, double fraction) {
    if (values.empty()) throw DomainError("cannot smooth an empty series");
    const std::size_t w = smoothing_window(values.size(), fraction);
    std::vector<double> out(values.size());
    // Compensated running sum keeps long windows from drifting.
    double sum = 0.0, comp = 0.0;
    auto add = [&](double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    for (std::size_t k = 0; k < values.size(); ++k) {
        add(values[k]);
        if (k >= w) add(-values[k - w]);
        out[k] = sum / static_cast<double>(std::min(k + 1, w));
    }
    return out;
}

ChargingSession smooth_session(const ChargingSession& session, double fraction) {
    ChargingSession out = session;
    out.voltage = smooth(session.voltage, fraction);
    out.current = smooth(session.current, fraction);
    out.power = smooth(session.power, fraction);
    out.metadata.smoothing_fraction = fraction;
    out.metadata.processing.push_back("smooth(fraction=" + format_number(fraction) + ", window=" +
                                      std::to_string(smoothing_window(session.size(), fraction)) +
                                      "; voltage, current, power)");
    return out;
}

}  // namespace evsoh
