#include "kitepower/telemetry.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "json.hpp"

#include "kitepower/error.hpp"

namespace kitepower::io {

namespace {

// JSON numbers go through the same 9-digit text as the CSV so reports are
// reproducible byte for byte.
nlohmann::json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return nlohmann::json::parse(format_number(v));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') cells.back().pop_back();
    return cells;
}

double to_double(const std::string& cell, int line, const std::string& column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(ErrorKind::Io, "line " + std::to_string(line) + ": column " + column + ": bad number '" + cell + "'");
    }
    return v;
}

/// Maps required column names to their index in the header.
std::map<std::string, std::size_t> columns(const std::string& header, std::initializer_list<const char*> required) {
    const auto cells = split(header);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < cells.size(); ++i) index[cells[i]] = i;
    for (const char* name : required) {
        if (!index.contains(name)) throw Error(ErrorKind::Io, std::string("missing CSV column ") + name);
    }
    return index;
}

}  // namespace

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string telemetry_row(const TelemetryRecord& r) {
    using model::wrap_angle;
    std::string row;
    row.reserve(200);
    auto add = [&row](double v) {
        row += format_number(v);
        row += ',';
    };
    add(r.t);
    add(wrap_angle(r.phi));
    add(r.theta);
    add(wrap_angle(r.psi));
    add(r.l);
    add(r.delta);
    add(r.v_winch_cmd);
    add(r.v_winch_actual);
    add(r.v_a);
    add(wrap_angle(r.gamma_s));
    add(wrap_angle(r.psi_s));
    add(wrap_angle(r.psi_c));
    row += guidance::to_string(r.phase);
    row += ',';
    add(r.F);
    row += format_number(r.P_mech);
    return row;
}

TelemetryWriter::TelemetryWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out_ << kTelemetryHeader << '\n';
}

void TelemetryWriter::write(const TelemetryRecord& r) {
    out_ << telemetry_row(r) << '\n';
    const long second = static_cast<long>(std::floor(r.t));
    if (second != last_second_) {
        last_second_ = second;
        out_.flush();
    }
}

void TelemetryWriter::flush() { out_.flush(); }

void write_telemetry(std::ostream& out, std::span<const TelemetryRecord> records) {
    out << kTelemetryHeader << '\n';
    for (const auto& r : records) out << telemetry_row(r) << '\n';
}

std::vector<TelemetryRecord> read_telemetry(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty telemetry file");
    const auto col = columns(line, {"t", "phi", "theta", "psi", "l", "delta", "v_winch_cmd", "v_winch_actual", "v_a",
                                    "gamma_s", "psi_s", "psi_c", "phase", "F", "P_mech"});
    std::vector<TelemetryRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != col.size()) {
            throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": expected " + std::to_string(col.size()) +
                                           " fields, got " + std::to_string(cells.size()));
        }
        auto get = [&](const char* name) { return to_double(cells[col.at(name)], line_no, name); };
        TelemetryRecord r;
        r.t = get("t");
        r.phi = get("phi");
        r.theta = get("theta");
        r.psi = get("psi");
        r.l = get("l");
        r.delta = get("delta");
        r.v_winch_cmd = get("v_winch_cmd");
        r.v_winch_actual = get("v_winch_actual");
        r.v_a = get("v_a");
        r.gamma_s = get("gamma_s");
        r.psi_s = get("psi_s");
        r.psi_c = get("psi_c");
        try {
            r.phase = guidance::phase_from_string(cells[col.at("phase")]);
        } catch (const Error&) {
            throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": unknown phase '" + cells[col.at("phase")] + "'");
        }
        r.F = get("F");
        r.P_mech = get("P_mech");
        records.push_back(r);
    }
    return records;
}

std::string cycle_reports_json(std::span<const CycleReport> reports) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["cycle_index"] = r.cycle_index;
        j["T"] = number(r.T);
        j["W_out"] = number(r.W_out);
        j["W_in"] = number(r.W_in);
        j["P_bar_cycle"] = number(r.P_bar_cycle);
        j["F_peak"] = number(r.F_peak);
        j["v_a_min"] = number(r.v_a_min);
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

void write_cycle(std::ostream& out, const optimizer::OptimalCycle& cycle) {
    out << kCycleHeader << '\n';
    for (const auto& s : cycle.samples) {
        out << format_number(s.t) << ',' << format_number(s.theta) << ',' << format_number(s.l) << ','
            << format_number(s.psi) << ',' << format_number(s.l_dot) << ',' << format_number(s.v_a) << ','
            << format_number(s.F) << ',' << format_number(s.P) << '\n';
    }
}

std::vector<optimizer::CycleSample> read_cycle(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::Io, "empty cycle file");
    const auto col = columns(line, {"t", "theta", "l", "psi", "l_dot", "v_a", "F", "P"});
    std::vector<optimizer::CycleSample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != col.size()) {
            throw Error(ErrorKind::Io, "line " + std::to_string(line_no) + ": expected " + std::to_string(col.size()) +
                                           " fields, got " + std::to_string(cells.size()));
        }
        auto get = [&](const char* name) { return to_double(cells[col.at(name)], line_no, name); };
        samples.push_back({get("t"), get("theta"), get("l"), get("psi"), get("l_dot"), get("v_a"), get("F"), get("P")});
    }
    return samples;
}

std::string optimizer_summary_json(const optimizer::OptimalCycle& cycle, double p_loyd) {
    nlohmann::ordered_json j;
    j["P_bar"] = number(cycle.P_bar);
    j["P_loyd"] = number(p_loyd);
    j["ratio"] = number(cycle.ratio);
    j["T"] = number(cycle.T);
    j["t_switch"] = number(cycle.t_switch);
    j["theta_residual"] = number(cycle.theta_residual);
    j["l_residual"] = number(cycle.l_residual);
    j["iterations"] = cycle.iterations;
    j["converged"] = cycle.converged;
    return j.dump(2) + "\n";
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace kitepower::io
