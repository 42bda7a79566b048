#include "harness/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "util/error.hpp"

namespace rn::harness {

using json = nlohmann::ordered_json;

namespace {

std::string number(const json& v) {
    if (v.is_number_integer()) return v.dump();
    const double x = v.get<double>();
    if (!std::isfinite(x)) return "null";
    return fmt::format("{:.17g}", x);
}

void write(const json& v, int indent, int depth, std::string& out) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* colon = indent > 0 ? ": " : ":";
    switch (v.type()) {
        case json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{";
            out += nl;
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) {
                    out += ",";
                    out += nl;
                }
                first = false;
                out += pad + json(it.key()).dump() + colon;
                write(it.value(), indent, depth + 1, out);
            }
            out += nl + close_pad + "}";
            return;
        }
        case json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            // scalar arrays stay on one line
            bool flat = true;
            for (const auto& x : v) flat = flat && !x.is_structured();
            out += "[";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += flat && indent > 0 ? ", " : ",";
                if (!flat) out += nl + pad;
                write(v[i], indent, depth + 1, out);
            }
            if (!flat) out += nl + close_pad;
            out += "]";
            return;
        }
        case json::value_t::number_float:
        case json::value_t::number_integer:
        case json::value_t::number_unsigned:
            out += number(v);
            return;
        default:
            out += v.dump();
    }
}

std::string csv_cell(const json& v) {
    if (v.is_number()) return number(v);
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) return "";
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

void Table::add(std::vector<json> row) {
    if (row.size() != columns.size()) fail(ErrorKind::invalid_argument, "cli-harness/table", "row width differs from the schema");
    rows.push_back(std::move(row));
}

void Report::check(std::string name, bool passed, double value, double threshold, std::string detail) {
    checks.push_back({std::move(name), passed, value, threshold, std::move(detail)});
}

bool Report::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

std::string Report::settings_hash() const { return fmt::format("{:016x}", fnv1a(dump_json(settings, 0))); }

json Report::to_json() const {
    json out;
    out["command"] = command;
    out["scenario"] = scenario;
    out["settings"] = settings;
    out["settings_hash"] = settings_hash();
    out["passed"] = passed();
    json cs = json::array();
    for (const auto& c : checks) {
        json j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["value"] = c.value;
        j["threshold"] = c.threshold;
        if (!c.detail.empty()) j["detail"] = c.detail;
        cs.push_back(j);
    }
    out["checks"] = cs;
    out["results"] = results;
    json ts = json::array();
    for (const auto& t : tables) ts.push_back(t.name);
    out["tables"] = ts;
    return out;
}

std::string dump_json(const json& v, int indent) {
    std::string out;
    write(v, indent, 0, out);
    if (indent > 0) out += "\n";
    return out;
}

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + csv_cell(t.columns[i]);
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
        out += "\n";
    }
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace rn::harness
