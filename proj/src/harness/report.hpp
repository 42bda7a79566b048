#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rn::harness {

// CSV table; cells are JSON scalars so numbers keep full precision until emission.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::ordered_json>> rows;

    void add(std::vector<nlohmann::ordered_json> row);
};

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct Report {
    std::string command;
    std::string scenario;
    nlohmann::ordered_json settings;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    std::vector<Check> checks;
    std::vector<Table> tables;

    void check(std::string name, bool passed, double value, double threshold, std::string detail = {});
    bool passed() const;
    std::string settings_hash() const;
    nlohmann::ordered_json to_json() const;
};

// JSON text with floating values at 17 significant digits; non-finite values become null.
std::string dump_json(const nlohmann::ordered_json& v, int indent = 2);
std::string to_csv(const Table& t);
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace rn::harness
