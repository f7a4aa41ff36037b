#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kamforge/lattice.hpp"

namespace kamforge {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat sections of key = value pairs; every access is validated and failures
// name the file line, section, key and the violated constraint.
class RunConfig {
public:
    static RunConfig parse_file(const std::string& path);
    static RunConfig parse_string(const std::string& text, const std::string& name = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    // with constraint: description like "> 0" checked by pred
    double get_double_checked(const std::string& section, const std::string& key, double fallback,
                              bool (*pred)(double), const char* constraint) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    int get_int_checked(const std::string& section, const std::string& key, int fallback,
                        bool (*pred)(int), const char* constraint) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const;
    // site tuples: "1" or "(1,0);(0,1)"
    std::vector<Site> get_sites(const std::string& section, const std::string& key, int d_star,
                                std::vector<Site> fallback) const;

    [[noreturn]] void fail(const std::string& section, const std::string& key,
                           const std::string& constraint) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string name_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    const Entry* find(const std::string& section, const std::string& key) const;
};

} // namespace kamforge
