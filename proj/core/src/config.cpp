#include "kamforge/config.hpp"

#include <fstream>
#include <sstream>

namespace kamforge {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

} // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_string(os.str(), path);
}

RunConfig RunConfig::parse_string(const std::string& text, const std::string& name) {
    RunConfig cfg;
    cfg.name_ = name;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError(name + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(name + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError(name + ":" + std::to_string(lineno) + ": key outside any [section]");
        if (cfg.sections_[section].count(key))
            throw ConfigError(name + ":" + std::to_string(lineno) + ": duplicate key [" + section +
                              "] " + key);
        cfg.sections_[section][key] = Entry{value, lineno};
    }
    return cfg;
}

const RunConfig::Entry* RunConfig::find(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

void RunConfig::fail(const std::string& section, const std::string& key,
                     const std::string& constraint) const {
    const Entry* e = find(section, key);
    const std::string loc = e ? name_ + ":" + std::to_string(e->line) : name_;
    throw ConfigError(loc + ": [" + section + "] " + key + ": " + constraint);
}

std::string RunConfig::get_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(name_ + ": missing required [" + section + "] " + key);
    return e->value;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) throw ConfigError(name_ + ": missing required [" + section + "] " + key);
    try {
        size_t pos = 0;
        const double v = std::stod(e->value, &pos);
        if (pos != e->value.size()) fail(section, key, "not a number: '" + e->value + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(section, key, "not a number: '" + e->value + "'");
    } catch (const std::out_of_range&) {
        fail(section, key, "out of range: '" + e->value + "'");
    }
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

double RunConfig::get_double_checked(const std::string& section, const std::string& key,
                                     double fallback, bool (*pred)(double),
                                     const char* constraint) const {
    const double v = get_double(section, key, fallback);
    if (!pred(v)) fail(section, key, constraint);
    return v;
}

int RunConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
    if (!has(section, key)) return fallback;
    const double v = get_double(section, key);
    const int i = int(v);
    if (double(i) != v) fail(section, key, "must be an integer");
    return i;
}

int RunConfig::get_int_checked(const std::string& section, const std::string& key, int fallback,
                               bool (*pred)(int), const char* constraint) const {
    const int v = get_int(section, key, fallback);
    if (!pred(v)) fail(section, key, constraint);
    return v;
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail(section, key, "must be a boolean (true/false)");
}

uint64_t RunConfig::get_u64(const std::string& section, const std::string& key,
                            uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key);
    try {
        size_t pos = 0;
        const uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) fail(section, key, "not an unsigned integer: '" + v + "'");
        return u;
    } catch (const std::exception&) {
        fail(section, key, "not an unsigned integer: '" + v + "'");
    }
}

std::vector<double> RunConfig::get_doubles(const std::string& section, const std::string& key,
                                           std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get_string(section, key);
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            fail(section, key, "not a number list: token '" + tok + "'");
        }
    }
    if (out.empty()) fail(section, key, "empty list");
    return out;
}

std::vector<Site> RunConfig::get_sites(const std::string& section, const std::string& key,
                                       int d_star, std::vector<Site> fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = get_string(section, key);
    for (char& c : v)
        if (c == '(' || c == ')') c = ' ';
    std::vector<Site> out;
    std::istringstream tuples(v);
    std::string tup;
    while (std::getline(tuples, tup, ';')) {
        tup = trim(tup);
        if (tup.empty()) continue;
        Site s;
        s.dim = d_star;
        std::istringstream coords(tup);
        std::string c;
        int i = 0;
        while (std::getline(coords, c, ',')) {
            c = trim(c);
            if (i >= d_star) fail(section, key, "site tuple has more than d_star coordinates");
            try {
                s.c[i++] = std::stoi(c);
            } catch (const std::exception&) {
                fail(section, key, "bad coordinate '" + c + "'");
            }
        }
        if (i != d_star) fail(section, key, "site tuple needs d_star coordinates");
        out.push_back(s);
    }
    if (out.empty()) fail(section, key, "empty site list");
    return out;
}

} // namespace kamforge
