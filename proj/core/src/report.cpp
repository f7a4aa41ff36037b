#include "kamforge/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <stdexcept>

namespace kamforge {

TsvWriter::TsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path) {
    if (!out_) throw std::runtime_error("cannot open output file " + path);
    row(header);
}

void TsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "\t" : "") << cells[i];
    out_ << "\n";
}

std::string TsvWriter::num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* e = std::getenv("KAMFORGE_LOG");
        if (!e) return LogLevel::Info;
        const std::string v = e;
        if (v == "quiet") return LogLevel::Quiet;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return lvl;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[kamforge] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::cerr << "[kamforge:debug] " << msg << "\n";
}

} // namespace kamforge
