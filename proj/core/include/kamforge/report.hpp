#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace kamforge {

// Tab separated table writer with reproducible formatting (%.17g).
class TsvWriter {
public:
    TsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    static std::string num(double v);
    static std::string num(int v) { return std::to_string(v); }

private:
    std::ofstream out_;
};

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Reads KAMFORGE_LOG in {quiet, info, debug}; defaults to info.
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace kamforge
