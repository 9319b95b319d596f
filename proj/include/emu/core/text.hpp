#pragma once

#include <map>
#include <string>
#include <vector>

namespace emu {

// Shortest round-trippable decimal form of a double (printf %.17g), so
// serialized reports and config blocks are byte-stable and lossless.
std::string format_double(double v);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);
bool parse_bool(const std::string& s, const std::string& context);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
std::string to_lower(std::string s);

// Canonical key-sorted "key = value" block used by checkpoints and reports.
std::string write_kv_block(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_kv_block(const std::string& text, const std::string& context);

}  // namespace emu
