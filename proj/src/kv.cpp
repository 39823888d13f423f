#include "surerag/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "surerag/error.hpp"

namespace surerag::kv {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Document Document::parse(const std::string& content, const std::string& origin) {
    Document doc;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::parse, origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(t.substr(0, eq));
        if (key.empty()) fail(ErrorCode::parse, origin + ":" + std::to_string(line_no) + ": empty key");
        doc.set(key, trim(t.substr(eq + 1)));
    }
    return doc;
}

Document Document::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void Document::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

std::optional<std::string> Document::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

const std::string& Document::require(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    fail(ErrorCode::parse, "missing key '" + key + "'");
}

std::string Document::str() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

void Document::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
    out << str();
    if (!out) fail(ErrorCode::io, "write failed for '" + path.string() + "'");
}

std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) fail(ErrorCode::invalid_argument, "cannot format double");
    return {buf, ptr};
}

double parse_double(const std::string& s) {
    const auto t = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        fail(ErrorCode::parse, "not a number: '" + s + "'");
    return v;
}

long long parse_int(const std::string& s) {
    const auto t = trim(s);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        fail(ErrorCode::parse, "not an integer: '" + s + "'");
    return v;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += format_double(values[i]);
    }
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        auto t = trim(item);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(item));
    return out;
}

}  // namespace surerag::kv
