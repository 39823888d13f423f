#pragma once

// Flat "key = value" text documents: run configs, manifests and the
// serialized classifier all use this format. Keys keep insertion order so
// output is reproducible byte for byte.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace surerag::kv {

class Document {
public:
    static Document parse(const std::string& content, const std::string& origin = "<memory>");
    static Document read(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    std::optional<std::string> get(const std::string& key) const;
    const std::string& require(const std::string& key) const;
    bool contains(const std::string& key) const { return get(key).has_value(); }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);
long long parse_int(const std::string& s);

std::string join_doubles(const std::vector<double>& values);
std::vector<double> split_doubles(const std::string& s);
std::vector<std::string> split_list(const std::string& s);

std::string trim(const std::string& s);

}  // namespace surerag::kv
