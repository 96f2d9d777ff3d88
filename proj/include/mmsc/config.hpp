#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mmsc {

// Flat declarative key/value file: one `key = value` per line, `#` comments,
// values optionally double-quoted. Duplicate keys keep the last value.
// Which keys are meaningful (and rejection of unknown ones) is decided by
// the consumer.
struct FlatConfig {
    std::map<std::string, std::string> entries;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
};

FlatConfig parse_flat_config(std::string_view text); // throws MalformedInput

// Typed accessors with range/format validation; throw InvalidConfig.
double config_double(const FlatConfig& cfg, const std::string& key);
int config_int(const FlatConfig& cfg, const std::string& key);
bool config_bool(const FlatConfig& cfg, const std::string& key);

} // namespace mmsc
