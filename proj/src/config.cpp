#include "mmsc/config.hpp"

#include <cctype>
#include <cstdlib>

#include "mmsc/error.hpp"

namespace mmsc {

namespace {

std::string_view trim(std::string_view text) {
    size_t b = 0;
    size_t e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return text.substr(b, e - b);
}

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-') {
            return false;
        }
    }
    return true;
}

// Unquotes "..." with \" and \\ escapes; raw values are trimmed and may not
// contain a quote or comment character.
std::string parse_value(std::string_view raw, size_t line_no) {
    raw = trim(raw);
    if (!raw.empty() && raw.front() == '"') {
        std::string out;
        size_t i = 1;
        bool closed = false;
        while (i < raw.size()) {
            const char c = raw[i];
            if (c == '\\' && i + 1 < raw.size()) {
                out.push_back(raw[i + 1]);
                i += 2;
                continue;
            }
            if (c == '"') {
                closed = true;
                ++i;
                break;
            }
            out.push_back(c);
            ++i;
        }
        const std::string_view rest = trim(raw.substr(i));
        if (!closed || (!rest.empty() && rest.front() != '#')) {
            raise(ErrorCode::MalformedInput,
                  "line " + std::to_string(line_no) + ": bad quoted value");
        }
        return out;
    }
    const size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = trim(raw.substr(0, hash));
    return std::string(raw);
}

} // namespace

FlatConfig parse_flat_config(std::string_view text) {
    FlatConfig cfg;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        const size_t nl = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        const size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            raise(ErrorCode::MalformedInput,
                  "line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key{trim(line.substr(0, eq))};
        if (!valid_key(key)) {
            raise(ErrorCode::MalformedInput,
                  "line " + std::to_string(line_no) + ": bad key \"" + key + "\"");
        }
        cfg.entries[key] = parse_value(line.substr(eq + 1), line_no);
    }
    return cfg;
}

double config_double(const FlatConfig& cfg, const std::string& key) {
    const std::string& raw = cfg.entries.at(key);
    char* end = nullptr;
    const double value = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') {
        raise(ErrorCode::InvalidConfig, key + " must be a number, got \"" + raw + "\"");
    }
    return value;
}

int config_int(const FlatConfig& cfg, const std::string& key) {
    const std::string& raw = cfg.entries.at(key);
    char* end = nullptr;
    const long value = std::strtol(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') {
        raise(ErrorCode::InvalidConfig, key + " must be an integer, got \"" + raw + "\"");
    }
    return static_cast<int>(value);
}

bool config_bool(const FlatConfig& cfg, const std::string& key) {
    const std::string& raw = cfg.entries.at(key);
    if (raw == "true") return true;
    if (raw == "false") return false;
    raise(ErrorCode::InvalidConfig, key + " must be true or false, got \"" + raw + "\"");
}

} // namespace mmsc
