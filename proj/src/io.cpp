#include "mmsc/io.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>

#include "mmsc/error.hpp"

namespace mmsc {

namespace {

std::atomic<uint64_t> g_tmp_counter{0};

}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) raise(ErrorCode::IoError, "read failed: " + path.string());
    return content;
}

std::vector<uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    return std::vector<uint8_t>(text.begin(), text.end());
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot open for write: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) raise(ErrorCode::IoError, "write failed: " + path.string());
}

void write_binary_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    uint64_t n = g_tmp_counter.fetch_add(1);
    std::filesystem::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(n);
    write_text_file(tmp, content);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        raise(ErrorCode::IoError, "rename failed: " + path.string() + " (" + ec.message() + ")");
    }
}

} // namespace mmsc
