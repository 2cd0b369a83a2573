#include "emprobe/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "emprobe/errors.hpp"

namespace emprobe::io {

std::string read_file(const std::filesystem::path & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path & path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw io_error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw io_error("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw io_error("cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

std::span<const unsigned char> byte_reader::take(size_t n) {
    if (n > remaining()) {
        throw parse_error("unexpected end of data (wanted " + std::to_string(n) + " bytes, " +
                          std::to_string(remaining()) + " left)");
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

} // namespace emprobe::io
