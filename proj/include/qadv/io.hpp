#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qadv/errors.hpp"

namespace qadv {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path + "' for reading");
    }
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) {
        throw DataError("read failed on '" + path + "'");
    }
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open '" + path + "' for writing");
    }
    out << content;
    out.flush();
    if (!out) {
        throw DataError("write failed on '" + path + "'");
    }
}

inline void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) {
        throw DataError("cannot create directory '" + path + "': " + ec.message());
    }
}

} // namespace qadv
