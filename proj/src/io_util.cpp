#include "scenelang/io_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scenelang/errors.hpp"

namespace scenelang {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file for reading: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw IoError("read failure: " + path);
    }
    return buf.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open file for writing: " + tmp);
        }
        out << content;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw IoError("write failure: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw IoError("rename failure: " + tmp + " -> " + path + " (" + ec.message() + ")");
    }
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        throw SchemaError("invalid JSON: " + path);
    }
    return value;
}

void write_json_file(const std::string& path, const nlohmann::json& value) {
    atomic_write_file(path, value.dump(2) + "\n");
}

int count_tokens(const std::string& text) {
    int count = 0;
    bool in_token = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in_token) {
            ++count;
        }
        in_token = !ws;
    }
    return count;
}

} // namespace scenelang
