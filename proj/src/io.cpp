#include "memsieve/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "memsieve/errors.hpp"

namespace memsieve::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json parse_json_file(const std::filesystem::path& path) {
    std::string content = read_file(path);
    json doc = json::parse(content, nullptr, false);
    if (doc.is_discarded()) throw Error("invalid JSON in " + path.string());
    return doc;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& doc) {
    atomic_write(path, doc.dump(2) + "\n");
}

}  // namespace memsieve::io
