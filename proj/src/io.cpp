#include "tubewcp/io.hpp"

#include <fstream>
#include <system_error>

#include "tubewcp/errors.hpp"

namespace tubewcp::io {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << content;
        if (!os.good()) throw Error("write to " + tmp.string() + " failed");
    }
    fs::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

}  // namespace tubewcp::io
