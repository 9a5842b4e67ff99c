#include "laekit/checkpoint.hpp"

#include <zlib.h>

#include <fstream>
#include <stdexcept>

namespace laekit {

namespace fs = std::filesystem;

const Tensor& CheckpointData::array(const std::string& name) const {
    for (const auto& [n, t] : arrays)
        if (n == name) return t;
    throw std::out_of_range("checkpoint array not found: " + name);
}

bool CheckpointData::has(const std::string& name) const {
    for (const auto& [n, t] : arrays)
        if (n == name) return true;
    return false;
}

static std::uint32_t tensor_crc(const Tensor& t) {
    return static_cast<std::uint32_t>(
        ::crc32(0, reinterpret_cast<const Bytef*>(t.data.data()),
                static_cast<uInt>(t.data.size() * sizeof(float))));
}

static std::string array_file_name(const std::string& name) {
    std::string f = name;
    for (char& c : f)
        if (c == '/' || c == '\\') c = '_';
    return f + ".bin";
}

void save_checkpoint(const CheckpointData& data, const fs::path& dir) {
    fs::path tmp = dir;
    tmp += ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    nlohmann::json manifest;
    manifest["format_version"] = kCheckpointFormatVersion;
    manifest["step"] = data.step;
    manifest["config"] = data.config;
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& [name, t] : data.arrays) {
        std::string file = array_file_name(name);
        std::size_t bytes = t.data.size() * sizeof(float);
        std::ofstream f(tmp / file, std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + file);
        f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(bytes));
        if (!f) throw std::runtime_error("checkpoint: short write to " + file);
        arrays.push_back({{"name", name},
                          {"shape", t.shape},
                          {"dtype", "f32-le"},
                          {"file", file},
                          {"byte_offset", 0},
                          {"byte_length", bytes},
                          {"crc32", tensor_crc(t)}});
    }
    manifest["arrays"] = arrays;
    {
        std::ofstream f(tmp / "manifest.json");
        if (!f) throw std::runtime_error("checkpoint: cannot write manifest.json");
        f << manifest.dump(2) << "\n";
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
}

nlohmann::json read_manifest(const fs::path& dir) {
    std::ifstream f(dir / "manifest.json");
    if (!f) throw std::runtime_error("checkpoint: missing manifest at " + dir.string());
    nlohmann::json manifest;
    try {
        f >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: corrupt manifest: ") + e.what());
    }
    return manifest;
}

CheckpointData load_checkpoint(const fs::path& dir) {
    nlohmann::json manifest = read_manifest(dir);
    if (!manifest.contains("format_version") ||
        manifest["format_version"].get<int>() != kCheckpointFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version");
    CheckpointData data;
    data.step = manifest.value("step", std::uint64_t{0});
    data.config = manifest.value("config", nlohmann::json::object());
    for (const auto& entry : manifest.at("arrays")) {
        std::string name = entry.at("name").get<std::string>();
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        if (entry.at("dtype").get<std::string>() != "f32-le")
            throw std::runtime_error("checkpoint: unsupported dtype for " + name);
        std::size_t bytes = entry.at("byte_length").get<std::size_t>();
        std::size_t offset = entry.at("byte_offset").get<std::size_t>();
        if (bytes != static_cast<std::size_t>(shape_size(shape)) * sizeof(float))
            throw std::runtime_error("checkpoint: byte length does not match shape for " + name);
        std::ifstream f(dir / entry.at("file").get<std::string>(), std::ios::binary);
        if (!f) throw std::runtime_error("checkpoint: missing array file for " + name);
        f.seekg(static_cast<std::streamoff>(offset));
        Tensor t = Tensor::zeros(shape);
        f.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(bytes));
        if (f.gcount() != static_cast<std::streamsize>(bytes))
            throw std::runtime_error("checkpoint: truncated array file for " + name);
        if (tensor_crc(t) != entry.at("crc32").get<std::uint32_t>())
            throw std::runtime_error("checkpoint: CRC mismatch for array " + name);
        data.arrays.emplace_back(std::move(name), std::move(t));
    }
    return data;
}

}  // namespace laekit
