#include "laekit/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace laekit {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char type[4],
               const std::vector<unsigned char>& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0, out.data() + start, static_cast<uInt>(out.size() - start)));
    put_u32(out, crc);
}

}  // namespace

void write_png(const std::filesystem::path& path, const Tensor& pixels) {
    if (pixels.shape.size() != 3 || pixels.shape[2] != 3)
        throw std::invalid_argument("write_png: expected an (H, W, 3) image");
    int h = pixels.shape[0], w = pixels.shape[1];

    // scanlines with filter byte 0
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
    for (int y = 0; y < h; ++y) {
        raw.push_back(0);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = pixels[(y * w + x) * 3 + c];
                v = std::min(1.0f, std::max(0.0f, v));
                raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0f)));
            }
    }
    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> compressed(bound);
    if (::compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("write_png: deflate failed");
    compressed.resize(bound);

    std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    std::vector<unsigned char> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(w));
    put_u32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", compressed);
    put_chunk(out, "IEND", {});

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_png: cannot open " + path.string());
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_png: short write to " + path.string());
}

std::string sweep_file_name(const CameraPose& pose) {
    auto fmt = [](float deg) {
        long v = std::lround(deg);
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%+03ld", v);
        return std::string(buf);
    };
    return "yaw" + fmt(pose.yaw) + "_pitch" + fmt(pose.pitch) + ".png";
}

std::vector<std::string> write_pose_sweep(const std::filesystem::path& out_dir,
                                          const std::vector<RenderedImage>& images) {
    std::filesystem::create_directories(out_dir);
    nlohmann::json index = nlohmann::json::array();
    std::vector<std::string> names;
    for (const RenderedImage& img : images) {
        std::string name = sweep_file_name(img.pose);
        write_png(out_dir / name, img.pixels);
        index.push_back({{"yaw", img.pose.yaw}, {"pitch", img.pose.pitch}, {"file", name}});
        names.push_back(std::move(name));
    }
    std::ofstream f(out_dir / "index.json");
    if (!f) throw std::runtime_error("write_pose_sweep: cannot write index.json");
    f << index.dump(2) << "\n";
    return names;
}

}  // namespace laekit
