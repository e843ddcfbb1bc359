#include "pillarnav/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pillarnav {

namespace {
constexpr int kFormatVersion = 1;

static_assert(sizeof(float) == 4, "float32 payload assumes 4-byte float");

#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ != __ORDER_LITTLE_ENDIAN__
#error "checkpoint payload is little-endian"
#endif
}  // namespace

void Checkpoint::add(const std::string& name, const std::vector<int>& shape,
                     const std::vector<float>& data) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    if (n != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("checkpoint: shape/data mismatch for " + name);
    if (arrays_.count(name)) throw std::invalid_argument("checkpoint: duplicate array " + name);
    arrays_[name] = Array{shape, data};
}

void Checkpoint::add(const std::string& name, const Tensor& t) {
    add(name, t.shape(), t.vec());
}

const Checkpoint::Array& Checkpoint::get(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw std::runtime_error("checkpoint: missing array " + name);
    return it->second;
}

void Checkpoint::load_into(const std::string& name, Tensor& t) const {
    const Array& a = get(name);
    if (a.shape != t.shape())
        throw std::runtime_error("checkpoint: shape mismatch for " + name + ": file " +
                                 shape_str(a.shape) + " vs model " + shape_str(t.shape()));
    std::memcpy(t.data(), a.data.data(), a.data.size() * sizeof(float));
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["metadata"] = metadata;
    nlohmann::json entries = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, arr] : arrays_) {
        entries.push_back({{"name", name},
                           {"shape", arr.shape},
                           {"offset", offset},
                           {"count", arr.data.size()}});
        offset += arr.data.size() * sizeof(float);
    }
    manifest["arrays"] = entries;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
    out << manifest.dump() << "\n";
    for (const auto& [name, arr] : arrays_) {
        (void)name;
        out.write(reinterpret_cast<const char*>(arr.data.data()),
                  static_cast<std::streamsize>(arr.data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
    std::string manifest_line;
    if (!std::getline(in, manifest_line))
        throw std::runtime_error("checkpoint: missing manifest in " + path);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint: corrupt manifest in " + path + ": " + e.what());
    }
    if (manifest.value("format_version", -1) != kFormatVersion)
        throw std::runtime_error("checkpoint: unsupported format version in " + path);

    const std::streampos payload_start = in.tellg();
    in.seekg(0, std::ios::end);
    const std::uint64_t payload_bytes =
        static_cast<std::uint64_t>(in.tellg() - payload_start);

    std::uint64_t expected = 0;
    for (const auto& e : manifest.at("arrays"))
        expected += e.at("count").get<std::uint64_t>() * sizeof(float);
    if (payload_bytes != expected)
        throw std::runtime_error("checkpoint: payload length mismatch in " + path + " (have " +
                                 std::to_string(payload_bytes) + " bytes, manifest expects " +
                                 std::to_string(expected) + ")");

    Checkpoint ckpt;
    ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
    in.seekg(payload_start);
    for (const auto& e : manifest.at("arrays")) {
        Array arr;
        arr.shape = e.at("shape").get<std::vector<int>>();
        arr.data.resize(e.at("count").get<size_t>());
        in.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(arr.data.data()),
                static_cast<std::streamsize>(arr.data.size() * sizeof(float)));
        if (!in) throw std::runtime_error("checkpoint: truncated payload in " + path);
        ckpt.arrays_[e.at("name").get<std::string>()] = std::move(arr);
    }
    return ckpt;
}

}  // namespace pillarnav
