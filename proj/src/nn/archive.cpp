#include "stdeep/nn/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "stdeep/error.hpp"

namespace stdeep::nn {

namespace {

constexpr char kMagic[8] = {'S', 'T', 'D', 'E', 'E', 'P', 'A', '1'};

static_assert(std::endian::native == std::endian::little, "archive format assumes a little-endian host");

}  // namespace

void Archive::save(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["meta"] = meta;
    header["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : arrays) {
        header["arrays"].push_back(
            {{"name", name}, {"shape", tensor.shape()}, {"offset", offset}, {"count", tensor.size()}});
        offset += tensor.size() * sizeof(double);
    }
    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write archive " + path.string());
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, tensor] : arrays)
        out.write(reinterpret_cast<const char*>(tensor.data()), static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Archive Archive::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open archive " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorKind::BadArchive, path.string() + " is not a weight archive");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw Error(ErrorKind::BadArchive, "truncated header in " + path.string());
    const auto header = nlohmann::json::parse(text);
    const auto payload_start = in.tellg();

    Archive archive;
    archive.meta = header.at("meta");
    for (const auto& entry : header.at("arrays")) {
        Shape shape = entry.at("shape").get<Shape>();
        const auto count = entry.at("count").get<std::size_t>();
        if (count != shape_size(shape)) throw Error(ErrorKind::BadArchive, "array count/shape disagree");
        Tensor t(shape);
        in.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(count * sizeof(double)));
        if (!in) throw Error(ErrorKind::BadArchive, "truncated payload in " + path.string());
        archive.arrays.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
    return archive;
}

Archive snapshot(const ParameterStore& store) {
    Archive a;
    for (const Parameter* p : store.all()) a.arrays.emplace(p->name, p->value());
    return a;
}

std::size_t restore(ParameterStore& store, const Archive& archive, bool strict) {
    std::size_t assigned = 0;
    for (Parameter* p : store.all()) {
        auto it = archive.arrays.find(p->name);
        if (it == archive.arrays.end()) {
            if (strict) throw Error(ErrorKind::BadArchive, "archive lacks parameter " + p->name);
            continue;
        }
        if (it->second.shape() != p->value().shape()) {
            throw Error(ErrorKind::BadArchive, "shape mismatch for " + p->name + ": " + shape_string(it->second.shape()) +
                                                   " vs " + shape_string(p->value().shape()));
        }
        p->var->value = it->second;
        ++assigned;
    }
    return assigned;
}

}  // namespace stdeep::nn
