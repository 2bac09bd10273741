#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pfsi/core/errors.hpp"

namespace pfsi {

static_assert(std::endian::native == std::endian::little,
              "snapshot format is little-endian; big-endian hosts are unsupported");

/// Binary field snapshot: magic 'PFSI', version, fixed-width field name,
/// spatial dimension, component count, time stamp, grid shape, then the
/// row-major float64 payload (shape product x components values).
struct FieldSnapshot {
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::size_t kNameBytes = 32;

    std::string name;
    std::uint32_t dims = 0;
    std::uint32_t components = 1;
    double time = 0.0;
    std::vector<std::uint32_t> shape;
    std::vector<double> data;

    std::size_t expected_values() const {
        std::size_t n = components;
        for (auto s : shape) n *= s;
        return n;
    }
};

inline void write_snapshot(const std::string& path, const FieldSnapshot& snap) {
    if (snap.data.size() != snap.expected_values())
        throw CorruptSnapshot("payload size does not match shape x components");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open snapshot for writing: " + path);

    out.write("PFSI", 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(FieldSnapshot::kVersion);

    char namebuf[FieldSnapshot::kNameBytes] = {};
    std::strncpy(namebuf, snap.name.c_str(), FieldSnapshot::kNameBytes - 1);
    out.write(namebuf, FieldSnapshot::kNameBytes);

    put_u32(snap.dims);
    put_u32(snap.components);
    out.write(reinterpret_cast<const char*>(&snap.time), 8);
    put_u32(std::uint32_t(snap.shape.size()));
    for (auto s : snap.shape) put_u32(s);
    out.write(reinterpret_cast<const char*>(snap.data.data()),
              std::streamsize(snap.data.size() * 8));
    if (!out) throw std::runtime_error("snapshot write failed: " + path);
}

inline FieldSnapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open snapshot: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "PFSI", 4) != 0)
        throw CorruptSnapshot("bad magic in " + path);

    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw CorruptSnapshot("truncated header in " + path);
        return v;
    };
    std::uint32_t version = get_u32();
    if (version != FieldSnapshot::kVersion)
        throw VersionMismatch("snapshot version " + std::to_string(version)
                              + " (reader supports " + std::to_string(FieldSnapshot::kVersion)
                              + ")");

    FieldSnapshot snap;
    char namebuf[FieldSnapshot::kNameBytes];
    in.read(namebuf, FieldSnapshot::kNameBytes);
    if (!in) throw CorruptSnapshot("truncated header in " + path);
    namebuf[FieldSnapshot::kNameBytes - 1] = '\0';
    snap.name = namebuf;

    snap.dims = get_u32();
    snap.components = get_u32();
    in.read(reinterpret_cast<char*>(&snap.time), 8);
    std::uint32_t rank = get_u32();
    if (rank > 8) throw CorruptSnapshot("implausible shape rank in " + path);
    snap.shape.resize(rank);
    for (auto& s : snap.shape) s = get_u32();

    snap.data.resize(snap.expected_values());
    in.read(reinterpret_cast<char*>(snap.data.data()), std::streamsize(snap.data.size() * 8));
    if (!in || std::size_t(in.gcount()) != snap.data.size() * 8)
        throw CorruptSnapshot("payload shorter than shape x components in " + path);
    // any trailing bytes mean the header lied about the payload length
    char probe;
    in.read(&probe, 1);
    if (in.gcount() != 0) throw CorruptSnapshot("payload longer than shape x components in " + path);
    return snap;
}

} // namespace pfsi
