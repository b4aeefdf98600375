#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vplab/experiments.hpp"

namespace vplab {

namespace {

constexpr char kMagic[7] = {'V', 'P', 'S', 'N', 'A', 'P', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t offset) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[offset + b]) << (8 * b);
    return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t offset) {
    return std::bit_cast<double>(get_u64(in, offset));
}

const char* kind_name(SnapshotKind k) { return k == SnapshotKind::micro ? "micro" : "reference"; }

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snap) {
    const std::size_t n = snap.state.size();
    if (snap.state.p.size() != n) throw DomainError("encode_snapshot: q and p sizes differ");
    std::vector<std::uint8_t> out;
    out.reserve(kSnapshotHeaderBytes + 48 * n);
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(kSnapshotVersion);
    out.push_back(static_cast<std::uint8_t>(snap.kind));
    put_u64(out, n);
    put_f64(out, snap.state.t);
    put_f64(out, snap.delta);
    put_f64(out, snap.sigma);
    put_f64(out, snap.alpha);
    for (const Vec3& q : snap.state.q) {
        put_f64(out, q.x);
        put_f64(out, q.y);
        put_f64(out, q.z);
    }
    for (const Vec3& p : snap.state.p) {
        put_f64(out, p.x);
        put_f64(out, p.y);
        put_f64(out, p.z);
    }
    return out;
}

Snapshot decode_snapshot(std::span<const std::uint8_t> bytes, std::optional<SnapshotKind> expected) {
    if (bytes.size() < sizeof kMagic) {
        throw FormatError("snapshot: file is " + std::to_string(bytes.size()) + " bytes, shorter than the magic",
                          bytes.size());
    }
    for (std::size_t i = 0; i < sizeof kMagic; ++i) {
        if (bytes[i] != static_cast<std::uint8_t>(kMagic[i])) {
            throw FormatError("snapshot: bad magic at byte offset " + std::to_string(i), i);
        }
    }
    if (bytes.size() < kSnapshotHeaderBytes) {
        throw FormatError("snapshot: truncated header, expected " + std::to_string(kSnapshotHeaderBytes) +
                              " bytes, found " + std::to_string(bytes.size()),
                          bytes.size());
    }
    if (bytes[7] != kSnapshotVersion) {
        throw FormatError("snapshot: unsupported version " + std::to_string(bytes[7]) + " at byte offset 7", 7);
    }
    if (bytes[8] > 1) throw FormatError("snapshot: invalid kind flag " + std::to_string(bytes[8]) + " at byte offset 8", 8);
    Snapshot snap;
    snap.kind = static_cast<SnapshotKind>(bytes[8]);
    if (expected && *expected != snap.kind) {
        throw FormatError(std::string("snapshot: kind flag at byte offset 8 is ") + kind_name(snap.kind) + ", expected " +
                              kind_name(*expected),
                          8);
    }
    const std::uint64_t n = get_u64(bytes, 9);
    const std::uint64_t payload = (bytes.size() - kSnapshotHeaderBytes) / 48;
    if (n > payload || bytes.size() != kSnapshotHeaderBytes + 48 * n) {
        const std::size_t want = n > (SIZE_MAX - kSnapshotHeaderBytes) / 48 ? SIZE_MAX : kSnapshotHeaderBytes + 48 * n;
        throw FormatError("snapshot: header declares n = " + std::to_string(n) + " (" + std::to_string(want) +
                              " bytes) but the file has " + std::to_string(bytes.size()) + " bytes; mismatch at byte offset " +
                              std::to_string(std::min(want, bytes.size())),
                          std::min(want, bytes.size()));
    }
    snap.state = PhaseState(static_cast<std::size_t>(n), get_f64(bytes, 17));
    snap.delta = get_f64(bytes, 25);
    snap.sigma = get_f64(bytes, 33);
    snap.alpha = get_f64(bytes, 41);
    std::size_t off = kSnapshotHeaderBytes;
    for (auto* arr : {&snap.state.q, &snap.state.p}) {
        for (Vec3& v : *arr) {
            v.x = get_f64(bytes, off);
            v.y = get_f64(bytes, off + 8);
            v.z = get_f64(bytes, off + 16);
            off += 24;
        }
    }
    return snap;
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
    const auto bytes = encode_snapshot(snap);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path, std::optional<SnapshotKind> expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open snapshot " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_snapshot(bytes, expected);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
}

}  // namespace vplab
