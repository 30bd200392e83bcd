// checkpoint.hpp — the QTLC binary container.
//
// Fixed little-endian layout:
//   "QTLC" | version u16 | endian u8 (1 = little) | reserved u8
//   timestamp u64                                  (bytes 8..16)
//   toy config echo: 6 x u32 + seed u64
//   dense section:      u32 count, then per tensor
//                       name(u32 len + bytes), rows u32, cols u32, f64 values
//   compressed section: u32 count, then per layer
//                       name, rows u32, cols u32, layout bytes,
//                       rank policy, truncation policy,
//                       u32 block count, per block: placement 5 x u32,
//                       rank u32, coeff count u64, (row u32, col u32, f64)
//                       triples sorted by (row, col)
//   FNV-1a 64 checksum of all preceding bytes, skipping the timestamp field
//
// The timestamp is excluded from the checksum so no-op rewrites stay
// bit-comparable. Everything else is covered: FNV-1a chains bijective
// steps, so any single-byte substitution changes the digest.

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "qtlc/compressed_model.hpp"
#include "qtlc/errors.hpp"
#include "qtlc/rank_blocks.hpp"
#include "qtlc/spectral.hpp"
#include "qtlc/tiling.hpp"

namespace qtlc {

inline constexpr std::uint16_t kQtlcVersion = 1;
inline constexpr std::size_t kTimestampOffset = 8;
inline constexpr std::size_t kTimestampSize = 8;

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
}

inline void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

struct ByteReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > size) {
            throw_error(ErrorCode::corrupt_block, "checkpoint truncated mid-record");
        }
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(
            data[pos] | (static_cast<std::uint16_t>(data[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        const std::uint32_t v = get_u32(data + pos);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(data + pos), len);
        pos += len;
        return s;
    }
};

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                             std::size_t skip_offset, std::size_t skip_size) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        if (i >= skip_offset && i < skip_offset + skip_size) continue;
        h ^= data[i];
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const CompressedModel& cm,
                                                      std::uint64_t timestamp) {
    std::vector<std::uint8_t> out;
    out.push_back('Q');
    out.push_back('T');
    out.push_back('L');
    out.push_back('C');
    detail::put_u16(out, kQtlcVersion);
    out.push_back(1);  // little-endian payload
    out.push_back(0);  // reserved
    detail::put_u64(out, timestamp);

    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.n_layers));
    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.d_model));
    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.n_heads));
    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.d_ff));
    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.vocab));
    detail::put_u32(out, static_cast<std::uint32_t>(cm.config.max_seq));
    detail::put_u64(out, cm.config.seed);

    detail::put_u32(out, static_cast<std::uint32_t>(cm.dense.size()));
    for (const auto& [name, m] : cm.dense) {
        detail::put_string(out, name);
        detail::put_u32(out, static_cast<std::uint32_t>(m.rows));
        detail::put_u32(out, static_cast<std::uint32_t>(m.cols));
        for (double v : m.values) detail::put_f64(out, v);
    }

    detail::put_u32(out, static_cast<std::uint32_t>(cm.layers.size()));
    for (const auto& [name, cl] : cm.layers) {
        detail::put_string(out, name);
        detail::put_u32(out, static_cast<std::uint32_t>(cl.rows));
        detail::put_u32(out, static_cast<std::uint32_t>(cl.cols));
        const std::vector<std::uint8_t> layout_bytes = encode_layout(cl.layout);
        out.insert(out.end(), layout_bytes.begin(), layout_bytes.end());

        out.push_back(cl.rank_policy.mode == RankPolicy::Mode::fixed ? 0 : 1);
        detail::put_u64(out, cl.rank_policy.fixed_rank);
        detail::put_f64(out, cl.rank_policy.epsilon);
        out.push_back(cl.rank_policy.r_max ? 1 : 0);
        detail::put_u64(out, cl.rank_policy.r_max ? *cl.rank_policy.r_max : 0);

        switch (cl.truncation_policy.mode) {
            case TruncationPolicy::Mode::threshold: out.push_back(0); break;
            case TruncationPolicy::Mode::energy: out.push_back(1); break;
            case TruncationPolicy::Mode::topk: out.push_back(2); break;
        }
        detail::put_f64(out, cl.truncation_policy.tau);
        detail::put_f64(out, cl.truncation_policy.eta);
        detail::put_u64(out, cl.truncation_policy.k);

        detail::put_u32(out, static_cast<std::uint32_t>(cl.spectral_blocks.size()));
        for (const SpectralBlock& sb : cl.spectral_blocks) {
            detail::put_u32(out, static_cast<std::uint32_t>(sb.placement.row0));
            detail::put_u32(out, static_cast<std::uint32_t>(sb.placement.col0));
            detail::put_u32(out, static_cast<std::uint32_t>(sb.placement.p));
            detail::put_u32(out, static_cast<std::uint32_t>(sb.placement.q));
            detail::put_u32(out, static_cast<std::uint32_t>(sb.placement.shape_id));
            detail::put_u32(out, static_cast<std::uint32_t>(sb.rank));
            detail::put_u64(out, sb.coeffs.size());
            for (const SpectralCoefficient& sc : sb.coeffs) {
                detail::put_u32(out, sc.row);
                detail::put_u32(out, sc.col);
                detail::put_f64(out, sc.value);
            }
        }
    }

    detail::put_u64(out, detail::fnv1a64(out.data(), out.size(), kTimestampOffset,
                                         kTimestampSize));
    return out;
}

struct CheckpointData {
    CompressedModel model;
    std::uint64_t timestamp = 0;
    std::uint16_t version = kQtlcVersion;
};

/// Checksum is verified before any structural parsing.
inline CheckpointData parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kTimestampOffset + kTimestampSize + 8) {
        throw_error(ErrorCode::checksum_error, "checkpoint too short");
    }
    if (bytes[0] != 'Q' || bytes[1] != 'T' || bytes[2] != 'L' || bytes[3] != 'C') {
        throw_error(ErrorCode::corrupt_block, "bad checkpoint magic");
    }
    const std::size_t body = bytes.size() - 8;
    const std::uint64_t expected =
        detail::fnv1a64(bytes.data(), body, kTimestampOffset, kTimestampSize);
    std::uint64_t stored = 0;
    for (int i = 0; i < 8; ++i) {
        stored |= static_cast<std::uint64_t>(bytes[body + i]) << (8 * i);
    }
    if (stored != expected) {
        throw_error(ErrorCode::checksum_error, "checkpoint checksum mismatch");
    }

    detail::ByteReader r{bytes.data(), body, 4};
    CheckpointData out;
    out.version = r.u16();
    if (out.version != kQtlcVersion) {
        throw_error(ErrorCode::format_version_error,
                    "unsupported checkpoint format version " + std::to_string(out.version));
    }
    const std::uint8_t endian = bytes[r.pos++];
    if (endian != 1) {
        throw_error(ErrorCode::corrupt_block, "unsupported checkpoint endianness");
    }
    ++r.pos;  // reserved
    out.timestamp = r.u64();

    CompressedModel& cm = out.model;
    cm.config.n_layers = r.u32();
    cm.config.d_model = r.u32();
    cm.config.n_heads = r.u32();
    cm.config.d_ff = r.u32();
    cm.config.vocab = r.u32();
    cm.config.max_seq = r.u32();
    cm.config.seed = r.u64();

    const std::uint32_t dense_count = r.u32();
    for (std::uint32_t i = 0; i < dense_count; ++i) {
        const std::string name = r.str();
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        RealMatrix m(rows, cols);
        for (double& v : m.values) v = r.f64();
        cm.dense.emplace(name, std::move(m));
    }

    const std::uint32_t layer_count = r.u32();
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        CompressedLayer cl;
        cl.name = r.str();
        cl.rows = r.u32();
        cl.cols = r.u32();
        std::size_t consumed = 0;
        cl.layout = decode_layout(r.data + r.pos, r.size - r.pos, &consumed);
        r.pos += consumed;

        r.need(1);
        cl.rank_policy.mode =
            r.data[r.pos++] == 0 ? RankPolicy::Mode::fixed : RankPolicy::Mode::energy;
        cl.rank_policy.fixed_rank = r.u64();
        cl.rank_policy.epsilon = r.f64();
        r.need(1);
        const bool has_rmax = r.data[r.pos++] != 0;
        const std::uint64_t rmax = r.u64();
        if (has_rmax) cl.rank_policy.r_max = rmax;

        r.need(1);
        switch (r.data[r.pos++]) {
            case 0: cl.truncation_policy.mode = TruncationPolicy::Mode::threshold; break;
            case 1: cl.truncation_policy.mode = TruncationPolicy::Mode::energy; break;
            case 2: cl.truncation_policy.mode = TruncationPolicy::Mode::topk; break;
            default:
                throw_error(ErrorCode::corrupt_block, "unknown truncation policy mode");
        }
        cl.truncation_policy.tau = r.f64();
        cl.truncation_policy.eta = r.f64();
        cl.truncation_policy.k = r.u64();

        const std::uint32_t block_count = r.u32();
        cl.spectral_blocks.reserve(block_count);
        for (std::uint32_t b = 0; b < block_count; ++b) {
            SpectralBlock sb;
            sb.placement.row0 = r.u32();
            sb.placement.col0 = r.u32();
            sb.placement.p = r.u32();
            sb.placement.q = r.u32();
            sb.placement.shape_id = static_cast<std::int32_t>(r.u32());
            sb.rank = r.u32();
            const std::uint64_t n_coeffs = r.u64();
            sb.coeffs.reserve(n_coeffs);
            for (std::uint64_t c = 0; c < n_coeffs; ++c) {
                SpectralCoefficient sc;
                sc.row = r.u32();
                sc.col = r.u32();
                sc.value = r.f64();
                sb.coeffs.push_back(sc);
            }
            cl.spectral_blocks.push_back(std::move(sb));
        }
        cm.layers.emplace(cl.name, std::move(cl));
    }
    if (r.pos != body) {
        throw_error(ErrorCode::corrupt_block, "checkpoint has trailing bytes");
    }
    return out;
}

inline void write_checkpoint(const CompressedModel& cm, const std::string& path,
                             std::uint64_t timestamp) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(cm, timestamp);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw_error(ErrorCode::io_error, "cannot open '" + path + "' for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw_error(ErrorCode::io_error, "write failed for '" + path + "'");
    }
}

inline CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw_error(ErrorCode::io_error, "cannot open '" + path + "' for reading");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes);
}

}  // namespace qtlc
