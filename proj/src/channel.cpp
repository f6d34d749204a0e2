#include "ratemap/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ratemap {

namespace {

// SplitMix64 finalizer (Steele et al.).
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_step_component(std::uint32_t step, std::uint32_t i) {
    return mix64((static_cast<std::uint64_t>(step) << 32) | i);
}

}  // namespace

Eigen::VectorXd dither_sequence(const DitherSpec& spec) {
    const int n = static_cast<int>(spec.deltas.size());
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) {
        if (spec.deltas[i] <= 0.0)
            throw std::invalid_argument("dither_sequence: deltas must be positive");
        std::uint64_t word =
            mix64(spec.session_seed ^
                  hash_step_component(spec.step, static_cast<std::uint32_t>(i)));
        double u = static_cast<double>(word >> 11) * 0x1.0p-53;  // [0,1)
        eta[i] = spec.deltas[i] * (u - 0.5);
    }
    return eta;
}

Eigen::VectorXi quantize(const Eigen::VectorXd& o, const Eigen::VectorXd& deltas,
                         const Eigen::VectorXd& dither) {
    if (o.size() != deltas.size() || o.size() != dither.size())
        throw std::invalid_argument("quantize: length mismatch");
    Eigen::VectorXi k(o.size());
    for (int i = 0; i < o.size(); ++i) {
        double z = o[i] + dither[i];
        double kf = std::floor(z / deltas[i] + 0.5);
        if (!(std::abs(kf) < 2147483648.0))
            throw std::runtime_error("quantize: index overflow (mis-scaled delta?)");
        k[i] = static_cast<int>(kf);
    }
    return k;
}

Eigen::VectorXd reconstruct(const Eigen::VectorXi& k,
                            const Eigen::VectorXd& deltas,
                            const Eigen::VectorXd& dither) {
    if (k.size() != deltas.size() || k.size() != dither.size())
        throw std::invalid_argument("reconstruct: length mismatch");
    Eigen::VectorXd y(k.size());
    for (int i = 0; i < k.size(); ++i)
        y[i] = k[i] * deltas[i] - dither[i];
    return y;
}

void BitString::push_bit(bool b) {
    if (nbits % 8 == 0) bytes.push_back(0);
    if (b) bytes[nbits / 8] |= static_cast<std::uint8_t>(1u << (7 - nbits % 8));
    ++nbits;
}

bool BitString::bit(std::uint32_t pos) const {
    return (bytes[pos / 8] >> (7 - pos % 8)) & 1u;
}

BitString entropy_code(const Eigen::VectorXi& k) {
    BitString out;
    for (int i = 0; i < k.size(); ++i) {
        std::int64_t v = k[i];
        std::uint64_t zz = v >= 0 ? 2 * static_cast<std::uint64_t>(v)
                                  : 2 * static_cast<std::uint64_t>(-v) - 1;
        std::uint64_t n = zz + 1;  // gamma codes integers >= 1
        int len = 0;
        while ((n >> len) > 1) ++len;
        for (int b = 0; b < len; ++b) out.push_bit(false);
        for (int b = len; b >= 0; --b) out.push_bit((n >> b) & 1u);
    }
    return out;
}

Eigen::VectorXi entropy_decode(const BitString& bits, int count) {
    Eigen::VectorXi k(count);
    std::uint32_t pos = 0;
    for (int i = 0; i < count; ++i) {
        int len = 0;
        while (true) {
            if (pos >= bits.nbits)
                throw std::runtime_error("entropy_decode: truncated at bit " +
                                         std::to_string(pos));
            if (bits.bit(pos)) break;
            ++pos;
            ++len;
        }
        if (pos + static_cast<std::uint32_t>(len) + 1 > bits.nbits)
            throw std::runtime_error("entropy_decode: truncated at bit " +
                                     std::to_string(pos));
        std::uint64_t n = 1;
        ++pos;  // leading 1
        for (int b = 0; b < len; ++b) {
            n = (n << 1) | (bits.bit(pos) ? 1u : 0u);
            ++pos;
        }
        std::uint64_t zz = n - 1;
        k[i] = static_cast<int>(zz % 2 == 0
                                    ? static_cast<std::int64_t>(zz / 2)
                                    : -static_cast<std::int64_t>((zz + 1) / 2));
    }
    return k;
}

std::vector<std::uint8_t> frame(const WireMessage& msg) {
    std::vector<std::uint8_t> out;
    auto put_u32 = [&out](std::uint32_t v) {
        for (int b = 0; b < 4; ++b) out.push_back((v >> (8 * b)) & 0xFF);
    };
    auto put_u16 = [&out](std::uint16_t v) {
        for (int b = 0; b < 2; ++b) out.push_back((v >> (8 * b)) & 0xFF);
    };
    put_u32(msg.step);
    put_u16(static_cast<std::uint16_t>(msg.supporter_cell.row));
    put_u16(static_cast<std::uint16_t>(msg.supporter_cell.col));
    put_u32(msg.payload.nbits);
    out.insert(out.end(), msg.payload.bytes.begin(), msg.payload.bytes.end());
    return out;
}

WireMessage parse(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12) throw std::runtime_error("parse: buffer too short");
    auto get_u32 = [&bytes](size_t off) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(bytes[off + b]) << (8 * b);
        return v;
    };
    auto get_u16 = [&bytes](size_t off) {
        return static_cast<std::uint16_t>(bytes[off] | (bytes[off + 1] << 8));
    };
    WireMessage msg;
    msg.step = get_u32(0);
    msg.supporter_cell = {get_u16(4), get_u16(6)};
    msg.payload.nbits = get_u32(8);
    size_t payload_bytes = (msg.payload.nbits + 7) / 8;
    if (bytes.size() != 12 + payload_bytes)
        throw std::runtime_error("parse: payload length mismatch");
    msg.payload.bytes.assign(bytes.begin() + 12, bytes.end());
    return msg;
}

}  // namespace ratemap
