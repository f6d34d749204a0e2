#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ratemap/gridmap.hpp"

namespace ratemap {

// Counter-based dither source shared by both agents. Component i of step t
// is derived by SplitMix64 mixing of session_seed ^ hash(step, i); the top
// 53 bits of the mixed word map to u in [0,1) and the dither is
// delta_i * (u - 0.5). No sequential state, so any step is computable out
// of order.
struct DitherSpec {
    std::uint64_t session_seed = 0;
    std::uint32_t step = 0;
    Eigen::VectorXd deltas;
};

Eigen::VectorXd dither_sequence(const DitherSpec& spec);

// k_i is the unique integer with (k - 1/2) delta_i <= o_i + eta_i < (k + 1/2) delta_i.
Eigen::VectorXi quantize(const Eigen::VectorXd& o, const Eigen::VectorXd& deltas,
                         const Eigen::VectorXd& dither);

// y_i = k_i delta_i - eta_i; the effective noise lies in [-delta_i/2, delta_i/2).
Eigen::VectorXd reconstruct(const Eigen::VectorXi& k,
                            const Eigen::VectorXd& deltas,
                            const Eigen::VectorXd& dither);

struct BitString {
    std::vector<std::uint8_t> bytes;
    std::uint32_t nbits = 0;

    void push_bit(bool bit);
    bool bit(std::uint32_t pos) const;
    bool operator==(const BitString&) const = default;
};

// Zigzag map (0,-1,1,-2,... -> 0,1,2,3,...) followed by Elias gamma of
// zigzag + 1. Prefix-free; k = 0 costs a single bit.
BitString entropy_code(const Eigen::VectorXi& k);
// Throws on truncated or corrupt input, reporting the failing bit offset.
Eigen::VectorXi entropy_decode(const BitString& bits, int count);

struct WireMessage {
    std::uint32_t step = 0;
    Cell supporter_cell;
    BitString payload;
};

// Little-endian layout: u32 step, u16 row, u16 col, u32 payload bit
// length, payload bytes zero-padded to full bytes.
std::vector<std::uint8_t> frame(const WireMessage& msg);
WireMessage parse(const std::vector<std::uint8_t>& bytes);

}  // namespace ratemap
