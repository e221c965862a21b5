#pragma once

#include "entk/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace entk {

// Philox4x32-10 counter-based generator (Salmon et al. 2011). A (key, counter)
// pair maps to four 32-bit words through ten bumped-key rounds; distinct
// counters give statistically independent outputs, which is what makes
// hierarchical seed -> stream -> substream splitting safe under parallelism.
namespace philox {

struct Block {
    std::array<std::uint32_t, 4> x;
};

inline std::uint32_t mulhi(std::uint32_t a, std::uint32_t b) {
    return static_cast<std::uint32_t>((static_cast<std::uint64_t>(a) * b) >> 32);
}

inline Block round10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        const std::uint32_t hi0 = mulhi(M0, ctr[0]), lo0 = M0 * ctr[0];
        const std::uint32_t hi1 = mulhi(M1, ctr[2]), lo1 = M1 * ctr[2];
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return Block{ctr};
}

}  // namespace philox

// One logical random stream: a 64-bit key plus a 64-bit stream id baked into
// the counter. Stateless access by index (normal(i), uniform(i)) and a
// stateful convenience cursor for sequential draws.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : key_lo_(static_cast<std::uint32_t>(seed)),
          key_hi_(static_cast<std::uint32_t>(seed >> 32)),
          stream_(stream_id),
          cursor_(0) {}

    // Derive a child stream; (seed, tag-path) -> key is itself a Philox pass,
    // so children of different tags never collide.
    RngStream child(std::uint64_t tag) const {
        const philox::Block b = philox::round10(
            {static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            {key_lo_, key_hi_});
        RngStream out;
        out.key_lo_ = b.x[0];
        out.key_hi_ = b.x[1];
        out.stream_ = (static_cast<std::uint64_t>(b.x[3]) << 32) | b.x[2];
        out.cursor_ = 0;
        return out;
    }

    // Two uniform doubles in (0,1) from counter index i.
    void uniform_pair(std::uint64_t i, double& u0, double& u1) const {
        const philox::Block b = philox::round10(
            {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            {key_lo_, key_hi_});
        const std::uint64_t w0 = (static_cast<std::uint64_t>(b.x[0]) << 32) | b.x[1];
        const std::uint64_t w1 = (static_cast<std::uint64_t>(b.x[2]) << 32) | b.x[3];
        // 53-bit mantissa, strictly inside (0,1) so log() below is safe.
        u0 = (static_cast<double>(w0 >> 11) + 0.5) * 0x1.0p-53;
        u1 = (static_cast<double>(w1 >> 11) + 0.5) * 0x1.0p-53;
    }

    // Two standard normals per counter index via Box-Muller.
    void normal_pair(std::uint64_t i, double& n0, double& n1) const {
        double u0, u1;
        uniform_pair(i, u0, u1);
        const double r = std::sqrt(-2.0 * std::log(u0));
        const double a = 6.283185307179586476925286766559 * u1;
        n0 = r * std::cos(a);
        n1 = r * std::sin(a);
    }

    double normal_at(std::uint64_t idx) const {
        double n0, n1;
        normal_pair(idx >> 1, n0, n1);
        return (idx & 1) ? n1 : n0;
    }

    double uniform_at(std::uint64_t idx) const {
        double u0, u1;
        uniform_pair(idx >> 1, u0, u1);
        return (idx & 1) ? u1 : u0;
    }

    // Sequential draws advancing an internal cursor.
    double normal() { return normal_at(cursor_++); }
    double uniform() { return uniform_at(cursor_++); }

    void fill_normal(double* dst, std::size_t n) {
        std::size_t k = 0;
        if ((cursor_ & 1) && k < n) dst[k++] = normal();
        while (k + 1 < n) {
            normal_pair(cursor_ >> 1, dst[k], dst[k + 1]);
            cursor_ += 2;
            k += 2;
        }
        if (k < n) dst[k] = normal();
    }
    Vec normal_vec(Eigen::Index n) {
        Vec v(n);
        fill_normal(v.data(), static_cast<std::size_t>(n));
        return v;
    }
    Mat normal_mat(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        fill_normal(m.data(), static_cast<std::size_t>(rows * cols));
        return m;
    }

private:
    std::uint32_t key_lo_, key_hi_;
    std::uint64_t stream_;
    std::uint64_t cursor_;
};

}  // namespace entk
