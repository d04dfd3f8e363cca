#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "burstrx/common.hpp"

namespace burstrx {

/// Square M-QAM alphabet with per-axis reflected Gray labeling (I bits first,
/// then Q bits) and unit average symbol energy.
struct Constellation {
    int order = 0;            // M
    int bits_per_symbol = 0;  // log2(M)
    std::vector<cplx> points;
    std::vector<std::uint32_t> labels;    // labels[j] = bit label of points[j], MSB = first bit
    std::vector<int> index_of_label;      // inverse of labels

    // m-th bit (m = 0 is the first / most significant) of point j
    int bit(std::size_t j, int m) const {
        return static_cast<int>((labels[j] >> (bits_per_symbol - 1 - m)) & 1u);
    }

    double min_distance() const {
        double d2 = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j)
                d2 = std::min(d2, std::norm(points[i] - points[j]));
        return std::sqrt(d2);
    }
};

namespace detail {
inline std::uint32_t gray_encode(std::uint32_t i) { return i ^ (i >> 1); }
}  // namespace detail

/// Builds the square M-QAM constellation for M in {4, 16, 64}.
/// Deterministic: the same M always yields the identical object.
inline Constellation build_qam(int order) {
    if (order != 4 && order != 16 && order != 64)
        throw std::invalid_argument("build_qam: unsupported modulation order " +
                                    std::to_string(order));
    int bps = 0;
    while ((1 << bps) < order) ++bps;
    const int per_axis = bps / 2;
    const int levels = 1 << per_axis;

    // odd-integer grid scaled to unit average energy: E{|c|^2} = 2(M-1)/3
    const double scale = std::sqrt(3.0 / (2.0 * (order - 1)));

    Constellation c;
    c.order = order;
    c.bits_per_symbol = bps;
    c.points.resize(order);
    c.labels.resize(order);
    c.index_of_label.assign(order, -1);

    for (int i = 0; i < levels; ++i) {
        for (int q = 0; q < levels; ++q) {
            const double re = (2 * i - (levels - 1)) * scale;
            const double im = (2 * q - (levels - 1)) * scale;
            const std::uint32_t label =
                (detail::gray_encode(static_cast<std::uint32_t>(i)) << per_axis) |
                detail::gray_encode(static_cast<std::uint32_t>(q));
            const int j = i * levels + q;
            c.points[j] = cplx(re, im);
            c.labels[j] = label;
            c.index_of_label[label] = j;
        }
    }
    return c;
}

/// Maps a bit sequence onto constellation points, bits_per_symbol bits per
/// point, first bit most significant.
inline std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, const Constellation& c) {
    if (bits.size() % static_cast<std::size_t>(c.bits_per_symbol) != 0)
        throw std::invalid_argument("map_bits: bit count not divisible by bits_per_symbol");
    std::vector<cplx> out(bits.size() / c.bits_per_symbol);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint32_t label = 0;
        for (int m = 0; m < c.bits_per_symbol; ++m)
            label = (label << 1) | bits[k * c.bits_per_symbol + m];
        out[k] = c.points[c.index_of_label[label]];
    }
    return out;
}

/// Minimum-Euclidean-distance decision; ties break toward the lowest index.
inline std::pair<std::size_t, std::uint32_t> demap_hard(cplx y, const Constellation& c) {
    std::size_t best = 0;
    double best_d = std::norm(y - c.points[0]);
    for (std::size_t j = 1; j < c.points.size(); ++j) {
        const double d = std::norm(y - c.points[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return {best, c.labels[best]};
}

}  // namespace burstrx
