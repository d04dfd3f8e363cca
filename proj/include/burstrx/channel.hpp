#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "burstrx/common.hpp"

namespace burstrx {

enum class GeState : std::uint8_t { Good = 0, Bad = 1 };

/// Gilbert-Elliott modulated Wiener phase-noise channel parameters.
/// sigma2_awgn is the total complex noise variance (Es = 1), sigma2/2 per
/// quadrature.
struct GeChannelParams {
    double p_gb = 0.0;        // P(B | G)
    double p_bg = 0.0;        // P(G | B)
    double sigma2_g = 0.0;    // good-state innovation variance [rad^2]
    double sigma2_b = 0.0;    // bad-state innovation variance [rad^2]
    double sigma2_awgn = 0.0;

    double state_sigma2(GeState z) const { return z == GeState::Good ? sigma2_g : sigma2_b; }

    void validate() const {
        if (!(p_gb > 0.0 && p_gb <= 1.0)) throw std::invalid_argument("p_gb must be in (0,1]");
        if (!(p_bg > 0.0 && p_bg <= 1.0)) throw std::invalid_argument("p_bg must be in (0,1]");
        if (!(sigma2_g >= 0.0)) throw std::invalid_argument("sigma2_g must be >= 0");
        if (!(sigma2_b >= sigma2_g)) throw std::invalid_argument("sigma2_b must be >= sigma2_g");
        if (!(sigma2_awgn > 0.0)) throw std::invalid_argument("sigma2_awgn must be > 0");
    }
};

/// Long-term state occupancy (P_G, P_B).
inline std::pair<double, double> steady_state(const GeChannelParams& p) {
    const double pg = p.p_bg / (p.p_bg + p.p_gb);
    return {pg, 1.0 - pg};
}

/// Mean sojourn lengths (L_G, L_B) in symbols.
inline std::pair<double, double> mean_durations(const GeChannelParams& p) {
    return {1.0 / p.p_gb, 1.0 / p.p_bg};
}

/// First-order Markov state sequence; z_0 drawn from the steady state.
inline std::vector<GeState> sample_states(std::size_t n, const GeChannelParams& p, Rng& rng) {
    std::vector<GeState> z(n);
    const auto [pg, pb] = steady_state(p);
    (void)pb;
    z[0] = rng.bernoulli(pg) ? GeState::Good : GeState::Bad;
    for (std::size_t k = 1; k < n; ++k) {
        if (z[k - 1] == GeState::Good)
            z[k] = rng.bernoulli(p.p_gb) ? GeState::Bad : GeState::Good;
        else
            z[k] = rng.bernoulli(p.p_bg) ? GeState::Good : GeState::Bad;
    }
    return z;
}

/// One draw of the hidden channel: states, phase trajectory, innovations.
/// phases[k] - phases[k-1] == innovations[k] exactly; innovations[0] = 0 and
/// phases[0] = 0 (per-frame phase reference).
struct ChannelRealization {
    std::vector<GeState> states;
    std::vector<double> phases;
    std::vector<double> innovations;
};

inline ChannelRealization sample_phase(std::vector<GeState> states, const GeChannelParams& p,
                                       Rng& rng) {
    if (states.empty()) throw std::invalid_argument("sample_phase: empty state sequence");
    ChannelRealization r;
    r.states = std::move(states);
    const std::size_t n = r.states.size();
    r.phases.resize(n);
    r.innovations.resize(n);
    r.phases[0] = 0.0;
    r.innovations[0] = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double w = std::sqrt(p.state_sigma2(r.states[k])) * rng.gauss();
        r.phases[k] = r.phases[k - 1] + w;
        // store the representable difference so the walk invariant holds exactly
        r.innovations[k] = r.phases[k] - r.phases[k - 1];
    }
    return r;
}

/// Phase-domain differential encoding: s_k = x_k e^{j angle(s_{k-1})} with the
/// reference prepended as a known pilot. Output length = input length + 1.
inline std::vector<cplx> diff_encode(std::span<const cplx> x, cplx s_ref = cplx(1.0, 0.0)) {
    if (std::abs(s_ref) == 0.0) throw std::invalid_argument("diff_encode: zero reference");
    std::vector<cplx> s(x.size() + 1);
    s[0] = s_ref;
    double prev_angle = std::arg(s_ref);
    for (std::size_t k = 0; k < x.size(); ++k) {
        s[k + 1] = x[k] * std::polar(1.0, prev_angle);
        prev_angle = std::arg(s[k + 1]);
    }
    return s;
}

/// r_k = s_k e^{j theta_k} + n_k with circularly symmetric complex AWGN.
inline std::vector<cplx> apply_channel(std::span<const cplx> s, const ChannelRealization& real,
                                       const GeChannelParams& p, Rng& rng) {
    if (s.size() != real.phases.size())
        throw std::invalid_argument("apply_channel: length mismatch");
    const double sd = std::sqrt(p.sigma2_awgn / 2.0);  // per quadrature
    std::vector<cplx> r(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        const cplx n(sd * rng.gauss(), sd * rng.gauss());
        r[k] = s[k] * std::polar(1.0, real.phases[k]) + n;
    }
    return r;
}

/// Differentially decoded observations y_k = r_k e^{-j angle(r_{k-1})} for
/// k >= 1; the pilot slot is consumed. A zero-magnitude previous sample (a
/// probability-zero event under the model) marks the slot as an erasure so the
/// likelihood layer can assign it a uniform density.
struct DiffDecoded {
    std::vector<cplx> symbols;
    std::vector<std::uint8_t> erased;
};

inline DiffDecoded diff_decode(std::span<const cplx> r) {
    if (r.size() < 2) throw std::invalid_argument("diff_decode: need at least 2 samples");
    DiffDecoded out;
    out.symbols.resize(r.size() - 1);
    out.erased.assign(r.size() - 1, 0);
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (std::abs(r[k - 1]) == 0.0) {
            out.symbols[k - 1] = cplx(0.0, 0.0);
            out.erased[k - 1] = 1;
        } else {
            out.symbols[k - 1] = r[k] * std::polar(1.0, -std::arg(r[k - 1]));
        }
    }
    return out;
}

}  // namespace burstrx
