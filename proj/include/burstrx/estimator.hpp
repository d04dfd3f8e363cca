#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "burstrx/common.hpp"
#include "burstrx/channel.hpp"

namespace burstrx {

/// Two-state trellis description: per-slot state log-likelihoods
/// l_k(z) = log p(y_k | z), log transition matrix and log initial (steady
/// state) distribution.
struct TrellisInputs {
    std::vector<std::array<double, 2>> state_loglik;  // [slot][G=0, B=1]
    std::array<std::array<double, 2>, 2> log_trans{};  // [from][to]
    std::array<double, 2> log_init{};

    std::size_t size() const { return state_loglik.size(); }
};

inline TrellisInputs make_trellis_inputs(const GeChannelParams& p, std::size_t slots = 0) {
    TrellisInputs t;
    t.state_loglik.resize(slots, {0.0, 0.0});
    t.log_trans[0][0] = std::log1p(-p.p_gb);
    t.log_trans[0][1] = std::log(p.p_gb);
    t.log_trans[1][0] = std::log(p.p_bg);
    t.log_trans[1][1] = std::log1p(-p.p_bg);
    const auto [pg, pb] = steady_state(p);
    t.log_init[0] = std::log(pg);
    t.log_init[1] = std::log(pb);
    return t;
}

/// Per-slot state probabilities plus hard decisions; P(G) + P(B) = 1 and the
/// hard decision is the argmax (ties resolved toward G). sova additionally
/// fills the raw log-domain reliabilities it maps through the logistic.
struct StatePosterior {
    std::vector<double> p_good;
    std::vector<GeState> hard;
    std::vector<double> reliability;  // sova only

    std::size_t size() const { return p_good.size(); }
};

inline constexpr std::size_t kDefaultTrellisWindow = 100;

namespace detail {

// Forward Viterbi sweep: accumulated path metrics
// Gamma_k(z) = min_{z'} [Gamma_{k-1}(z') - log P(z|z')] - l_k(z)
// with predecessor pointers. Ties prefer the good state.
struct ViterbiForward {
    std::vector<std::array<double, 2>> metric;
    std::vector<std::array<std::uint8_t, 2>> pred;

    explicit ViterbiForward(const TrellisInputs& in) {
        const std::size_t n = in.size();
        metric.resize(n);
        pred.resize(n);
        metric[0] = {-in.log_init[0] - in.state_loglik[0][0],
                     -in.log_init[1] - in.state_loglik[0][1]};
        pred[0] = {0, 0};
        for (std::size_t k = 1; k < n; ++k) {
            for (int z = 0; z < 2; ++z) {
                const double from_g = metric[k - 1][0] - in.log_trans[0][z];
                const double from_b = metric[k - 1][1] - in.log_trans[1][z];
                if (from_g <= from_b) {
                    metric[k][z] = from_g - in.state_loglik[k][z];
                    pred[k][z] = 0;
                } else {
                    metric[k][z] = from_b - in.state_loglik[k][z];
                    pred[k][z] = 1;
                }
            }
        }
    }

    // State at slot k on the survivor path anchored at slot `anchor`.
    int traceback_state(std::size_t anchor, std::size_t k) const {
        int z = metric[anchor][0] <= metric[anchor][1] ? 0 : 1;
        for (std::size_t j = anchor; j > k; --j) z = pred[j][z];
        return z;
    }
};

// Windowed backward min-metrics: suffix[z] = min over state sequences on
// slots (k, horizon] of the accumulated branch metric, given state z at k.
inline std::array<double, 2> backward_min(const TrellisInputs& in, std::size_t k,
                                          std::size_t horizon) {
    std::array<double, 2> g = {0.0, 0.0};
    for (std::size_t j = horizon; j > k; --j) {
        std::array<double, 2> ng;
        for (int zp = 0; zp < 2; ++zp) {
            const double via_g = -in.log_trans[zp][0] - in.state_loglik[j][0] + g[0];
            const double via_b = -in.log_trans[zp][1] - in.state_loglik[j][1] + g[1];
            ng[zp] = std::min(via_g, via_b);
        }
        g = ng;
    }
    return g;
}

}  // namespace detail

/// Hard Viterbi state estimation with the given traceback depth. Posteriors
/// are degenerate: P(hat z_k) = 1.
inline StatePosterior viterbi(const TrellisInputs& in,
                              std::size_t traceback = kDefaultTrellisWindow) {
    if (in.size() == 0) throw std::invalid_argument("viterbi: empty input");
    const std::size_t n = in.size();
    detail::ViterbiForward fwd(in);
    StatePosterior out;
    out.p_good.resize(n);
    out.hard.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t anchor = std::min(k + traceback, n - 1);
        const int z = fwd.traceback_state(anchor, k);
        out.hard[k] = static_cast<GeState>(z);
        out.p_good[k] = z == 0 ? 1.0 : 0.0;
    }
    return out;
}

/// Soft-output Viterbi: hard decisions as viterbi(); the reliability of slot k
/// is the exact metric difference between the survivor and the best sequence
/// whose state at k is flipped, both evaluated within the traceback window.
/// P(G) via the logistic map of the reliability.
inline StatePosterior sova(const TrellisInputs& in,
                           std::size_t traceback = kDefaultTrellisWindow) {
    if (in.size() == 0) throw std::invalid_argument("sova: empty input");
    const std::size_t n = in.size();
    detail::ViterbiForward fwd(in);
    StatePosterior out;
    out.p_good.resize(n);
    out.hard.resize(n);
    out.reliability.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t horizon = std::min(k + traceback, n - 1);
        const int zh = fwd.traceback_state(horizon, k);
        const auto suffix = detail::backward_min(in, k, horizon);
        const double best = fwd.metric[k][zh] + suffix[zh];
        const double alt = fwd.metric[k][1 - zh] + suffix[1 - zh];
        const double delta = std::max(alt - best, 0.0);
        out.hard[k] = static_cast<GeState>(zh);
        out.reliability[k] = delta;
        out.p_good[k] = zh == 0 ? logistic(delta) : logistic(-delta);
    }
    return out;
}

/// Windowed forward-backward state posteriors, log domain. The forward pass
/// runs continuously; each window restarts the backward pass uniformly at the
/// window edge and only the interior half is emitted, so every emitted slot
/// sees a backward horizon of at least window/2 slots.
inline StatePosterior bcjr(const TrellisInputs& in, std::size_t window = kDefaultTrellisWindow) {
    if (in.size() == 0) throw std::invalid_argument("bcjr: empty input");
    if (window < 1) throw std::invalid_argument("bcjr: window must be >= 1");
    const std::size_t n = in.size();
    const std::size_t step = std::max<std::size_t>(1, window / 2);

    // alpha_k(z) = lse_{z'} [alpha_{k-1}(z') + log P(z|z')] + l_k(z), normalized per slot
    std::vector<std::array<double, 2>> log_alpha(n);
    log_alpha[0] = {in.log_init[0] + in.state_loglik[0][0],
                    in.log_init[1] + in.state_loglik[0][1]};
    for (std::size_t k = 1; k < n; ++k) {
        for (int z = 0; z < 2; ++z) {
            log_alpha[k][z] = log_sum_exp2(log_alpha[k - 1][0] + in.log_trans[0][z],
                                           log_alpha[k - 1][1] + in.log_trans[1][z]) +
                              in.state_loglik[k][z];
        }
        const double shift = std::max(log_alpha[k][0], log_alpha[k][1]);
        log_alpha[k][0] -= shift;
        log_alpha[k][1] -= shift;
    }

    StatePosterior out;
    out.p_good.resize(n);
    out.hard.resize(n);
    std::vector<std::array<double, 2>> log_beta;
    for (std::size_t t = 0; t < n; t += step) {
        const std::size_t edge = std::min(t + window, n) - 1;
        log_beta.assign(edge - t + 1, {0.0, 0.0});
        for (std::size_t j = edge; j > t; --j) {
            for (int zp = 0; zp < 2; ++zp) {
                log_beta[j - 1 - t][zp] =
                    log_sum_exp2(log_beta[j - t][0] + in.log_trans[zp][0] + in.state_loglik[j][0],
                                 log_beta[j - t][1] + in.log_trans[zp][1] + in.state_loglik[j][1]);
            }
            const double shift = std::max(log_beta[j - 1 - t][0], log_beta[j - 1 - t][1]);
            log_beta[j - 1 - t][0] -= shift;
            log_beta[j - 1 - t][1] -= shift;
        }
        const std::size_t stop = std::min(t + step, n);
        for (std::size_t k = t; k < stop; ++k) {
            const double lg = log_alpha[k][0] + log_beta[k - t][0];
            const double lb = log_alpha[k][1] + log_beta[k - t][1];
            const double pg = std::exp(lg - log_sum_exp2(lg, lb));
            out.p_good[k] = pg;
            out.hard[k] = pg >= 0.5 ? GeState::Good : GeState::Bad;
        }
    }
    return out;
}

}  // namespace burstrx
