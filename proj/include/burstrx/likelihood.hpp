#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "burstrx/common.hpp"
#include "burstrx/constellation.hpp"
#include "burstrx/channel.hpp"

namespace burstrx {

/// Parameters of the approximate differential observation model
/// y = x e^{jw} + n_eff, w ~ N(0, sigma2_z), n_eff ~ CN(0, sigma2_eff_awgn).
/// The bias is an effective-SNR offset: sigma2_eff_awgn =
/// 10^(-bias_db/10) * sigma2_awgn, so a negative bias models the extra noise
/// introduced by differential decoding and a positive one sharpens the model.
struct LikelihoodParams {
    double sigma2_eff_awgn = 0.0;
    double sigma2_g = 0.0;
    double sigma2_b = 0.0;
    double bias_db = 0.0;
};

inline LikelihoodParams make_likelihood_params(const GeChannelParams& p, double bias_db) {
    LikelihoodParams lp;
    lp.bias_db = bias_db;
    lp.sigma2_eff_awgn = db_to_linear(-bias_db) * p.sigma2_awgn;
    lp.sigma2_g = p.sigma2_g;
    lp.sigma2_b = p.sigma2_b;
    return lp;
}

/// Per-slot probability vector over the constellation points; sums to 1.
using SymbolPrior = std::vector<double>;

inline SymbolPrior uniform_prior(int order) {
    return SymbolPrior(order, 1.0 / static_cast<double>(order));
}

/// Per-bit LLRs, positive favoring bit 0.
using LlrFrame = std::vector<double>;

inline constexpr double kDefaultLlrClamp = 40.0;

inline double clamp_llr(double l, double l_max = kDefaultLlrClamp) {
    if (l > l_max) return l_max;
    if (l < -l_max) return -l_max;
    return l;
}

/// Bilinear-transform approximation of log p(y | x, z) under Gaussian phase
/// innovation with variance sigma2_z and effective AWGN variance sigma2_eff.
/// The state-independent + log(pi * sigma_eff) constant is kept; it cancels in
/// every ratio downstream.
inline double blt_loglik(cplx y, cplx x, double sigma2_z, double sigma2_eff) {
    const double d2 = std::norm(y - x);
    const double im = std::imag(std::conj(x) * y);
    const double a2 = std::norm(x + y);
    const double t_awgn = -d2 / sigma2_eff;
    const double t_phase =
        4.0 * sigma2_z * im * im / (2.0 * sigma2_eff * sigma2_eff + sigma2_eff * sigma2_z * a2);
    const double t_norm = -0.5 * std::log(sigma2_eff + 0.5 * sigma2_z * a2);
    return t_awgn + t_phase + t_norm + std::log(kPi * std::sqrt(sigma2_eff));
}

/// log p(y | z) = log sum_x P(x) p(y | x, z), max-shifted.
inline double marginal_loglik(cplx y, double sigma2_z, double sigma2_eff,
                              std::span<const double> prior, const Constellation& c) {
    std::vector<double> terms(c.points.size(), kNegInf);
    for (std::size_t j = 0; j < c.points.size(); ++j) {
        if (prior[j] <= 0.0) continue;
        terms[j] = std::log(prior[j]) + blt_loglik(y, c.points[j], sigma2_z, sigma2_eff);
    }
    return log_sum_exp(terms);
}

inline double marginal_loglik_from(std::span<const double> state_logliks,
                                   std::span<const double> prior) {
    std::vector<double> terms(state_logliks.size(), kNegInf);
    for (std::size_t j = 0; j < state_logliks.size(); ++j) {
        if (prior[j] <= 0.0) continue;
        terms[j] = std::log(prior[j]) + state_logliks[j];
    }
    return log_sum_exp(terms);
}

/// Mixes the two pure-state log-likelihoods with the state posterior.
/// Degenerate posteriors reproduce the pure-state value bit-exactly.
inline double mix_state_loglik(double p_good, double ll_good, double ll_bad) {
    if (p_good >= 1.0) return ll_good;
    if (p_good <= 0.0) return ll_bad;
    return log_sum_exp2(std::log(p_good) + ll_good, std::log(1.0 - p_good) + ll_bad);
}

/// Burst-aware per-symbol log density log p(y | x) =
/// log[ P(G) p(y|x,G) + P(B) p(y|x,B) ] for every constellation point.
inline std::vector<double> ba_symbol_lik(cplx y, double p_good, const LikelihoodParams& lp,
                                         const Constellation& c) {
    std::vector<double> out(c.points.size());
    for (std::size_t j = 0; j < c.points.size(); ++j) {
        const double llg = blt_loglik(y, c.points[j], lp.sigma2_g, lp.sigma2_eff_awgn);
        const double llb = blt_loglik(y, c.points[j], lp.sigma2_b, lp.sigma2_eff_awgn);
        out[j] = mix_state_loglik(p_good, llg, llb);
    }
    return out;
}

/// Per-bit LLRs from per-symbol log densities and symbol priors:
/// LLR_m = log sum_{x: bit_m = 0} p(y|x) P(x) - log sum_{x: bit_m = 1} ...
/// clamped to +/- l_max.
inline std::vector<double> bit_llrs(std::span<const double> symbol_logliks,
                                    std::span<const double> prior, const Constellation& c,
                                    double l_max = kDefaultLlrClamp) {
    std::vector<double> llrs(c.bits_per_symbol);
    for (int m = 0; m < c.bits_per_symbol; ++m) {
        double num = kNegInf, den = kNegInf;
        for (std::size_t j = 0; j < c.points.size(); ++j) {
            if (prior[j] <= 0.0) continue;
            const double t = symbol_logliks[j] + std::log(prior[j]);
            if (c.bit(j, m) == 0)
                num = log_sum_exp2(num, t);
            else
                den = log_sum_exp2(den, t);
        }
        llrs[m] = clamp_llr(num - den, l_max);
    }
    return llrs;
}

/// Memoryless baseline: burst correlations ignored, one blended innovation
/// variance sigma_eff^2 = P_G sigma_G^2 + P_B sigma_B^2.
inline double effective_variance(const GeChannelParams& p) {
    const auto [pg, pb] = steady_state(p);
    return pg * p.sigma2_g + pb * p.sigma2_b;
}

/// Dense per-frame table of blt_loglik values, one row per (slot, state).
/// Erased slots get all-zero rows (uniform density in both states).
class BltTable {
public:
    BltTable(std::span<const cplx> y, std::span<const std::uint8_t> erased,
             const Constellation& c, const LikelihoodParams& lp)
        : order_(c.order), slots_(y.size()), v_(y.size() * 2 * c.order) {
        for (std::size_t k = 0; k < y.size(); ++k) {
            double* g = &v_[(k * 2 + 0) * order_];
            double* b = &v_[(k * 2 + 1) * order_];
            if (!erased.empty() && erased[k]) {
                for (int j = 0; j < order_; ++j) g[j] = b[j] = 0.0;
                continue;
            }
            for (int j = 0; j < order_; ++j) {
                g[j] = blt_loglik(y[k], c.points[j], lp.sigma2_g, lp.sigma2_eff_awgn);
                b[j] = blt_loglik(y[k], c.points[j], lp.sigma2_b, lp.sigma2_eff_awgn);
            }
        }
    }

    std::span<const double> row(std::size_t slot, GeState z) const {
        return {&v_[(slot * 2 + static_cast<std::size_t>(z)) * order_],
                static_cast<std::size_t>(order_)};
    }

    std::size_t slots() const { return slots_; }

private:
    int order_;
    std::size_t slots_;
    std::vector<double> v_;
};

}  // namespace burstrx
