#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstrx/common.hpp"
#include "burstrx/constellation.hpp"
#include "burstrx/channel.hpp"
#include "burstrx/likelihood.hpp"
#include "burstrx/estimator.hpp"
#include "burstrx/ldpc.hpp"

namespace burstrx {

enum class Scheme { Baseline, Ba, Iba };
enum class EstimatorKind { Va, Sova, Bcjr };

struct SchemeConfig {
    Scheme scheme = Scheme::Baseline;
    EstimatorKind estimator = EstimatorKind::Bcjr;
    double bias_db = -2.0;        // delta, first-pass effective-noise bias
    double outer_bias_db = 5.0;   // delta', bias during outer iterations
    int outer_iterations = 3;
    int decode_iterations = 15;
    int interleaver_rows = 1024;
    std::size_t trellis_window = kDefaultTrellisWindow;
    double llr_clamp = kDefaultLlrClamp;
    bool min_sum = false;
    bool extrinsic_feedback = false;  // feed back extrinsic instead of a-posteriori LLRs

    void validate() const {
        if (outer_iterations < 1) throw std::invalid_argument("outer_iterations must be >= 1");
        if (decode_iterations < 1) throw std::invalid_argument("decode_iterations must be >= 1");
        if (interleaver_rows < 1) throw std::invalid_argument("interleaver_rows must be >= 1");
    }
};

/// One transmitted codeword with its channel draw. Frames are channel
/// independent: state, phase and noise are sampled fresh per frame.
struct Frame {
    std::vector<std::uint8_t> info;
    std::vector<std::uint8_t> codeword;
    ChannelRealization channel;  // symbols + 1 pilot slot
    DiffDecoded observed;        // differentially decoded, one slot per symbol
};

struct OuterIterationDiag {
    double state_error_rate = 0.0;
    double mean_abs_llr = 0.0;
    int decode_iterations = 0;
    bool syndrome_satisfied = false;
};

struct FrameResult {
    std::vector<std::uint8_t> decoded_info;
    std::vector<std::uint8_t> error_mask;  // decoded_info xor truth
    std::uint64_t bit_errors = 0;
    bool syndrome_satisfied = false;
    std::vector<OuterIterationDiag> outer;
};

/// Modulation + code + channel bundle shared by all schemes.
class Link {
public:
    Link(const Constellation& c, const ParityCheckMatrix& h, const LdpcEncoder& enc,
         const GeChannelParams& chan, int interleaver_rows)
        : c_(c), h_(h), enc_(enc), chan_(chan), interleaver_rows_(interleaver_rows) {
        if (h.n % c.bits_per_symbol != 0)
            throw std::invalid_argument("link: code length not divisible by bits per symbol");
    }

    const Constellation& constellation() const { return c_; }
    const ParityCheckMatrix& code() const { return h_; }
    const LdpcEncoder& encoder() const { return enc_; }
    const GeChannelParams& channel() const { return chan_; }
    int interleaver_rows() const { return interleaver_rows_; }
    std::size_t symbols_per_frame() const { return h_.n / c_.bits_per_symbol; }

    Frame transmit(Rng& rng) const {
        Frame f;
        f.info.resize(enc_.info_bits());
        for (auto& b : f.info) b = static_cast<std::uint8_t>(rng.bit());
        f.codeword = enc_.encode(f.info);
        const auto tx_bits = interleave<std::uint8_t>(f.codeword, interleaver_rows_);
        const auto x = map_bits(tx_bits, c_);
        const auto s = diff_encode(x);
        f.channel = sample_phase(sample_states(s.size(), chan_, rng), chan_, rng);
        const auto r = apply_channel(s, f.channel, chan_, rng);
        f.observed = diff_decode(r);
        return f;
    }

    // True state of observation slot k (the pilot occupies channel slot 0).
    GeState true_state(const Frame& f, std::size_t k) const { return f.channel.states[k + 1]; }

private:
    const Constellation& c_;
    const ParityCheckMatrix& h_;
    const LdpcEncoder& enc_;
    GeChannelParams chan_;
    int interleaver_rows_;
};

namespace detail {

inline StatePosterior run_estimator(EstimatorKind kind, const TrellisInputs& in,
                                    std::size_t window) {
    switch (kind) {
        case EstimatorKind::Va: return viterbi(in, window);
        case EstimatorKind::Sova: return sova(in, window);
        case EstimatorKind::Bcjr: return bcjr(in, window);
    }
    throw std::logic_error("unknown estimator");
}

inline double state_error_rate(const Link& link, const Frame& f, const StatePosterior& post) {
    std::size_t wrong = 0;
    for (std::size_t k = 0; k < post.size(); ++k)
        if (post.hard[k] != link.true_state(f, k)) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(post.size());
}

inline FrameResult finish(const Link& link, const Frame& f, const DecodeResult& dec,
                          std::vector<OuterIterationDiag> outer) {
    FrameResult r;
    r.decoded_info = link.encoder().extract_info(dec.hard);
    r.error_mask.resize(r.decoded_info.size());
    for (std::size_t i = 0; i < r.decoded_info.size(); ++i) {
        r.error_mask[i] = r.decoded_info[i] ^ f.info[i];
        r.bit_errors += r.error_mask[i];
    }
    r.syndrome_satisfied = dec.syndrome_satisfied;
    r.outer = std::move(outer);
    return r;
}

// Burst-aware receiver core. Iteration 1 uses bias delta and uniform symbol
// priors; later iterations switch to delta' and to decoder-fed priors, used
// in both the state estimation marginal and the LLR calculation. The decoder
// restarts from scratch every outer iteration.
inline FrameResult run_ba_core(const Link& link, const Frame& f, const SchemeConfig& cfg,
                               const std::vector<double>* posterior_override) {
    cfg.validate();
    const auto& c = link.constellation();
    const auto& y = f.observed.symbols;
    const std::size_t slots = y.size();
    const int bps = c.bits_per_symbol;

    std::vector<SymbolPrior> priors(slots, uniform_prior(c.order));
    std::vector<OuterIterationDiag> diags;
    DecodeResult dec;
    std::vector<double> llrs;

    for (int iter = 1; iter <= cfg.outer_iterations; ++iter) {
        const double bias = iter == 1 ? cfg.bias_db : cfg.outer_bias_db;
        const auto lp = make_likelihood_params(link.channel(), bias);
        const BltTable table(y, f.observed.erased, c, lp);

        StatePosterior post;
        if (posterior_override) {
            post.p_good.assign(posterior_override->begin(), posterior_override->end());
            post.hard.resize(slots);
            for (std::size_t k = 0; k < slots; ++k)
                post.hard[k] = post.p_good[k] >= 0.5 ? GeState::Good : GeState::Bad;
        } else {
            auto trellis = make_trellis_inputs(link.channel(), slots);
            for (std::size_t k = 0; k < slots; ++k) {
                trellis.state_loglik[k][0] = marginal_loglik_from(table.row(k, GeState::Good), priors[k]);
                trellis.state_loglik[k][1] = marginal_loglik_from(table.row(k, GeState::Bad), priors[k]);
            }
            post = run_estimator(cfg.estimator, trellis, cfg.trellis_window);
        }

        std::vector<double> llr_interleaved(slots * bps);
        std::vector<double> symbol_logliks(c.order);
        for (std::size_t k = 0; k < slots; ++k) {
            const auto good = table.row(k, GeState::Good);
            const auto bad = table.row(k, GeState::Bad);
            for (int j = 0; j < c.order; ++j)
                symbol_logliks[j] = mix_state_loglik(post.p_good[k], good[j], bad[j]);
            const auto l = bit_llrs(symbol_logliks, priors[k], c, cfg.llr_clamp);
            for (int m = 0; m < bps; ++m) llr_interleaved[k * bps + m] = l[m];
        }
        llrs = deinterleave<double>(llr_interleaved, cfg.interleaver_rows);
        dec = decode_bp(llrs, link.code(),
                        {cfg.decode_iterations, cfg.min_sum, /*early_stop=*/true});

        OuterIterationDiag d;
        d.state_error_rate = state_error_rate(link, f, post);
        double acc = 0.0;
        for (double l : dec.llr_out) acc += std::abs(l);
        d.mean_abs_llr = acc / static_cast<double>(dec.llr_out.size());
        d.decode_iterations = dec.iterations;
        d.syndrome_satisfied = dec.syndrome_satisfied;
        diags.push_back(d);

        if (dec.syndrome_satisfied || iter == cfg.outer_iterations) break;

        // decoder output -> bit probabilities -> normalized symbol priors
        std::vector<double> fb(dec.llr_out);
        if (cfg.extrinsic_feedback)
            for (std::size_t j = 0; j < fb.size(); ++j) fb[j] -= llrs[j];
        const auto fb_interleaved = interleave<double>(fb, cfg.interleaver_rows);
        for (std::size_t k = 0; k < slots; ++k) {
            double sum = 0.0;
            for (int j = 0; j < c.order; ++j) {
                double p = 1.0;
                for (int m = 0; m < bps; ++m) {
                    const double p0 = logistic(fb_interleaved[k * bps + m]);
                    p *= c.bit(j, m) == 0 ? p0 : 1.0 - p0;
                }
                priors[k][j] = p;
                sum += p;
            }
            for (int j = 0; j < c.order; ++j) priors[k][j] /= sum;
        }
    }
    return finish(link, f, dec, std::move(diags));
}

}  // namespace detail

/// Conventional decoding: memoryless single-state likelihood with the blended
/// innovation variance sigma_eff^2 and effective noise delta * sigma^2.
inline FrameResult run_baseline(const Link& link, const Frame& f, const SchemeConfig& cfg) {
    cfg.validate();
    const auto& c = link.constellation();
    const auto& y = f.observed.symbols;
    const std::size_t slots = y.size();
    const int bps = c.bits_per_symbol;
    const double sigma2_eff = effective_variance(link.channel());
    const double sigma2_noise = make_likelihood_params(link.channel(), cfg.bias_db).sigma2_eff_awgn;
    const auto prior = uniform_prior(c.order);

    std::vector<double> llr_interleaved(slots * bps);
    std::vector<double> symbol_logliks(c.order);
    for (std::size_t k = 0; k < slots; ++k) {
        if (!f.observed.erased.empty() && f.observed.erased[k]) {
            for (int m = 0; m < bps; ++m) llr_interleaved[k * bps + m] = 0.0;
            continue;
        }
        for (int j = 0; j < c.order; ++j)
            symbol_logliks[j] = blt_loglik(y[k], c.points[j], sigma2_eff, sigma2_noise);
        const auto l = bit_llrs(symbol_logliks, prior, c, cfg.llr_clamp);
        for (int m = 0; m < bps; ++m) llr_interleaved[k * bps + m] = l[m];
    }
    const auto llrs = deinterleave<double>(llr_interleaved, cfg.interleaver_rows);
    const auto dec = decode_bp(llrs, link.code(),
                               {cfg.decode_iterations, cfg.min_sum, /*early_stop=*/true});

    OuterIterationDiag d;
    double acc = 0.0;
    for (double l : dec.llr_out) acc += std::abs(l);
    d.mean_abs_llr = acc / static_cast<double>(dec.llr_out.size());
    d.decode_iterations = dec.iterations;
    d.syndrome_satisfied = dec.syndrome_satisfied;
    return detail::finish(link, f, dec, {d});
}

/// Burst-aware decoding: estimator posteriors weight the two-state likelihood
/// mixture before a single decoding pass.
inline FrameResult run_ba(const Link& link, const Frame& f, const SchemeConfig& cfg) {
    SchemeConfig one = cfg;
    one.outer_iterations = 1;
    return detail::run_ba_core(link, f, one, nullptr);
}

/// Burst-aware decoding with the state posterior forced externally (genie
/// bound studies).
inline FrameResult run_ba_with_posterior(const Link& link, const Frame& f,
                                         const SchemeConfig& cfg,
                                         std::span<const double> p_good) {
    if (p_good.size() != f.observed.symbols.size())
        throw std::invalid_argument("posterior length mismatch");
    SchemeConfig one = cfg;
    one.outer_iterations = 1;
    const std::vector<double> p(p_good.begin(), p_good.end());
    return detail::run_ba_core(link, f, one, &p);
}

/// Iterative burst-aware decoding: outer loop exchanging decoder-fed symbol
/// priors and re-estimated state posteriors; stops on zero syndrome or after
/// outer_iterations. One outer iteration is bit-identical to run_ba.
inline FrameResult run_iba(const Link& link, const Frame& f, const SchemeConfig& cfg) {
    return detail::run_ba_core(link, f, cfg, nullptr);
}

inline FrameResult run_scheme(const Link& link, const Frame& f, const SchemeConfig& cfg) {
    switch (cfg.scheme) {
        case Scheme::Baseline: return run_baseline(link, f, cfg);
        case Scheme::Ba: return run_ba(link, f, cfg);
        case Scheme::Iba: return run_iba(link, f, cfg);
    }
    throw std::logic_error("unknown scheme");
}

}  // namespace burstrx
