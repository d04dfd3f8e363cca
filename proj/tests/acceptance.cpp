// Acceptance suite: end-to-end checks with independent oracles and
// directional reproductions on the desk-scale code. Each criterion prints a
// single PASS/FAIL line; the exit code is the number of failures.
//
//   acceptance        run everything
//   acceptance N      run criterion N only (1..9)

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <string>

#include "burstrx/burstrx.hpp"
#include "oracles.hpp"

using namespace burstrx;

namespace {

std::string g_source_dir = BURSTRX_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

GeChannelParams reference_channel(double snr_db) {
    GeChannelParams p;
    p.sigma2_g = 3e-4;
    p.sigma2_b = 0.12;
    p.p_gb = 2e-4;
    p.p_bg = 2e-2;
    p.sigma2_awgn = db_to_linear(-snr_db);
    return p;
}

SchemeConfig scheme_16qam(Scheme s) {
    SchemeConfig cfg;
    cfg.scheme = s;
    cfg.estimator = EstimatorKind::Bcjr;
    cfg.bias_db = -2.0;       // optimized initial bias, 16QAM
    cfg.outer_bias_db = 5.0;  // optimized outer-iteration bias, 16QAM
    cfg.outer_iterations = s == Scheme::Iba ? 3 : 1;
    cfg.decode_iterations = 15;
    cfg.interleaver_rows = 1024;
    return cfg;
}

ParityCheckMatrix shipped_code() {
    std::ifstream in(g_source_dir + "/codes/regular_n1944.alist");
    if (!in) throw std::runtime_error("missing codes/regular_n1944.alist");
    return load_alist(in);
}

double trellis_path_metric(const TrellisInputs& in, std::span<const GeState> path) {
    double m = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const int z = static_cast<int>(path[k]);
        m += k == 0 ? -in.log_init[z] : -in.log_trans[static_cast<int>(path[k - 1])][z];
        m -= in.state_loglik[k][z];
    }
    return m;
}

// ---- criterion 1: exhaustive trellis oracles ----
Outcome criterion1() {
    Rng rng(1001);
    double worst_va = 0.0, worst_sova = 0.0, worst_bcjr = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + rng.index(12);
        GeChannelParams p;
        p.p_gb = 0.02 + 0.6 * rng.uniform();
        p.p_bg = 0.02 + 0.6 * rng.uniform();
        p.sigma2_g = 1e-4;
        p.sigma2_b = 0.1;
        p.sigma2_awgn = 0.01;
        auto in = make_trellis_inputs(p, n);
        for (std::size_t k = 0; k < n; ++k) {
            in.state_loglik[k][0] = -6.0 * rng.uniform();
            in.state_loglik[k][1] = -6.0 * rng.uniform();
        }
        const auto oracle = oracles::enumerate_trellis(in);

        const auto va = viterbi(in);
        worst_va = std::max(worst_va,
                            std::abs(trellis_path_metric(in, va.hard) - oracle.best_metric));

        const auto so = sova(in);
        for (std::size_t k = 0; k < n; ++k) {
            if (so.hard[k] != va.hard[k]) worst_sova = 1e9;
            const int zh = static_cast<int>(so.hard[k]);
            const double want = oracle.constrained[k][1 - zh] - oracle.best_metric;
            worst_sova = std::max(worst_sova, std::abs(so.reliability[k] - want));
        }

        const auto bc = bcjr(in);
        for (std::size_t k = 0; k < n; ++k)
            worst_bcjr = std::max(worst_bcjr, std::abs(bc.p_good[k] - oracle.posterior_good[k]));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max dev va=%.2e sova=%.2e bcjr=%.2e over 200 instances",
                  worst_va, worst_sova, worst_bcjr);
    return {worst_va <= 1e-9 && worst_sova <= 1e-9 && worst_bcjr <= 1e-9, buf};
}

// ---- criterion 2: BLT fidelity against 1-D quadrature ----
Outcome criterion2() {
    const auto c = build_qam(16);
    const double s2n = 0.01;
    std::vector<double> log_ratio;
    log_ratio.reserve(2 * 16 * 21 * 21);
    for (double s2z : {3e-4, 0.12}) {
        for (const auto& x : c.points) {
            for (int a = -10; a <= 10; ++a) {
                for (int b = -10; b <= 10; ++b) {
                    const cplx y = x + cplx(a * 0.015, b * 0.015);  // +-1.5 sigma_eff box
                    const double q = oracles::quadrature_lik(y, x, s2z, s2n);
                    log_ratio.push_back(std::log(q) - blt_loglik(y, x, s2z, s2n));
                }
            }
        }
    }
    double mean = 0.0;
    for (double r : log_ratio) mean += r;
    mean /= static_cast<double>(log_ratio.size());  // one global constant
    double worst = 0.0;
    for (double r : log_ratio) worst = std::max(worst, std::abs(std::exp(r - mean) - 1.0));
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max relative deviation %.3f%% over %zu grid points (limit 5%%)", 100.0 * worst,
                  log_ratio.size());
    return {worst < 0.05, buf};
}

// ---- criterion 3: channel statistics ----
Outcome criterion3() {
    const GeChannelParams p = reference_channel(20.0);
    Rng rng(14);
    const std::size_t n = 1'000'000;
    const auto z = sample_states(n, p, rng);

    std::size_t bad = 0;
    for (auto s : z) bad += s == GeState::Bad;
    const double pb_hat = static_cast<double>(bad) / n;
    const auto [pg, pb] = steady_state(p);
    (void)pg;
    // 3-sigma interval for the occupancy of a stationary two-state chain:
    // the binomial variance scaled by the serial-correlation factor
    // (1+rho)/(1-rho), rho = 1 - p_gb - p_bg
    const double rho = 1.0 - p.p_gb - p.p_bg;
    const double sigma = std::sqrt(pb * (1.0 - pb) / n * (1.0 + rho) / (1.0 - rho));

    std::size_t runs = 0, run_symbols = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (z[k] != GeState::Bad) continue;
        ++run_symbols;
        if (k + 1 == n || z[k + 1] != GeState::Bad) ++runs;
    }
    const double mean_run = static_cast<double>(run_symbols) / static_cast<double>(runs);
    const double run_rel = std::abs(mean_run - 50.0) / 50.0;

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "P_B=%.6f (target 0.009901 +- %.6f), mean bad run %.2f (target 50 +- 5%%)",
                  pb_hat, 3.0 * sigma, mean_run);
    return {std::abs(pb_hat - pb) < 3.0 * sigma && run_rel < 0.05, buf};
}

// ---- criterion 4: LDPC sanity ----
Outcome criterion4() {
    // exact MAP on the cycle-free toy code
    const auto tree = make_parity_check(6, {{0, 1, 2}, {2, 3}, {3, 4, 5}});
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> llr(tree.n);
        for (auto& l : llr) l = 6.0 * (rng.uniform() - 0.5);
        const auto dec = decode_bp(llr, tree, {20, false, false});
        const auto map = oracles::map_bit_llrs(llr, tree);
        for (int j = 0; j < tree.n; ++j)
            if ((dec.llr_out[j] < 0) != (map[j] < 0))
                return {false, "tree-code BP decision differs from exact MAP"};
    }

    // (3,6)-regular n=1944 at Eb/N0 = 3 dB over BPSK/AWGN, 15 iterations
    const auto h = shipped_code();
    const LdpcEncoder enc(h);
    const double rate = static_cast<double>(h.k) / h.n;
    const double n0 = 1.0 / (rate * db_to_linear(3.0));
    const double s2 = n0 / 2.0;
    std::uint64_t errs = 0, bits = 0;
    const int frames = 120;
    for (int f = 0; f < frames; ++f) {
        std::vector<std::uint8_t> info(h.k);
        for (auto& b : info) b = rng.bit();
        const auto cw = enc.encode(info);
        std::vector<double> llr(h.n);
        for (int j = 0; j < h.n; ++j)
            llr[j] = 2.0 * ((cw[j] ? -1.0 : 1.0) + std::sqrt(s2) * rng.gauss()) / s2;
        const auto dec = decode_bp(llr, h, {15, false, true});
        const auto got = enc.extract_info(dec.hard);
        for (int i = 0; i < h.k; ++i) errs += got[i] != info[i];
        bits += h.k;
    }
    const double ber = static_cast<double>(errs) / static_cast<double>(bits);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "tree MAP ok; n1944 @ EbN0 3 dB: BER %.3g (%llu/%llu, limit 1e-4)", ber,
                  static_cast<unsigned long long>(errs), static_cast<unsigned long long>(bits));
    return {ber < 1e-4, buf};
}

// ---- criteria 5/6 shared: paired per-frame runs ----
struct PairedStats {
    // per frame and scheme: bit errors, packets completed, packet errors
    std::vector<std::array<std::uint64_t, 3>> bit_errs;
    std::vector<std::array<std::uint64_t, 3>> pkts;
    std::vector<std::array<std::uint64_t, 3>> pkt_errs;
    std::uint64_t bits_per_frame = 0;

    std::array<double, 3> ber() const {
        std::array<double, 3> out{};
        for (int s = 0; s < 3; ++s) {
            std::uint64_t e = 0;
            for (const auto& f : bit_errs) e += f[s];
            out[s] = static_cast<double>(e) /
                     (static_cast<double>(bits_per_frame) * bit_errs.size());
        }
        return out;
    }
    std::array<double, 3> per() const {
        std::array<double, 3> out{};
        for (int s = 0; s < 3; ++s) {
            std::uint64_t e = 0, n = 0;
            for (std::size_t f = 0; f < pkts.size(); ++f) {
                e += pkt_errs[f][s];
                n += pkts[f][s];
            }
            out[s] = n ? static_cast<double>(e) / static_cast<double>(n) : 0.0;
        }
        return out;
    }
};

PairedStats run_paired(const Link& link, const std::array<SchemeConfig, 3>& cfgs, int frames,
                       std::uint64_t master_seed, int packet_bits = 512) {
    PairedStats st;
    st.bits_per_frame = link.encoder().info_bits();
    std::array<PacketCounter, 3> pc{PacketCounter(packet_bits), PacketCounter(packet_bits),
                                    PacketCounter(packet_bits)};
    for (int f = 0; f < frames; ++f) {
        Rng rng(derive_seed(master_seed, 0, static_cast<std::uint64_t>(f)));
        const Frame frame = link.transmit(rng);
        std::array<std::uint64_t, 3> be{}, pk{}, pe{};
        for (int s = 0; s < 3; ++s) {
            const auto r = run_scheme(link, frame, cfgs[s]);
            const std::uint64_t p0 = pc[s].packets(), e0 = pc[s].packet_errors();
            pc[s].feed(r.error_mask);
            be[s] = r.bit_errors;
            pk[s] = pc[s].packets() - p0;
            pe[s] = pc[s].packet_errors() - e0;
        }
        st.bit_errs.push_back(be);
        st.pkts.push_back(pk);
        st.pkt_errs.push_back(pe);
    }
    return st;
}

// one-sided paired bootstrap: true when metric(a) < metric(b) at 95%
bool bootstrap_less(const PairedStats& st, int a, int b, bool use_per, Rng& rng,
                    int resamples = 2000) {
    const std::size_t n = st.bit_errs.size();
    std::vector<double> diffs(resamples);
    for (int r = 0; r < resamples; ++r) {
        std::uint64_t ea = 0, eb = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t f = rng.index(n);
            if (use_per) {
                ea += st.pkt_errs[f][a];
                eb += st.pkt_errs[f][b];
                na += st.pkts[f][a];
                nb += st.pkts[f][b];
            } else {
                ea += st.bit_errs[f][a];
                eb += st.bit_errs[f][b];
                na += st.bits_per_frame;
                nb += st.bits_per_frame;
            }
        }
        const double ra = na ? static_cast<double>(ea) / static_cast<double>(na) : 0.0;
        const double rb = nb ? static_cast<double>(eb) / static_cast<double>(nb) : 0.0;
        diffs[r] = ra - rb;
    }
    std::sort(diffs.begin(), diffs.end());
    return diffs[static_cast<std::size_t>(0.95 * (resamples - 1))] < 0.0;
}

// ---- criterion 5: scheme ordering with paired bootstrap ----
Outcome criterion5() {
    const auto code = shipped_code();
    const auto c = build_qam(16);
    const LdpcEncoder enc(code);
    const std::array<SchemeConfig, 3> cfgs = {scheme_16qam(Scheme::Baseline),
                                              scheme_16qam(Scheme::Ba),
                                              scheme_16qam(Scheme::Iba)};

    // pick the SNR so the baseline lands inside BER [1e-3, 1e-2]:
    // short baseline-only pilots on the candidate grid, preferring mid-window
    double chosen = 0.0, best_dist = 1e9;
    for (const double snr : {10.75, 11.0, 11.25, 11.5, 11.75}) {
        const Link link(c, code, enc, reference_channel(snr), 1024);
        std::uint64_t errs = 0;
        const int pilot = 96;
        for (int f = 0; f < pilot; ++f) {
            Rng rng(derive_seed(500, 0, static_cast<std::uint64_t>(f)));
            errs += run_baseline(link, link.transmit(rng), cfgs[0]).bit_errors;
        }
        const double ber = static_cast<double>(errs) / (static_cast<double>(code.k) * pilot);
        if (ber >= 1e-3 && ber <= 1e-2) {
            const double dist = std::abs(std::log10(ber) - std::log10(3.5e-3));
            if (dist < best_dist) {
                best_dist = dist;
                chosen = snr;
            }
        }
    }
    if (chosen == 0.0) return {false, "no pilot SNR put the baseline BER inside [1e-3, 1e-2]"};

    const Link link(c, code, enc, reference_channel(chosen), 1024);
    const auto st = run_paired(link, cfgs, 512, 501);
    const auto ber = st.ber();
    const auto per = st.per();

    Rng boot(505);
    const bool ber_order = ber[2] < ber[1] && ber[1] < ber[0];
    const bool per_order = per[2] < per[1] && per[1] < per[0];
    const bool in_window = ber[0] >= 1e-3 && ber[0] <= 1e-2;
    const bool sig = bootstrap_less(st, 2, 1, false, boot) &&
                     bootstrap_less(st, 1, 0, false, boot) &&
                     bootstrap_less(st, 2, 1, true, boot) && bootstrap_less(st, 1, 0, true, boot);

    char buf[240];
    std::snprintf(buf, sizeof(buf),
                  "snr %.2f dB, 512 paired frames: BER base/ba/iba = %.2e/%.2e/%.2e, "
                  "PER = %.3f/%.3f/%.3f, bootstrap %s",
                  chosen, ber[0], ber[1], ber[2], per[0], per[1], per[2],
                  sig ? "significant" : "NOT significant");
    return {in_window && ber_order && per_order && sig, buf};
}

// ---- criterion 6: severe-burst robustness ----
Outcome criterion6() {
    const auto code = shipped_code();
    const auto c = build_qam(16);
    const LdpcEncoder enc(code);
    GeChannelParams p = reference_channel(15.0);
    p.sigma2_b = 1.0;
    const Link link(c, code, enc, p, 1024);
    const std::array<SchemeConfig, 3> cfgs = {scheme_16qam(Scheme::Baseline),
                                              scheme_16qam(Scheme::Ba),
                                              scheme_16qam(Scheme::Iba)};
    const auto st = run_paired(link, cfgs, 512, 601);
    const auto ber = st.ber();
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "sigma2_b=1, snr 15 dB, 512 frames: BER base/ba/iba = %.3e/%.3e/%.3e "
                  "(need iba <= base/10)",
                  ber[0], ber[1], ber[2]);
    return {ber[0] > 0.0 && ber[2] <= ber[0] / 10.0, buf};
}

// ---- criterion 7: estimator ranking on the long-burst trace ----
Outcome criterion7() {
    const auto c = build_qam(16);
    GeChannelParams p;
    p.sigma2_g = 3e-4;
    p.sigma2_b = 0.12;
    p.p_gb = 2e-4;
    p.p_bg = 2e-3;
    p.sigma2_awgn = db_to_linear(-15.5);
    const auto lp = make_likelihood_params(p, -3.0);

    Rng rng(7);
    const std::size_t n = 120'000;
    std::vector<cplx> x(n);
    for (auto& v : x) v = c.points[rng.index(16)];
    const auto s = diff_encode(x);
    const auto real = sample_phase(sample_states(s.size(), p, rng), p, rng);
    const auto r = apply_channel(s, real, p, rng);
    const auto y = diff_decode(r);

    auto in = make_trellis_inputs(p, n);
    const auto prior = uniform_prior(16);
    for (std::size_t k = 0; k < n; ++k) {
        in.state_loglik[k][0] =
            marginal_loglik(y.symbols[k], lp.sigma2_g, lp.sigma2_eff_awgn, prior, c);
        in.state_loglik[k][1] =
            marginal_loglik(y.symbols[k], lp.sigma2_b, lp.sigma2_eff_awgn, prior, c);
    }
    auto ser = [&](const StatePosterior& est) {
        std::size_t wrong = 0;
        for (std::size_t k = 0; k < n; ++k) wrong += est.hard[k] != real.states[k + 1];
        return static_cast<double>(wrong) / static_cast<double>(n);
    };
    const double ser_va = ser(viterbi(in));
    const double ser_bcjr = ser(bcjr(in));
    char buf[160];
    std::snprintf(buf, sizeof(buf), "state-error rate over %zu slots: bcjr %.5f vs va %.5f", n,
                  ser_bcjr, ser_va);
    return {ser_bcjr <= ser_va, buf};
}

// ---- criterion 8: IBA degeneracy ----
Outcome criterion8() {
    const auto code = shipped_code();
    const auto c = build_qam(16);
    const LdpcEncoder enc(code);
    const Link link(c, code, enc, reference_channel(11.5), 1024);
    int frames = 0;
    for (EstimatorKind e : {EstimatorKind::Va, EstimatorKind::Sova, EstimatorKind::Bcjr}) {
        for (int t = 0; t < 17; ++t, ++frames) {
            Rng rng(derive_seed(801, static_cast<std::uint64_t>(e), t));
            const Frame f = link.transmit(rng);
            auto ba_cfg = scheme_16qam(Scheme::Ba);
            ba_cfg.estimator = e;
            auto iba_cfg = scheme_16qam(Scheme::Iba);
            iba_cfg.estimator = e;
            iba_cfg.outer_iterations = 1;
            const auto a = run_ba(link, f, ba_cfg);
            const auto b = run_iba(link, f, iba_cfg);
            if (a.decoded_info != b.decoded_info || a.error_mask != b.error_mask ||
                a.syndrome_satisfied != b.syndrome_satisfied)
                return {false, "IBA(1 outer) differs from BA on a frame"};
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "bit-identical on %d frames across va/sova/bcjr", frames);
    return {true, buf};
}

// ---- criterion 9: determinism across worker counts ----
Outcome criterion9() {
    const auto spec = parse_config_file(g_source_dir + "/configs/acceptance_sweep.ini");
    std::ifstream in(g_source_dir + "/codes/regular_n1944.alist");
    const auto code = load_alist(in);
    const auto csv1 = emit_csv(run_sweep(spec, code, 1));
    const auto csv2 = emit_csv(run_sweep(spec, code, 2));
    const auto csv3 = emit_csv(run_sweep(spec, code, 3));
    const auto csv1b = emit_csv(run_sweep(spec, code, 1));
    const bool pass = csv1 == csv2 && csv1 == csv3 && csv1 == csv1b;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%zu-byte CSV identical for workers 1/2/3 and a rerun%s",
                  csv1.size(), pass ? "" : " -- MISMATCH");
    return {pass, buf};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
};

}  // namespace

int main(int argc, char** argv) {
    const Criterion criteria[] = {
        {"trellis-oracles", criterion1}, {"blt-fidelity", criterion2},
        {"channel-statistics", criterion3}, {"ldpc-sanity", criterion4},
        {"scheme-ordering", criterion5}, {"severe-burst", criterion6},
        {"estimator-ranking", criterion7}, {"iba-degeneracy", criterion8},
        {"determinism", criterion9},
    };

    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failures = 0;
    for (int i = 0; i < 9; ++i) {
        if (only && only != i + 1) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("C%d %-20s %s  [%.1fs]  %s\n", i + 1, criteria[i].name,
                    o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures;
}
