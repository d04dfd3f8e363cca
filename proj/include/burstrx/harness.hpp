#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "burstrx/common.hpp"
#include "burstrx/constellation.hpp"
#include "burstrx/channel.hpp"
#include "burstrx/estimator.hpp"
#include "burstrx/ldpc.hpp"
#include "burstrx/pipeline.hpp"

namespace burstrx {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SweepAxis { SnrDb, Sigma2B, Sigma2G, PGb, PBg, BiasDb, OuterBiasDb };

inline const char* axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::SnrDb: return "snr_db";
        case SweepAxis::Sigma2B: return "sigma2_b";
        case SweepAxis::Sigma2G: return "sigma2_g";
        case SweepAxis::PGb: return "p_gb";
        case SweepAxis::PBg: return "p_bg";
        case SweepAxis::BiasDb: return "bias_db";
        case SweepAxis::OuterBiasDb: return "outer_bias_db";
    }
    return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
    for (SweepAxis a : {SweepAxis::SnrDb, SweepAxis::Sigma2B, SweepAxis::Sigma2G, SweepAxis::PGb,
                        SweepAxis::PBg, SweepAxis::BiasDb, SweepAxis::OuterBiasDb})
        if (s == axis_name(a)) return a;
    throw ConfigError("unknown sweep axis '" + s + "'");
}

struct StopRule {
    std::uint64_t max_frames = 2000;
    std::uint64_t min_packet_errors = 100;
};

struct SchemeSpec {
    std::string scheme;     // baseline | ba | iba
    std::string estimator;  // "" for baseline, else va | sova | bcjr
    SchemeConfig cfg;

    std::string id() const { return estimator.empty() ? scheme : scheme + ":" + estimator; }
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::SnrDb;
    std::vector<double> values;
    double snr_db = 15.0;
    GeChannelParams channel;  // sigma2_awgn filled from snr_db
    int modulation_order = 16;
    std::string code = "codes/regular_n1944.alist";
    std::string decoder_variant = "sum-product";
    int decode_iterations = 15;
    int interleaver_rows = 1024;
    int packet_bits = 512;
    double bias_db = 0.0;  // resolved per modulation when unset in the config
    double outer_bias_db = 0.0;
    int outer_iterations = 3;
    double llr_clamp = kDefaultLlrClamp;
    std::size_t estimator_window = kDefaultTrellisWindow;
    std::string feedback = "aposteriori";
    StopRule stop;
    std::vector<SchemeSpec> schemes;
    std::uint64_t master_seed = 1;

    void validate() const {
        if (values.empty()) throw ConfigError("sweep values list is empty");
        if (!std::is_sorted(values.begin(), values.end()))
            throw ConfigError("sweep values must be sorted ascending");
        if (schemes.empty()) throw ConfigError("no schemes selected");
        if (modulation_order != 4 && modulation_order != 16 && modulation_order != 64)
            throw ConfigError("modulation order must be 4, 16 or 64");
        if (packet_bits < 1) throw ConfigError("packet_bits must be >= 1");
        if (stop.max_frames < 1) throw ConfigError("max_frames must be >= 1");
        try {
            channel.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("channel parameters: ") + e.what());
        }
    }
};

struct MetricRecord {
    double axis_value = 0.0;
    std::string scheme;
    std::string estimator;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t packets = 0;
    std::uint64_t packet_errors = 0;
    double ber = 0.0;
    double per = 0.0;
    std::uint64_t frames = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;  // diagnostic only, not emitted
};

/// Streaming packet accounting over the concatenated information stream.
/// Packets may straddle codeword boundaries; a trailing partial packet is
/// never counted.
class PacketCounter {
public:
    explicit PacketCounter(int packet_bits) : bits_(packet_bits) {}

    void feed(std::span<const std::uint8_t> error_mask) {
        for (std::uint8_t e : error_mask) {
            if (e) errored_ = true;
            if (++fill_ == bits_) {
                ++packets_;
                if (errored_) ++errors_;
                fill_ = 0;
                errored_ = false;
            }
        }
    }

    std::uint64_t packets() const { return packets_; }
    std::uint64_t packet_errors() const { return errors_; }

private:
    int bits_;
    int fill_ = 0;
    bool errored_ = false;
    std::uint64_t packets_ = 0;
    std::uint64_t errors_ = 0;
};

/// Bit and packet error counts for a decoded stream against the truth.
inline std::pair<std::uint64_t, std::uint64_t> packetize_and_count(
    std::span<const std::uint8_t> decoded, std::span<const std::uint8_t> truth,
    int packet_bits = 512) {
    if (decoded.size() != truth.size())
        throw std::invalid_argument("packetize_and_count: length mismatch");
    PacketCounter pc(packet_bits);
    std::uint64_t bit_errors = 0;
    std::vector<std::uint8_t> mask(decoded.size());
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        mask[i] = decoded[i] != truth[i];
        bit_errors += mask[i];
    }
    pc.feed(mask);
    return {bit_errors, pc.packet_errors()};
}

inline int resolve_workers(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BURSTRX_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace detail {

inline GeChannelParams apply_axis_channel(GeChannelParams base, double snr_db, SweepAxis axis,
                                          double value) {
    base.sigma2_awgn = db_to_linear(-snr_db);  // Es = 1
    switch (axis) {
        case SweepAxis::SnrDb: base.sigma2_awgn = db_to_linear(-value); break;
        case SweepAxis::Sigma2B: base.sigma2_b = value; break;
        case SweepAxis::Sigma2G: base.sigma2_g = value; break;
        case SweepAxis::PGb: base.p_gb = value; break;
        case SweepAxis::PBg: base.p_bg = value; break;
        default: break;
    }
    return base;
}

inline SchemeConfig apply_axis_scheme(SchemeConfig cfg, SweepAxis axis, double value) {
    if (axis == SweepAxis::BiasDb) cfg.bias_db = value;
    if (axis == SweepAxis::OuterBiasDb) cfg.outer_bias_db = value;
    return cfg;
}

struct FrameOutcome {
    std::uint64_t bit_errors = 0;
    std::vector<std::uint8_t> error_mask;
};

}  // namespace detail

// Frames are processed in fixed-size chunks; within a chunk workers may run
// in any order, and the stop rule is evaluated only at chunk boundaries on
// in-order merged counters, so results do not depend on the worker count.
inline constexpr std::uint64_t kFrameChunk = 16;

/// Runs the Monte Carlo campaign described by the spec. For every axis value
/// all schemes see identical per-frame channel and noise realizations; a
/// scheme stops accumulating once it has reached min_packet_errors (checked
/// at chunk boundaries) or max_frames.
inline std::vector<MetricRecord> run_sweep(const SweepSpec& raw_spec,
                                           const ParityCheckMatrix& code, int workers = 0) {
    SweepSpec spec = raw_spec;
    spec.channel.sigma2_awgn = db_to_linear(-spec.snr_db);  // Es = 1
    spec.validate();
    const int nworkers = resolve_workers(workers);
    const Constellation constellation = build_qam(spec.modulation_order);
    const LdpcEncoder encoder(code);

    std::vector<MetricRecord> records;
    for (std::size_t ai = 0; ai < spec.values.size(); ++ai) {
        const double value = spec.values[ai];
        const GeChannelParams chan =
            detail::apply_axis_channel(spec.channel, spec.snr_db, spec.axis, value);
        const Link link(constellation, code, encoder, chan, spec.interleaver_rows);

        const std::size_t nschemes = spec.schemes.size();
        std::vector<SchemeConfig> cfgs;
        for (const auto& s : spec.schemes)
            cfgs.push_back(detail::apply_axis_scheme(s.cfg, spec.axis, value));

        std::vector<MetricRecord> recs(nschemes);
        std::vector<PacketCounter> packets(nschemes, PacketCounter(spec.packet_bits));
        std::vector<bool> active(nschemes, true);
        std::vector<std::atomic<std::int64_t>> nanos(nschemes);
        for (auto& x : nanos) x.store(0);

        std::uint64_t frame = 0;
        bool any_active = true;
        while (any_active && frame < spec.stop.max_frames) {
            const std::uint64_t chunk =
                std::min<std::uint64_t>(kFrameChunk, spec.stop.max_frames - frame);
            std::vector<std::vector<detail::FrameOutcome>> out(
                chunk, std::vector<detail::FrameOutcome>(nschemes));

            std::atomic<std::uint64_t> next{0};
            auto work = [&]() {
                for (;;) {
                    const std::uint64_t t = next.fetch_add(1);
                    if (t >= chunk) return;
                    Rng rng(derive_seed(spec.master_seed, ai, frame + t));
                    const Frame f = link.transmit(rng);
                    for (std::size_t s = 0; s < nschemes; ++s) {
                        if (!active[s]) continue;
                        const auto t0 = std::chrono::steady_clock::now();
                        const FrameResult r = run_scheme(link, f, cfgs[s]);
                        const auto t1 = std::chrono::steady_clock::now();
                        nanos[s].fetch_add(
                            std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
                        out[t][s].bit_errors = r.bit_errors;
                        out[t][s].error_mask = r.error_mask;
                    }
                }
            };
            if (nworkers <= 1 || chunk == 1) {
                work();
            } else {
                std::vector<std::thread> pool;
                const int nt = static_cast<int>(std::min<std::uint64_t>(nworkers, chunk));
                pool.reserve(nt);
                for (int w = 0; w < nt; ++w) pool.emplace_back(work);
                for (auto& th : pool) th.join();
            }

            // in-order merge keeps the packet stream identical for any worker count
            for (std::uint64_t t = 0; t < chunk; ++t) {
                for (std::size_t s = 0; s < nschemes; ++s) {
                    if (!active[s]) continue;
                    recs[s].frames += 1;
                    recs[s].bits += out[t][s].error_mask.size();
                    recs[s].bit_errors += out[t][s].bit_errors;
                    packets[s].feed(out[t][s].error_mask);
                }
            }
            frame += chunk;

            any_active = false;
            for (std::size_t s = 0; s < nschemes; ++s) {
                if (active[s] && packets[s].packet_errors() >= spec.stop.min_packet_errors)
                    active[s] = false;
                if (active[s]) any_active = true;
            }
        }

        for (std::size_t s = 0; s < nschemes; ++s) {
            MetricRecord& r = recs[s];
            r.axis_value = value;
            r.scheme = spec.schemes[s].scheme;
            r.estimator = spec.schemes[s].estimator;
            r.packets = packets[s].packets();
            r.packet_errors = packets[s].packet_errors();
            r.ber = r.bits ? static_cast<double>(r.bit_errors) / static_cast<double>(r.bits) : 0.0;
            r.per = r.packets
                        ? static_cast<double>(r.packet_errors) / static_cast<double>(r.packets)
                        : 0.0;
            r.seed = spec.master_seed;
            r.wall_seconds = static_cast<double>(nanos[s].load()) * 1e-9;
            records.push_back(std::move(r));
        }
    }
    return records;
}

inline const char* kMetricCsvHeader =
    "axis,scheme,estimator,bits,bit_errors,packets,packet_errors,ber,per,frames,seed";

inline std::string emit_csv(std::span<const MetricRecord> records) {
    std::string out = kMetricCsvHeader;
    out += '\n';
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.10g,%s,%s,%llu,%llu,%llu,%llu,%.17g,%.17g,%llu,%llu\n",
                      r.axis_value, r.scheme.c_str(), r.estimator.c_str(),
                      static_cast<unsigned long long>(r.bits),
                      static_cast<unsigned long long>(r.bit_errors),
                      static_cast<unsigned long long>(r.packets),
                      static_cast<unsigned long long>(r.packet_errors), r.ber, r.per,
                      static_cast<unsigned long long>(r.frames),
                      static_cast<unsigned long long>(r.seed));
        out += buf;
    }
    return out;
}

inline std::vector<MetricRecord> parse_metric_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kMetricCsvHeader)
        throw std::runtime_error("metric csv: bad header");
    std::vector<MetricRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (f.size() != 11) throw std::runtime_error("metric csv: bad field count");
        MetricRecord r;
        r.axis_value = std::stod(f[0]);
        r.scheme = f[1];
        r.estimator = f[2];
        r.bits = std::stoull(f[3]);
        r.bit_errors = std::stoull(f[4]);
        r.packets = std::stoull(f[5]);
        r.packet_errors = std::stoull(f[6]);
        r.ber = std::stod(f[7]);
        r.per = std::stod(f[8]);
        r.frames = std::stoull(f[9]);
        r.seed = std::stoull(f[10]);
        out.push_back(std::move(r));
    }
    return out;
}

// ---- plot dumps ----

inline std::string scatter_csv(std::span<const cplx> points) {
    std::string out = "re,im\n";
    char buf[96];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.8g,%.8g\n", p.real(), p.imag());
        out += buf;
    }
    return out;
}

inline std::string trace_csv(const ChannelRealization& r) {
    std::string out = "k,theta,w,state\n";
    char buf[128];
    for (std::size_t k = 0; k < r.phases.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%.8g,%.8g,%c\n", k, r.phases[k], r.innovations[k],
                      r.states[k] == GeState::Good ? 'G' : 'B');
        out += buf;
    }
    return out;
}

inline std::string states_csv(std::span<const GeState> truth, const StatePosterior& post) {
    std::string out = "k,z_true,z_hat,p_good\n";
    char buf[128];
    for (std::size_t k = 0; k < post.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%zu,%c,%c,%.8g\n", k,
                      truth[k] == GeState::Good ? 'G' : 'B',
                      post.hard[k] == GeState::Good ? 'G' : 'B', post.p_good[k]);
        out += buf;
    }
    return out;
}

// ---- config file ----

namespace detail {

struct IniData {
    std::map<std::string, std::string> kv;  // "section.key" -> value
};

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline IniData parse_ini(std::istream& in) {
    IniData data;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        data.kv[section + "." + key] = val;
    }
    return data;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(to_double(key, tok));
    }
    return out;
}

inline SchemeSpec parse_scheme_id(const std::string& id) {
    SchemeSpec s;
    const std::size_t colon = id.find(':');
    s.scheme = colon == std::string::npos ? id : id.substr(0, colon);
    s.estimator = colon == std::string::npos ? "" : id.substr(colon + 1);
    if (s.scheme == "baseline") {
        s.cfg.scheme = Scheme::Baseline;
        if (!s.estimator.empty()) throw ConfigError("baseline takes no estimator");
    } else if (s.scheme == "ba" || s.scheme == "iba") {
        s.cfg.scheme = s.scheme == "ba" ? Scheme::Ba : Scheme::Iba;
        if (s.estimator.empty()) s.estimator = "bcjr";
        if (s.estimator == "va")
            s.cfg.estimator = EstimatorKind::Va;
        else if (s.estimator == "sova")
            s.cfg.estimator = EstimatorKind::Sova;
        else if (s.estimator == "bcjr")
            s.cfg.estimator = EstimatorKind::Bcjr;
        else
            throw ConfigError("unknown estimator '" + s.estimator + "'");
    } else {
        throw ConfigError("unknown scheme '" + s.scheme + "'");
    }
    return s;
}

}  // namespace detail

/// Parses the key/value config into a SweepSpec. Unset biases resolve to the
/// per-modulation defaults (delta: -3 dB for QPSK, -2 dB for 16/64QAM;
/// delta': 0 dB for QPSK, 5 dB for 16/64QAM). Unknown keys are errors.
inline SweepSpec parse_config(std::istream& in) {
    const auto ini = detail::parse_ini(in);
    SweepSpec spec;
    bool bias_set = false, outer_bias_set = false;
    std::vector<std::string> scheme_ids = {"baseline", "ba:bcjr", "iba:bcjr"};

    for (const auto& [key, val] : ini.kv) {
        if (key == "channel.sigma2_g") spec.channel.sigma2_g = detail::to_double(key, val);
        else if (key == "channel.sigma2_b") spec.channel.sigma2_b = detail::to_double(key, val);
        else if (key == "channel.p_gb") spec.channel.p_gb = detail::to_double(key, val);
        else if (key == "channel.p_bg") spec.channel.p_bg = detail::to_double(key, val);
        else if (key == "channel.snr_db") spec.snr_db = detail::to_double(key, val);
        else if (key == "modulation.order")
            spec.modulation_order = static_cast<int>(detail::to_double(key, val));
        else if (key == "code.file") spec.code = val;
        else if (key == "code.decoder") spec.decoder_variant = val;
        else if (key == "code.decode_iterations")
            spec.decode_iterations = static_cast<int>(detail::to_double(key, val));
        else if (key == "code.interleaver_rows")
            spec.interleaver_rows = static_cast<int>(detail::to_double(key, val));
        else if (key == "decoding.bias_db") {
            spec.bias_db = detail::to_double(key, val);
            bias_set = true;
        } else if (key == "decoding.outer_bias_db") {
            spec.outer_bias_db = detail::to_double(key, val);
            outer_bias_set = true;
        } else if (key == "decoding.outer_iterations")
            spec.outer_iterations = static_cast<int>(detail::to_double(key, val));
        else if (key == "decoding.llr_clamp") spec.llr_clamp = detail::to_double(key, val);
        else if (key == "decoding.estimator_window")
            spec.estimator_window = static_cast<std::size_t>(detail::to_double(key, val));
        else if (key == "decoding.feedback") spec.feedback = val;
        else if (key == "sweep.axis") spec.axis = parse_axis(val);
        else if (key == "sweep.values") spec.values = detail::to_list(key, val);
        else if (key == "sweep.max_frames")
            spec.stop.max_frames = static_cast<std::uint64_t>(detail::to_double(key, val));
        else if (key == "sweep.min_packet_errors")
            spec.stop.min_packet_errors = static_cast<std::uint64_t>(detail::to_double(key, val));
        else if (key == "sweep.packet_bits")
            spec.packet_bits = static_cast<int>(detail::to_double(key, val));
        else if (key == "run.schemes") {
            scheme_ids.clear();
            std::stringstream ss(val);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok = detail::trim(tok);
                if (!tok.empty()) scheme_ids.push_back(tok);
            }
        } else if (key == "run.master_seed")
            spec.master_seed = static_cast<std::uint64_t>(detail::to_double(key, val));
        else
            throw ConfigError("config: unknown key '" + key + "'");
    }

    spec.channel.sigma2_awgn = db_to_linear(-spec.snr_db);  // Es = 1
    if (!bias_set) spec.bias_db = spec.modulation_order == 4 ? -3.0 : -2.0;
    if (!outer_bias_set) spec.outer_bias_db = spec.modulation_order == 4 ? 0.0 : 5.0;
    if (spec.feedback != "aposteriori" && spec.feedback != "extrinsic")
        throw ConfigError("decoding.feedback must be 'aposteriori' or 'extrinsic'");
    if (spec.decoder_variant != "sum-product" && spec.decoder_variant != "min-sum")
        throw ConfigError("code.decoder must be 'sum-product' or 'min-sum'");

    for (const auto& id : scheme_ids) {
        SchemeSpec s = detail::parse_scheme_id(id);
        s.cfg.bias_db = spec.bias_db;
        s.cfg.outer_bias_db = spec.outer_bias_db;
        s.cfg.outer_iterations = s.cfg.scheme == Scheme::Iba ? spec.outer_iterations : 1;
        s.cfg.decode_iterations = spec.decode_iterations;
        s.cfg.interleaver_rows = spec.interleaver_rows;
        s.cfg.trellis_window = spec.estimator_window;
        s.cfg.llr_clamp = spec.llr_clamp;
        s.cfg.min_sum = spec.decoder_variant == "min-sum";
        s.cfg.extrinsic_feedback = spec.feedback == "extrinsic";
        spec.schemes.push_back(std::move(s));
    }

    spec.validate();
    return spec;
}

inline SweepSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Loads the code referenced by a sweep spec: either an alist file path or
/// "builtin:regular-n1944" for the generated desk-scale code.
inline ParityCheckMatrix load_code(const std::string& ref) {
    if (ref == "builtin:regular-n1944") return make_regular_ldpc(1944, 3, 6, 0xb1947ULL);
    std::ifstream in(ref);
    if (!in) throw ConfigError("cannot open code file '" + ref + "'");
    return load_alist(in);
}

}  // namespace burstrx
