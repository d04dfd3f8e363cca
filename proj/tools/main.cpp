// burstrx command line: Monte Carlo sweeps, channel-estimation traces,
// constellation dumps and LDPC code utilities.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "burstrx/burstrx.hpp"

using namespace burstrx;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "--set section.key=value" entries are appended after the file content;
// the last occurrence of a key wins.
SweepSpec load_spec(const std::string& path, const std::vector<std::string>& overrides) {
    std::string text = read_file(path);
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        const auto dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("bad override '" + ov + "', expected section.key=value");
        text += "\n[" + ov.substr(0, dot) + "]\n" + ov.substr(dot + 1, eq - dot - 1) + " = " +
                ov.substr(eq + 1) + "\n";
    }
    std::istringstream in(text);
    return parse_config(in);
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

ParityCheckMatrix load_spec_code(const SweepSpec& spec, const std::string& config_path) {
    if (spec.code.rfind("builtin:", 0) == 0) return load_code(spec.code);
    namespace fs = std::filesystem;
    const fs::path given(spec.code);
    const fs::path config_dir = fs::path(config_path).parent_path();
    // cwd first, then beside the config file, then one level up from it
    for (const fs::path& p : {given, config_dir / given, config_dir / ".." / given})
        if (fs::exists(p)) return load_code(p.string());
    return load_code(given.string());
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& overrides,
              const std::string& out, int workers, std::int64_t seed) {
    SweepSpec spec = load_spec(config, overrides);
    if (seed >= 0) spec.master_seed = static_cast<std::uint64_t>(seed);
    const auto code = load_spec_code(spec, config);
    const auto records = run_sweep(spec, code, workers);
    write_output(out, emit_csv(records));
    return 0;
}

int cmd_estimate(const std::string& config, const std::vector<std::string>& overrides,
                 std::size_t slots, const std::string& prefix) {
    SweepSpec spec = load_spec(config, overrides);
    GeChannelParams p = spec.channel;
    p.sigma2_awgn = db_to_linear(-spec.snr_db);

    const auto c = build_qam(spec.modulation_order);
    Rng rng(spec.master_seed);
    std::vector<cplx> x(slots);
    for (auto& v : x) v = c.points[rng.index(c.points.size())];
    const auto s = diff_encode(x);
    const auto real = sample_phase(sample_states(s.size(), p, rng), p, rng);
    const auto r = apply_channel(s, real, p, rng);
    const auto y = diff_decode(r);

    const auto lp = make_likelihood_params(p, spec.bias_db);
    auto in = make_trellis_inputs(p, slots);
    const auto prior = uniform_prior(c.order);
    for (std::size_t k = 0; k < slots; ++k) {
        in.state_loglik[k][0] =
            marginal_loglik(y.symbols[k], lp.sigma2_g, lp.sigma2_eff_awgn, prior, c);
        in.state_loglik[k][1] =
            marginal_loglik(y.symbols[k], lp.sigma2_b, lp.sigma2_eff_awgn, prior, c);
    }

    const std::vector<GeState> truth(real.states.begin() + 1, real.states.end());
    struct Row {
        const char* name;
        StatePosterior post;
    };
    std::vector<Row> rows;
    rows.push_back({"va", viterbi(in, spec.estimator_window)});
    rows.push_back({"sova", sova(in, spec.estimator_window)});
    rows.push_back({"bcjr", bcjr(in, spec.estimator_window)});

    for (const auto& row : rows) {
        std::size_t wrong = 0;
        for (std::size_t k = 0; k < slots; ++k) wrong += row.post.hard[k] != truth[k];
        std::printf("%-5s state-error rate: %.5f (%zu / %zu slots)\n", row.name,
                    static_cast<double>(wrong) / static_cast<double>(slots), wrong, slots);
        if (!prefix.empty())
            write_output(prefix + row.name + ".csv", states_csv(truth, row.post));
    }
    if (!prefix.empty()) {
        write_output(prefix + "trace.csv", trace_csv(real));
        std::printf("wrote %s{va,sova,bcjr,trace}.csv\n", prefix.c_str());
    }
    return 0;
}

int cmd_scatter(int order, double snr_db, double sigma2_b, std::size_t symbols,
                const std::string& prefix, std::uint64_t seed) {
    GeChannelParams p;
    p.sigma2_g = 3e-4;
    p.sigma2_b = sigma2_b;
    p.p_gb = 2e-4;
    p.p_bg = 2e-2;
    p.sigma2_awgn = db_to_linear(-snr_db);

    const auto c = build_qam(order);
    Rng rng(seed);
    std::vector<cplx> x(symbols);
    for (auto& v : x) v = c.points[rng.index(c.points.size())];
    const auto s = diff_encode(x);
    const auto real = sample_phase(sample_states(s.size(), p, rng), p, rng);
    const auto r = apply_channel(s, real, p, rng);
    const auto y = diff_decode(r);

    write_output(prefix + "source.csv", scatter_csv(x));
    write_output(prefix + "encoded.csv", scatter_csv(s));
    write_output(prefix + "received.csv", scatter_csv(r));
    write_output(prefix + "decoded.csv", scatter_csv(y.symbols));
    write_output(prefix + "trace.csv", trace_csv(real));
    std::printf("wrote %s{source,encoded,received,decoded,trace}.csv (%zu symbols)\n",
                prefix.c_str(), symbols);
    return 0;
}

int cmd_ldpc_check(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open '" << path << "'\n";
        return 2;
    }
    const auto h = load_alist(in);
    std::size_t min_row = h.n, max_row = 0, min_col = h.m, max_col = 0;
    for (const auto& row : h.rows) {
        min_row = std::min(min_row, row.size());
        max_row = std::max(max_row, row.size());
    }
    for (const auto& col : h.cols) {
        min_col = std::min(min_col, col.size());
        max_col = std::max(max_col, col.size());
    }
    std::printf("n=%d checks=%d k=%d rate=%.4f edges=%zu row-degree=[%zu,%zu] col-degree=[%zu,%zu]\n",
                h.n, h.m, h.k, static_cast<double>(h.k) / h.n, h.edge_count(), min_row, max_row,
                min_col, max_col);
    if (h.k != h.n - h.m) {
        std::printf("warning: H is rank deficient (rank %d of %d rows); encoder will reject it\n",
                    h.n - h.k, h.m);
        return 1;
    }
    const LdpcEncoder enc(h);
    Rng rng(1);
    std::vector<std::uint8_t> info(h.k);
    for (auto& b : info) b = rng.bit();
    const auto cw = enc.encode(info);
    std::vector<double> llr(h.n);
    for (int j = 0; j < h.n; ++j) llr[j] = cw[j] ? -8.0 : 8.0;
    const auto dec = decode_bp(llr, h);
    std::printf("encode/decode smoke test: %s\n",
                dec.syndrome_satisfied && enc.extract_info(dec.hard) == info ? "ok" : "FAILED");
    return dec.syndrome_satisfied ? 0 : 1;
}

int cmd_make_code(int n, int wc, int wr, std::uint64_t seed, const std::string& out) {
    const auto h = make_regular_ldpc(n, wc, wr, seed);
    write_output(out, write_alist(h));
    std::fprintf(stderr, "generated (%d,%d)-regular code: n=%d k=%d\n", wc, wr, h.n, h.k);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"burst-aware LDPC decoding over bursty differential phase noise"};
    app.require_subcommand(1);

    std::string config, out, prefix = "scatter_";
    std::vector<std::string> overrides;
    int workers = 0;
    std::int64_t seed = -1;

    auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo sweep from a config file");
    sweep->add_option("config", config, "sweep config file")->required();
    sweep->add_option("--out", out, "output CSV path (default stdout)");
    sweep->add_option("--workers", workers, "worker threads (default: BURSTRX_WORKERS or cores)");
    sweep->add_option("--seed", seed, "override master seed");
    sweep->add_option("--set", overrides, "override config keys, section.key=value");

    std::size_t slots = 100000;
    auto* estimate = app.add_subcommand("estimate", "channel-estimation trace dump");
    estimate->add_option("config", config, "config file (channel/modulation/decoding sections)")
        ->required();
    estimate->add_option("--slots", slots, "number of symbol slots");
    estimate->add_option("--out", prefix, "output file prefix");
    estimate->add_option("--set", overrides, "override config keys, section.key=value");

    int order = 16;
    double snr_db = 20.0, sigma2_b = 0.12;
    std::size_t symbols = 10000;
    std::uint64_t scatter_seed = 1;
    auto* scatter = app.add_subcommand("demo-scatter", "dump constellation scatter CSVs");
    scatter->add_option("--order", order, "modulation order (4, 16, 64)");
    scatter->add_option("--snr", snr_db, "SNR in dB");
    scatter->add_option("--sigma2-b", sigma2_b, "bad-state innovation variance");
    scatter->add_option("--symbols", symbols, "number of symbols");
    scatter->add_option("--out", prefix, "output file prefix");
    scatter->add_option("--seed", scatter_seed, "seed");

    std::string alist;
    auto* check = app.add_subcommand("ldpc-check", "validate an alist parity-check file");
    check->add_option("alist", alist, "alist file")->required();

    int gen_n = 1944, gen_wc = 3, gen_wr = 6;
    std::uint64_t gen_seed = 0xb1947ULL;
    auto* makecode = app.add_subcommand("make-code", "generate a regular LDPC code (alist)");
    makecode->add_option("--n", gen_n, "code length");
    makecode->add_option("--col-weight", gen_wc, "variable degree");
    makecode->add_option("--row-weight", gen_wr, "check degree");
    makecode->add_option("--seed", gen_seed, "construction seed");
    makecode->add_option("--out", out, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) return cmd_sweep(config, overrides, out, workers, seed);
        if (estimate->parsed()) {
            if (prefix == "scatter_") prefix = "";
            return cmd_estimate(config, overrides, slots, prefix);
        }
        if (scatter->parsed()) return cmd_scatter(order, snr_db, sigma2_b, symbols, prefix, scatter_seed);
        if (check->parsed()) return cmd_ldpc_check(alist);
        if (makecode->parsed()) return cmd_make_code(gen_n, gen_wc, gen_wr, gen_seed, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
