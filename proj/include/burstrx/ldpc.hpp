#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "burstrx/common.hpp"

namespace burstrx {

/// Sparse binary parity-check matrix, kept as matching row and column
/// adjacency lists. k = n - rank(H) is computed at construction.
struct ParityCheckMatrix {
    int n = 0;  // code length (columns)
    int m = 0;  // checks (rows)
    int k = 0;  // information length
    std::vector<std::vector<int>> rows;  // check -> sorted bit indices
    std::vector<std::vector<int>> cols;  // bit -> sorted check indices

    std::size_t edge_count() const {
        std::size_t e = 0;
        for (const auto& r : rows) e += r.size();
        return e;
    }
};

namespace gf2 {

// Dense bit rows for GF(2) elimination.
using BitRow = std::vector<std::uint64_t>;

inline BitRow make_row(int n) { return BitRow((n + 63) / 64, 0); }
inline void set_bit(BitRow& r, int j) { r[j >> 6] |= 1ULL << (j & 63); }
inline bool get_bit(const BitRow& r, int j) { return (r[j >> 6] >> (j & 63)) & 1ULL; }
inline void xor_into(BitRow& a, const BitRow& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

inline std::vector<BitRow> dense_rows(const ParityCheckMatrix& h) {
    std::vector<BitRow> rows(h.m, make_row(h.n));
    for (int i = 0; i < h.m; ++i)
        for (int j : h.rows[i]) set_bit(rows[i], j);
    return rows;
}

inline int rank(const ParityCheckMatrix& h) {
    auto rows = dense_rows(h);
    int r = 0;
    for (int col = 0; col < h.n && r < h.m; ++col) {
        int pivot = -1;
        for (int i = r; i < h.m; ++i)
            if (get_bit(rows[i], col)) {
                pivot = i;
                break;
            }
        if (pivot < 0) continue;
        std::swap(rows[r], rows[pivot]);
        for (int i = 0; i < h.m; ++i)
            if (i != r && get_bit(rows[i], col)) xor_into(rows[i], rows[r]);
        ++r;
    }
    return r;
}

}  // namespace gf2

inline ParityCheckMatrix make_parity_check(int n, std::vector<std::vector<int>> rows) {
    ParityCheckMatrix h;
    h.n = n;
    h.m = static_cast<int>(rows.size());
    h.rows = std::move(rows);
    h.cols.assign(n, {});
    for (int i = 0; i < h.m; ++i) {
        std::sort(h.rows[i].begin(), h.rows[i].end());
        for (int j : h.rows[i]) {
            if (j < 0 || j >= n) throw std::invalid_argument("parity check: bit index out of range");
            h.cols[j].push_back(i);
        }
    }
    h.k = h.n - gf2::rank(h);
    return h;
}

namespace detail {

struct AlistTokenizer {
    std::istream& in;
    int line = 1;

    int next_int(const char* what) {
        // skip whitespace, tracking lines
        int ch;
        while ((ch = in.peek()) != EOF && (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n')) {
            if (ch == '\n') ++line;
            in.get();
        }
        long long v;
        if (!(in >> v))
            throw std::runtime_error("alist parse error at line " + std::to_string(line) +
                                     ": expected " + std::string(what));
        return static_cast<int>(v);
    }
};

}  // namespace detail

/// Parses the standard alist sparse-matrix text format
/// (n m / max weights / column weights / row weights / per-column 1-based
/// check indices, zero padded / per-row 1-based bit indices, zero padded).
/// Validates degree lists against connection lists and the row/column views
/// against each other.
inline ParityCheckMatrix load_alist(std::istream& in) {
    detail::AlistTokenizer tok{in};
    const int n = tok.next_int("code length");
    const int m = tok.next_int("check count");
    if (n <= 0 || m <= 0 || m >= n)
        throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                 ": need n > m > 0");
    const int max_cw = tok.next_int("max column weight");
    const int max_rw = tok.next_int("max row weight");

    std::vector<int> col_w(n), row_w(m);
    for (int j = 0; j < n; ++j) {
        col_w[j] = tok.next_int("column weight");
        if (col_w[j] < 0 || col_w[j] > max_cw)
            throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                     ": column weight out of range");
    }
    for (int i = 0; i < m; ++i) {
        row_w[i] = tok.next_int("row weight");
        if (row_w[i] < 0 || row_w[i] > max_rw)
            throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                     ": row weight out of range");
    }

    std::vector<std::set<int>> col_view(n);
    for (int j = 0; j < n; ++j) {
        for (int t = 0; t < max_cw; ++t) {
            const int v = tok.next_int("check index");
            if (t < col_w[j]) {
                if (v < 1 || v > m)
                    throw std::runtime_error("alist parse error at line " +
                                             std::to_string(tok.line) +
                                             ": check index out of range");
                col_view[j].insert(v - 1);
            } else if (v != 0) {
                throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                         ": expected zero padding");
            }
        }
        if (static_cast<int>(col_view[j].size()) != col_w[j])
            throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                     ": duplicate entries in column " + std::to_string(j));
    }

    std::vector<std::vector<int>> rows(m);
    for (int i = 0; i < m; ++i) {
        std::set<int> seen;
        for (int t = 0; t < max_rw; ++t) {
            const int v = tok.next_int("bit index");
            if (t < row_w[i]) {
                if (v < 1 || v > n)
                    throw std::runtime_error("alist parse error at line " +
                                             std::to_string(tok.line) +
                                             ": bit index out of range");
                seen.insert(v - 1);
            } else if (v != 0) {
                throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                         ": expected zero padding");
            }
        }
        if (static_cast<int>(seen.size()) != row_w[i])
            throw std::runtime_error("alist parse error at line " + std::to_string(tok.line) +
                                     ": duplicate entries in row " + std::to_string(i));
        rows[i].assign(seen.begin(), seen.end());
    }

    // cross-check: row view must be the transpose of the column view
    for (int i = 0; i < m; ++i)
        for (int j : rows[i])
            if (!col_view[j].count(i))
                throw std::runtime_error(
                    "alist inconsistency: row " + std::to_string(i) + " lists bit " +
                    std::to_string(j) + " but column view disagrees");
    std::size_t col_edges = 0;
    for (const auto& cview : col_view) col_edges += cview.size();
    std::size_t row_edges = 0;
    for (const auto& r : rows) row_edges += r.size();
    if (col_edges != row_edges)
        throw std::runtime_error("alist inconsistency: row/column edge counts differ");

    return make_parity_check(n, std::move(rows));
}

inline ParityCheckMatrix load_alist(const std::string& text) {
    std::istringstream in(text);
    return load_alist(in);
}

/// Canonical alist text: sorted indices, zero padding to the max weights.
inline std::string write_alist(const ParityCheckMatrix& h) {
    std::ostringstream out;
    int max_cw = 0, max_rw = 0;
    for (const auto& cv : h.cols) max_cw = std::max<int>(max_cw, cv.size());
    for (const auto& rv : h.rows) max_rw = std::max<int>(max_rw, rv.size());
    out << h.n << ' ' << h.m << '\n' << max_cw << ' ' << max_rw << '\n';
    for (int j = 0; j < h.n; ++j) out << h.cols[j].size() << (j + 1 < h.n ? ' ' : '\n');
    for (int i = 0; i < h.m; ++i) out << h.rows[i].size() << (i + 1 < h.m ? ' ' : '\n');
    for (int j = 0; j < h.n; ++j) {
        for (int t = 0; t < max_cw; ++t) {
            out << (t < static_cast<int>(h.cols[j].size()) ? h.cols[j][t] + 1 : 0);
            out << (t + 1 < max_cw ? ' ' : '\n');
        }
    }
    for (int i = 0; i < h.m; ++i) {
        for (int t = 0; t < max_rw; ++t) {
            out << (t < static_cast<int>(h.rows[i].size()) ? h.rows[i][t] + 1 : 0);
            out << (t + 1 < max_rw ? ' ' : '\n');
        }
    }
    return out.str();
}

/// Systematic encoder built once from H by GF(2) Gaussian elimination.
/// Information bits occupy the non-pivot columns; each pivot column is the
/// parity of its reduced row restricted to the information columns.
class LdpcEncoder {
public:
    explicit LdpcEncoder(const ParityCheckMatrix& h) : n_(h.n), m_(h.m) {
        auto rows = gf2::dense_rows(h);
        std::vector<int> pivot_of_row;
        std::vector<bool> is_pivot(n_, false);
        int r = 0;
        for (int col = 0; col < n_ && r < m_; ++col) {
            int pivot = -1;
            for (int i = r; i < m_; ++i)
                if (gf2::get_bit(rows[i], col)) {
                    pivot = i;
                    break;
                }
            if (pivot < 0) continue;
            std::swap(rows[r], rows[pivot]);
            for (int i = 0; i < m_; ++i)
                if (i != r && gf2::get_bit(rows[i], col)) gf2::xor_into(rows[i], rows[r]);
            pivot_of_row.push_back(col);
            is_pivot[col] = true;
            ++r;
        }
        if (r < m_)
            throw std::runtime_error("ldpc encode: H is rank-deficient (rank " +
                                     std::to_string(r) + " of " + std::to_string(m_) + " rows)");
        pivot_col_ = std::move(pivot_of_row);
        for (int j = 0; j < n_; ++j)
            if (!is_pivot[j]) info_pos_.push_back(j);
        k_ = static_cast<int>(info_pos_.size());

        // reduced rows restricted to the information columns
        row_info_.assign(m_, gf2::make_row(k_));
        for (int i = 0; i < m_; ++i)
            for (int t = 0; t < k_; ++t)
                if (gf2::get_bit(rows[i], info_pos_[t])) gf2::set_bit(row_info_[i], t);
    }

    int info_bits() const { return k_; }
    int code_bits() const { return n_; }
    const std::vector<int>& info_positions() const { return info_pos_; }

    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const {
        if (static_cast<int>(info.size()) != k_)
            throw std::invalid_argument("ldpc encode: expected " + std::to_string(k_) + " bits");
        gf2::BitRow u = gf2::make_row(k_);
        for (int t = 0; t < k_; ++t)
            if (info[t]) gf2::set_bit(u, t);
        std::vector<std::uint8_t> cw(n_, 0);
        for (int t = 0; t < k_; ++t) cw[info_pos_[t]] = info[t];
        for (int i = 0; i < m_; ++i) {
            std::uint64_t acc = 0;
            for (std::size_t w = 0; w < u.size(); ++w) acc ^= row_info_[i][w] & u[w];
            cw[pivot_col_[i]] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
        }
        return cw;
    }

    std::vector<std::uint8_t> extract_info(std::span<const std::uint8_t> codeword) const {
        std::vector<std::uint8_t> info(k_);
        for (int t = 0; t < k_; ++t) info[t] = codeword[info_pos_[t]];
        return info;
    }

private:
    int n_, m_, k_ = 0;
    std::vector<int> pivot_col_;
    std::vector<int> info_pos_;
    std::vector<gf2::BitRow> row_info_;
};

inline bool syndrome_ok(std::span<const std::uint8_t> hard, const ParityCheckMatrix& h) {
    for (const auto& row : h.rows) {
        int p = 0;
        for (int j : row) p ^= hard[j];
        if (p) return false;
    }
    return true;
}

struct DecodeResult {
    std::vector<double> llr_out;  // a-posteriori: channel + total extrinsic
    std::vector<std::uint8_t> hard;
    bool syndrome_satisfied = false;
    int iterations = 0;
};

struct DecodeOptions {
    int max_iters = 15;
    bool min_sum = false;
    bool early_stop = true;
};

namespace detail {

// exact pairwise box-plus in the Jacobian form; stable for large magnitudes
inline double box_plus(double a, double b) {
    const double s = std::copysign(1.0, a) * std::copysign(1.0, b);
    const double mag = std::min(std::abs(a), std::abs(b));
    return s * mag + std::log1p(std::exp(-std::abs(a + b))) -
           std::log1p(std::exp(-std::abs(a - b)));
}

inline double box_plus_min_sum(double a, double b) {
    return std::copysign(1.0, a) * std::copysign(1.0, b) * std::min(std::abs(a), std::abs(b));
}

}  // namespace detail

/// Flooding belief-propagation decoder (sum-product by default, min-sum as a
/// variant). Checks the syndrome on the raw channel decision before the first
/// iteration and after every iteration; non-convergence is reported through
/// the flag, never as an error.
inline DecodeResult decode_bp(std::span<const double> llr_in, const ParityCheckMatrix& h,
                              DecodeOptions opt = {}) {
    if (static_cast<int>(llr_in.size()) != h.n)
        throw std::invalid_argument("decode_bp: LLR length != code length");

    DecodeResult res;
    res.llr_out.assign(llr_in.begin(), llr_in.end());
    res.hard.resize(h.n);
    for (int j = 0; j < h.n; ++j) res.hard[j] = llr_in[j] < 0.0;
    res.syndrome_satisfied = syndrome_ok(res.hard, h);
    if (res.syndrome_satisfied && opt.early_stop) return res;

    // edge storage, grouped by check
    const std::size_t edges = h.edge_count();
    std::vector<int> edge_bit(edges);
    std::vector<std::size_t> check_begin(h.m + 1, 0);
    {
        std::size_t e = 0;
        for (int i = 0; i < h.m; ++i) {
            check_begin[i] = e;
            for (int j : h.rows[i]) edge_bit[e++] = j;
        }
        check_begin[h.m] = e;
    }
    std::vector<double> v2c(edges), c2v(edges, 0.0);
    std::vector<double> fwd, bwd;

    auto combine = opt.min_sum ? detail::box_plus_min_sum : detail::box_plus;
    constexpr double kMsgClamp = 80.0;

    for (std::size_t e = 0; e < edges; ++e) v2c[e] = llr_in[edge_bit[e]];

    int it = 0;
    while (it < opt.max_iters) {
        ++it;
        // check-node update via forward/backward partial combines
        for (int i = 0; i < h.m; ++i) {
            const std::size_t b = check_begin[i], e = check_begin[i + 1];
            const std::size_t d = e - b;
            if (d == 1) {
                c2v[b] = kMsgClamp;
                continue;
            }
            fwd.resize(d);
            bwd.resize(d);
            fwd[0] = v2c[b];
            bwd[d - 1] = v2c[b + d - 1];
            for (std::size_t t = 1; t < d; ++t) {
                fwd[t] = combine(fwd[t - 1], v2c[b + t]);
                bwd[d - 1 - t] = combine(bwd[d - t], v2c[b + d - 1 - t]);
            }
            c2v[b] = bwd[1];
            c2v[b + d - 1] = fwd[d - 2];
            for (std::size_t t = 1; t + 1 < d; ++t) c2v[b + t] = combine(fwd[t - 1], bwd[t + 1]);
            for (std::size_t t = 0; t < d; ++t)
                c2v[b + t] = std::clamp(c2v[b + t], -kMsgClamp, kMsgClamp);
        }

        // variable-node update and a-posteriori LLRs
        for (int j = 0; j < h.n; ++j) res.llr_out[j] = llr_in[j];
        for (std::size_t e = 0; e < edges; ++e) res.llr_out[edge_bit[e]] += c2v[e];
        for (std::size_t e = 0; e < edges; ++e) v2c[e] = res.llr_out[edge_bit[e]] - c2v[e];

        for (int j = 0; j < h.n; ++j) res.hard[j] = res.llr_out[j] < 0.0;
        res.syndrome_satisfied = syndrome_ok(res.hard, h);
        if (res.syndrome_satisfied && opt.early_stop) break;
    }
    res.iterations = it;
    return res;
}

/// Block interleaver permutation: write row-major into `rows` rows, read
/// column-major. When rows does not divide n the trailing cells of the grid
/// are unused placeholders that are skipped on read, so the result is a plain
/// permutation of n elements.
inline std::vector<int> block_interleaver_perm(int n, int rows) {
    if (rows < 1) throw std::invalid_argument("interleaver: rows must be >= 1");
    const int cols = (n + rows - 1) / rows;
    std::vector<int> perm;
    perm.reserve(n);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) {
            const int idx = r * cols + c;
            if (idx < n) perm.push_back(idx);
        }
    return perm;
}

template <typename T>
std::vector<T> interleave(std::span<const T> v, int rows) {
    const auto perm = block_interleaver_perm(static_cast<int>(v.size()), rows);
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[perm[i]];
    return out;
}

template <typename T>
std::vector<T> deinterleave(std::span<const T> v, int rows) {
    const auto perm = block_interleaver_perm(static_cast<int>(v.size()), rows);
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[perm[i]] = v[i];
    return out;
}

/// Deterministic (col_weight, row_weight)-regular Gallager-style construction:
/// random socket matching, parallel-edge repair, bounded 4-cycle reduction,
/// and a full-rank requirement (reseeding until satisfied).
inline ParityCheckMatrix make_regular_ldpc(int n, int col_weight, int row_weight,
                                           std::uint64_t seed) {
    if (n <= 0 || col_weight <= 0 || row_weight <= 0 || (n * col_weight) % row_weight != 0)
        throw std::invalid_argument("make_regular_ldpc: invalid degree profile");
    const int m = n * col_weight / row_weight;
    if (m >= n) throw std::invalid_argument("make_regular_ldpc: rate must be positive");

    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        Rng rng(derive_seed(seed, 0x1dbc, attempt));
        std::vector<int> sockets(static_cast<std::size_t>(n) * col_weight);
        for (int j = 0; j < n; ++j)
            for (int t = 0; t < col_weight; ++t) sockets[j * col_weight + t] = j;
        for (std::size_t i = sockets.size(); i > 1; --i)
            std::swap(sockets[i - 1], sockets[rng.index(i)]);

        auto row_of = [&](std::size_t s) { return static_cast<int>(s / row_weight); };
        auto has_dup = [&](int row, std::size_t skip, int bit) {
            for (int t = 0; t < row_weight; ++t) {
                const std::size_t s = static_cast<std::size_t>(row) * row_weight + t;
                if (s != skip && sockets[s] == bit) return true;
            }
            return false;
        };

        // repair parallel edges by swapping with random sockets elsewhere
        bool clean = true;
        for (int pass = 0; pass < 200; ++pass) {
            clean = true;
            for (std::size_t s = 0; s < sockets.size(); ++s) {
                if (!has_dup(row_of(s), s, sockets[s])) continue;
                clean = false;
                for (int tries = 0; tries < 200; ++tries) {
                    const std::size_t o = rng.index(sockets.size());
                    if (row_of(o) == row_of(s)) continue;
                    if (has_dup(row_of(s), s, sockets[o])) continue;
                    if (has_dup(row_of(o), o, sockets[s])) continue;
                    std::swap(sockets[s], sockets[o]);
                    break;
                }
            }
            if (clean) break;
        }
        if (!clean) continue;

        // bounded 4-cycle reduction: no two checks may share two bits
        auto pair_key = [n](int a, int b) {
            if (a > b) std::swap(a, b);
            return static_cast<std::uint64_t>(a) * n + b;
        };
        for (int pass = 0; pass < 100; ++pass) {
            std::set<std::uint64_t> seen;
            bool any = false;
            for (int i = 0; i < m; ++i) {
                for (int t1 = 0; t1 < row_weight; ++t1)
                    for (int t2 = t1 + 1; t2 < row_weight; ++t2) {
                        const std::size_t s1 = static_cast<std::size_t>(i) * row_weight + t1;
                        const std::size_t s2 = static_cast<std::size_t>(i) * row_weight + t2;
                        const auto key = pair_key(sockets[s1], sockets[s2]);
                        if (!seen.insert(key).second) {
                            // break the repeated pair by swapping s2 away
                            for (int tries = 0; tries < 200; ++tries) {
                                const std::size_t o = rng.index(sockets.size());
                                if (row_of(o) == i) continue;
                                if (has_dup(i, s2, sockets[o])) continue;
                                if (has_dup(row_of(o), o, sockets[s2])) continue;
                                std::swap(sockets[s2], sockets[o]);
                                break;
                            }
                            any = true;
                        }
                    }
            }
            if (!any) break;
        }

        std::vector<std::vector<int>> rows(m);
        for (std::size_t s = 0; s < sockets.size(); ++s) rows[row_of(s)].push_back(sockets[s]);
        bool dup = false;
        for (auto& r : rows) {
            std::sort(r.begin(), r.end());
            if (std::adjacent_find(r.begin(), r.end()) != r.end()) dup = true;
        }
        if (dup) continue;

        auto h = make_parity_check(n, std::move(rows));
        if (h.k == h.n - h.m) return h;  // full row rank
    }
    throw std::runtime_error("make_regular_ldpc: could not build a full-rank matrix");
}

}  // namespace burstrx
