#include "superpose/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "superpose/errors.hpp"
#include "superpose/rng.hpp"

namespace superpose {

namespace {

using Words = std::vector<std::uint64_t>;

inline bool get_bit(const Words& w, std::size_t i) { return (w[i >> 6] >> (i & 63)) & 1U; }
inline void set_bit(Words& w, std::size_t i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }

}  // namespace

LdpcCode::LdpcCode(int n, std::vector<std::vector<int>> checks) : n_(n), checks_(std::move(checks)) {
    if (n_ < 1) throw ConfigError("ldpc.n", "must be >= 1");
    vars_.assign(static_cast<std::size_t>(n_), {});
    for (std::size_t i = 0; i < checks_.size(); ++i) {
        auto& row = checks_[i];
        std::sort(row.begin(), row.end());
        if (std::adjacent_find(row.begin(), row.end()) != row.end())
            throw ConfigError("ldpc.checks[" + std::to_string(i) + "]", "repeated variable index");
        for (int v : row) {
            if (v < 0 || v >= n_) throw ConfigError("ldpc.checks[" + std::to_string(i) + "]", "variable index out of range");
            vars_[static_cast<std::size_t>(v)].push_back(static_cast<int>(i));
        }
    }
    build_encoder();
}

void LdpcCode::build_encoder() {
    const std::size_t m = checks_.size();
    const std::size_t n = static_cast<std::size_t>(n_);
    const std::size_t words = (n + 63) / 64;
    std::vector<Words> rows(m, Words(words, 0));
    for (std::size_t i = 0; i < m; ++i) {
        for (int v : checks_[i]) set_bit(rows[i], static_cast<std::size_t>(v));
    }
    // Reduced row-echelon form over GF(2).
    std::vector<int> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        std::size_t p = r;
        while (p < m && !get_bit(rows[p], c)) ++p;
        if (p == m) continue;
        std::swap(rows[p], rows[r]);
        const std::size_t w0 = c >> 6;
        for (std::size_t i = 0; i < m; ++i) {
            if (i != r && get_bit(rows[i], c)) {
                for (std::size_t w = w0; w < words; ++w) rows[i][w] ^= rows[r][w];
            }
        }
        pivots.push_back(static_cast<int>(c));
        ++r;
    }
    rows.resize(r);
    parity_positions_ = pivots;
    std::vector<char> is_pivot(n, 0);
    for (int c : pivots) is_pivot[static_cast<std::size_t>(c)] = 1;
    info_positions_.clear();
    for (std::size_t c = 0; c < n; ++c) {
        if (!is_pivot[c]) info_positions_.push_back(static_cast<int>(c));
    }
    const std::size_t k = info_positions_.size();
    const std::size_t kw = (k + 63) / 64;
    parity_rows_.assign(r, Words(kw, 0));
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            if (get_bit(rows[i], static_cast<std::size_t>(info_positions_[f]))) set_bit(parity_rows_[i], f);
        }
    }
}

std::vector<std::uint8_t> LdpcCode::encode(std::span<const std::uint8_t> info) const {
    const std::size_t k = info_positions_.size();
    if (info.size() != k) throw ConfigError("info", "expected " + std::to_string(k) + " bits");
    Words packed((k + 63) / 64, 0);
    std::vector<std::uint8_t> word(static_cast<std::size_t>(n_), 0);
    for (std::size_t f = 0; f < k; ++f) {
        if (info[f] > 1) throw ConfigError("info", "bits must be 0 or 1");
        if (info[f]) {
            set_bit(packed, f);
            word[static_cast<std::size_t>(info_positions_[f])] = 1;
        }
    }
    for (std::size_t i = 0; i < parity_rows_.size(); ++i) {
        int ones = 0;
        for (std::size_t w = 0; w < packed.size(); ++w) ones += std::popcount(parity_rows_[i][w] & packed[w]);
        word[static_cast<std::size_t>(parity_positions_[i])] = static_cast<std::uint8_t>(ones & 1);
    }
    return word;
}

std::vector<std::uint8_t> LdpcCode::extract_info(std::span<const std::uint8_t> codeword) const {
    if (codeword.size() != static_cast<std::size_t>(n_)) throw ConfigError("codeword", "length must equal n");
    std::vector<std::uint8_t> info(info_positions_.size());
    for (std::size_t f = 0; f < info.size(); ++f) info[f] = codeword[static_cast<std::size_t>(info_positions_[f])];
    return info;
}

int LdpcCode::unsatisfied_checks(std::span<const std::uint8_t> word) const {
    if (word.size() != static_cast<std::size_t>(n_)) throw ConfigError("codeword", "length must equal n");
    int bad = 0;
    for (const auto& row : checks_) {
        int x = 0;
        for (int v : row) x ^= word[static_cast<std::size_t>(v)] & 1;
        bad += x;
    }
    return bad;
}

LdpcCode LdpcCode::quasi_cyclic(int base_rows, int base_cols, int lift, int col_weight, std::uint64_t seed) {
    if (base_rows < 1 || base_cols < 1 || lift < 1 || col_weight < 1 || col_weight > base_rows)
        throw ConfigError("ldpc.qc", "invalid base matrix dimensions");
    const int n = base_cols * lift;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Rng rng(Rng::mix(seed + static_cast<std::uint64_t>(attempt)));
        // Base matrix: each column takes the col_weight lightest rows,
        // ties broken at random, which balances the row weights.
        std::vector<std::vector<int>> shift(static_cast<std::size_t>(base_rows),
                                            std::vector<int>(static_cast<std::size_t>(base_cols), -1));
        std::vector<int> row_weight(static_cast<std::size_t>(base_rows), 0);
        for (int c = 0; c < base_cols; ++c) {
            std::vector<std::pair<double, int>> order;
            for (int r = 0; r < base_rows; ++r) order.emplace_back(row_weight[static_cast<std::size_t>(r)] + rng.uniform() * 0.5, r);
            std::sort(order.begin(), order.end());
            std::vector<int> rows;
            for (int i = 0; i < col_weight; ++i) rows.push_back(order[static_cast<std::size_t>(i)].second);
            // Shifts without 4-cycles against the columns placed so far.
            bool placed = false;
            for (int tries = 0; tries < 2000 && !placed; ++tries) {
                for (int r : rows) shift[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                    static_cast<int>(rng.uniform() * lift);
                placed = true;
                for (std::size_t a = 0; a < rows.size() && placed; ++a) {
                    for (std::size_t b = a + 1; b < rows.size() && placed; ++b) {
                        const auto& ra = shift[static_cast<std::size_t>(rows[a])];
                        const auto& rb = shift[static_cast<std::size_t>(rows[b])];
                        for (int c2 = 0; c2 <= c && placed; ++c2) {
                            if (ra[static_cast<std::size_t>(c2)] < 0 || rb[static_cast<std::size_t>(c2)] < 0) continue;
                            if (c2 == c) continue;
                            const int d = ra[static_cast<std::size_t>(c)] - rb[static_cast<std::size_t>(c)] -
                                          ra[static_cast<std::size_t>(c2)] + rb[static_cast<std::size_t>(c2)];
                            if (((d % lift) + lift) % lift == 0) placed = false;
                        }
                    }
                }
            }
            if (!placed) {
                for (int r : rows) shift[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = -1;
                break;
            }
            for (int r : rows) ++row_weight[static_cast<std::size_t>(r)];
        }
        bool complete = true;
        for (int c = 0; c < base_cols && complete; ++c) {
            int w = 0;
            for (int r = 0; r < base_rows; ++r) w += shift[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] >= 0;
            complete = w == col_weight;
        }
        if (!complete) continue;

        std::vector<std::vector<int>> checks(static_cast<std::size_t>(base_rows * lift));
        for (int r = 0; r < base_rows; ++r) {
            for (int c = 0; c < base_cols; ++c) {
                const int s = shift[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
                if (s < 0) continue;
                for (int i = 0; i < lift; ++i)
                    checks[static_cast<std::size_t>(r * lift + i)].push_back(c * lift + (i + s) % lift);
            }
        }
        LdpcCode code(n, std::move(checks));
        if (code.rank() == base_rows * lift) return code;
    }
    throw BudgetError("no full-rank quasi-cyclic code found for the requested parameters");
}

LdpcCode LdpcCode::desk_default() { return quasi_cyclic(8, 16, 64, 3, 20240611); }

LdpcCode LdpcCode::read_alist(std::istream& in) {
    std::vector<std::vector<long>> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<long> v;
        long x;
        while (ls >> x) v.push_back(x);
        if (!ls.eof()) throw ConfigError("alist", "non-numeric token");
        if (!v.empty()) lines.push_back(std::move(v));
    }
    if (lines.size() < 4 || lines[0].size() < 2) throw ConfigError("alist", "truncated header");
    const long n = lines[0][0];
    const long m = lines[0][1];
    if (n < 1 || m < 0) throw ConfigError("alist", "bad dimensions");
    const std::size_t need = 4 + static_cast<std::size_t>(n) + static_cast<std::size_t>(m);
    if (lines.size() < need) throw ConfigError("alist", "expected " + std::to_string(need) + " non-empty lines");
    // The column lists (lines 4..4+n) are redundant; rows define the code,
    // and the two must agree.
    std::vector<std::vector<int>> checks(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) {
        for (long v : lines[4 + static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]) {
            if (v == 0) continue;  // padding
            if (v < 1 || v > n) throw ConfigError("alist", "variable index out of range in row " + std::to_string(i + 1));
            checks[static_cast<std::size_t>(i)].push_back(static_cast<int>(v - 1));
        }
    }
    LdpcCode code(static_cast<int>(n), std::move(checks));
    for (long j = 0; j < n; ++j) {
        std::vector<int> col;
        for (long c : lines[4 + static_cast<std::size_t>(j)]) {
            if (c == 0) continue;
            if (c < 1 || c > m) throw ConfigError("alist", "check index out of range in column " + std::to_string(j + 1));
            col.push_back(static_cast<int>(c - 1));
        }
        std::sort(col.begin(), col.end());
        if (col != code.vars_[static_cast<std::size_t>(j)])
            throw ConfigError("alist", "column " + std::to_string(j + 1) + " disagrees with the row lists");
    }
    return code;
}

LdpcCode LdpcCode::load_alist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("code", "cannot open " + path);
    return read_alist(in);
}

void LdpcCode::write_alist(std::ostream& out) const {
    std::size_t max_col = 0, max_row = 0;
    for (const auto& v : vars_) max_col = std::max(max_col, v.size());
    for (const auto& c : checks_) max_row = std::max(max_row, c.size());
    out << n_ << ' ' << checks_.size() << '\n' << max_col << ' ' << max_row << '\n';
    for (std::size_t j = 0; j < vars_.size(); ++j) out << (j ? " " : "") << vars_[j].size();
    out << '\n';
    for (std::size_t i = 0; i < checks_.size(); ++i) out << (i ? " " : "") << checks_[i].size();
    out << '\n';
    auto write_list = [&](const std::vector<int>& list, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i) out << (i ? " " : "") << (i < list.size() ? list[i] + 1 : 0);
        out << '\n';
    };
    for (const auto& v : vars_) write_list(v, max_col);
    for (const auto& c : checks_) write_list(c, max_row);
}

void LdpcCode::save_alist(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("code", "cannot write " + path);
    write_alist(out);
}

LdpcDecodeResult ldpc_decode(const LdpcCode& code, std::span<const double> channel_llr, int max_iters, double scale) {
    const auto n = static_cast<std::size_t>(code.n());
    if (channel_llr.size() != n) throw ConfigError("llr", "length must equal the code length");
    if (max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
    // Internally L = log P(0) / P(1), so positive favours bit 0.
    std::vector<double> prior(n);
    for (std::size_t v = 0; v < n; ++v) {
        if (!std::isfinite(channel_llr[v])) throw ConfigError("llr", "values must be finite");
        prior[v] = -channel_llr[v];
    }
    const auto& checks = code.checks();
    // Edge storage in check order.
    std::vector<std::size_t> offset(checks.size() + 1, 0);
    for (std::size_t i = 0; i < checks.size(); ++i) offset[i + 1] = offset[i] + checks[i].size();
    std::vector<double> c2v(offset.back(), 0.0);
    std::vector<double> total(prior);
    LdpcDecodeResult res;
    res.bits.assign(n, 0);

    for (int it = 1; it <= max_iters; ++it) {
        for (std::size_t i = 0; i < checks.size(); ++i) {
            const auto& row = checks[i];
            double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
            std::size_t arg = 0;
            int sign = 1;
            for (std::size_t e = 0; e < row.size(); ++e) {
                const double q = total[static_cast<std::size_t>(row[e])] - c2v[offset[i] + e];
                const double a = std::abs(q);
                if (q < 0) sign = -sign;
                if (a < min1) {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if (a < min2) {
                    min2 = a;
                }
            }
            for (std::size_t e = 0; e < row.size(); ++e) {
                const double q = total[static_cast<std::size_t>(row[e])] - c2v[offset[i] + e];
                const int s = q < 0 ? -sign : sign;
                c2v[offset[i] + e] = s * scale * (e == arg ? min2 : min1);
            }
        }
        std::copy(prior.begin(), prior.end(), total.begin());
        for (std::size_t i = 0; i < checks.size(); ++i) {
            for (std::size_t e = 0; e < checks[i].size(); ++e) total[static_cast<std::size_t>(checks[i][e])] += c2v[offset[i] + e];
        }
        for (std::size_t v = 0; v < n; ++v) res.bits[v] = total[v] < 0.0 ? 1 : 0;
        res.iterations = it;
        res.unsatisfied_checks = code.unsatisfied_checks(res.bits);
        if (res.unsatisfied_checks == 0) {
            res.converged = true;
            break;
        }
    }
    res.posterior_llr.resize(n);
    for (std::size_t v = 0; v < n; ++v) res.posterior_llr[v] = -total[v];
    return res;
}

}  // namespace superpose
