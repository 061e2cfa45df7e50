#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace superpose {

/// Binary LDPC code given by a sparse parity-check matrix, with a
/// systematic encoder derived from its reduced row-echelon form.
class LdpcCode {
public:
    /// checks[i] lists the (0-based) variable nodes of check i.
    LdpcCode(int n, std::vector<std::vector<int>> checks);

    /// Quasi-cyclic code built from a base_rows x base_cols base matrix of
    /// circulant permutations of size `lift`, column weight `col_weight`,
    /// without length-4 cycles. Retries seeds until the matrix has full rank.
    static LdpcCode quasi_cyclic(int base_rows, int base_cols, int lift, int col_weight, std::uint64_t seed);
    /// The (1024, 512) code shipped with the repository.
    static LdpcCode desk_default();

    static LdpcCode read_alist(std::istream& in);
    static LdpcCode load_alist(const std::string& path);
    void write_alist(std::ostream& out) const;
    void save_alist(const std::string& path) const;

    int n() const noexcept { return n_; }
    int k() const noexcept { return static_cast<int>(info_positions_.size()); }
    int num_checks() const noexcept { return static_cast<int>(checks_.size()); }
    int rank() const noexcept { return n_ - k(); }
    const std::vector<std::vector<int>>& checks() const noexcept { return checks_; }
    const std::vector<std::vector<int>>& variables() const noexcept { return vars_; }
    /// Codeword positions that carry the information bits, in order.
    const std::vector<int>& info_positions() const noexcept { return info_positions_; }

    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const;
    std::vector<std::uint8_t> extract_info(std::span<const std::uint8_t> codeword) const;
    int unsatisfied_checks(std::span<const std::uint8_t> word) const;
    bool is_codeword(std::span<const std::uint8_t> word) const { return unsatisfied_checks(word) == 0; }

private:
    void build_encoder();

    int n_;
    std::vector<std::vector<int>> checks_;
    std::vector<std::vector<int>> vars_;
    std::vector<int> info_positions_;
    std::vector<int> parity_positions_;               // pivot column per reduced row
    std::vector<std::vector<std::uint64_t>> parity_rows_;  // reduced rows restricted to info bits, packed
};

struct LdpcDecodeResult {
    std::vector<std::uint8_t> bits;
    bool converged = false;
    int iterations = 0;
    int unsatisfied_checks = 0;
    std::vector<double> posterior_llr;  // log P(1) / P(0)
};

/// Normalized min-sum with a flooding schedule; stops as soon as every
/// parity check is satisfied (after at least one iteration). LLRs use the
/// log P(1) / P(0) convention on input and output.
LdpcDecodeResult ldpc_decode(const LdpcCode& code, std::span<const double> channel_llr, int max_iters = 25,
                             double scale = 0.75);

}  // namespace superpose
