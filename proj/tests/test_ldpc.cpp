#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "superpose/errors.hpp"
#include "superpose/ldpc.hpp"
#include "superpose/rng.hpp"

using namespace superpose;

namespace {

LdpcCode hamming74() { return LdpcCode(7, {{0, 1, 2, 4}, {0, 1, 3, 5}, {0, 2, 3, 6}}); }

std::vector<std::uint8_t> random_bits(Rng& rng, int n) {
    std::vector<std::uint8_t> u(static_cast<std::size_t>(n));
    for (auto& b : u) b = rng.bernoulli(0.5) ? 1 : 0;
    return u;
}

}  // namespace

TEST_CASE("Hamming code encoder") {
    const auto code = hamming74();
    CHECK(code.n() == 7);
    CHECK(code.k() == 4);
    std::set<std::vector<std::uint8_t>> words;
    for (unsigned m = 0; m < 16; ++m) {
        std::vector<std::uint8_t> u{static_cast<std::uint8_t>(m & 1), static_cast<std::uint8_t>((m >> 1) & 1),
                                    static_cast<std::uint8_t>((m >> 2) & 1), static_cast<std::uint8_t>((m >> 3) & 1)};
        const auto c = code.encode(u);
        CHECK(code.is_codeword(c));
        CHECK(code.extract_info(c) == u);
        words.insert(c);
    }
    CHECK(words.size() == 16);
    std::vector<std::uint8_t> w(7, 0);
    w[0] = 1;
    CHECK(code.unsatisfied_checks(w) == 3);
    CHECK_THROWS_AS(code.encode(std::vector<std::uint8_t>(3, 0)), ConfigError);
}

TEST_CASE("redundant checks reduce the rank only") {
    const LdpcCode code(7, {{0, 1, 2, 4}, {0, 1, 3, 5}, {0, 2, 3, 6}, {2, 3, 4, 5}});  // row 4 = row 1 + row 2
    CHECK(code.num_checks() == 4);
    CHECK(code.rank() == 3);
    CHECK(code.k() == 4);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) CHECK(code.is_codeword(code.encode(random_bits(rng, 4))));
}

TEST_CASE("shipped quasi-cyclic code") {
    const auto code = LdpcCode::desk_default();
    CHECK(code.n() == 1024);
    CHECK(code.k() == 512);
    CHECK(code.num_checks() == 512);
    for (const auto& v : code.variables()) CHECK(v.size() == 3);
    for (const auto& c : code.checks()) CHECK(c.size() == 6);
    // No two columns share more than one check (no length-4 cycles).
    std::set<std::pair<int, int>> pairs;
    bool clean = true;
    for (const auto& c : code.checks()) {
        for (std::size_t a = 0; a < c.size(); ++a) {
            for (std::size_t b = a + 1; b < c.size(); ++b) {
                clean = clean && pairs.insert({std::min(c[a], c[b]), std::max(c[a], c[b])}).second;
            }
        }
    }
    CHECK(clean);
    Rng rng(2);
    for (int i = 0; i < 5; ++i) {
        const auto u = random_bits(rng, code.k());
        const auto w = code.encode(u);
        CHECK(code.is_codeword(w));
        CHECK(code.extract_info(w) == u);
    }
}

TEST_CASE("alist round trip") {
    const auto code = LdpcCode::quasi_cyclic(4, 8, 16, 3, 7);
    std::stringstream ss;
    code.write_alist(ss);
    const auto back = LdpcCode::read_alist(ss);
    CHECK(back.n() == code.n());
    CHECK(back.checks() == code.checks());
    CHECK(back.info_positions() == code.info_positions());

    std::stringstream bad("7 3\n4 3\n");
    CHECK_THROWS_AS(LdpcCode::read_alist(bad), ConfigError);
    // Column lists that contradict the row lists are rejected.
    std::stringstream wrong("3 1\n1 3\n1 1 1\n3\n1\n1\n2\n1 2 3\n");
    CHECK_THROWS_AS(LdpcCode::read_alist(wrong), ConfigError);
}

TEST_CASE("shipped alist file matches the generator") {
    const auto file = LdpcCode::load_alist(SUPERPOSE_DATA_DIR "/qc_1024_512.alist");
    CHECK(file.checks() == LdpcCode::desk_default().checks());
}

TEST_CASE("min-sum decoding") {
    const auto code = LdpcCode::desk_default();
    Rng rng(3);
    const auto u = random_bits(rng, code.k());
    const auto w = code.encode(u);

    // Clean input: converges after one iteration.
    std::vector<double> llr(static_cast<std::size_t>(code.n()));
    for (std::size_t i = 0; i < llr.size(); ++i) llr[i] = w[i] ? 5.0 : -5.0;
    auto r = ldpc_decode(code, llr);
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.bits == w);
    for (std::size_t i = 0; i < llr.size(); ++i) CHECK((r.posterior_llr[i] > 0) == (w[i] == 1));

    // BPSK over Gaussian noise at Eb/N0 near 3 dB.
    const double sigma = 0.7;
    int failures = 0;
    for (int trial = 0; trial < 10; ++trial) {
        std::mt19937_64 engine(static_cast<std::uint64_t>(50 + trial));
        std::normal_distribution<double> noise(0.0, sigma);
        for (std::size_t i = 0; i < llr.size(); ++i) {
            const double x = w[i] ? 1.0 : -1.0;
            const double y = x + noise(engine);
            llr[i] = 2.0 * y / (sigma * sigma);
        }
        r = ldpc_decode(code, llr, 50);
        failures += r.bits != w;
        if (r.converged) CHECK(code.is_codeword(r.bits));
    }
    CHECK(failures <= 1);

    // A lone flipped bit is corrected.
    for (std::size_t i = 0; i < llr.size(); ++i) llr[i] = w[i] ? 2.0 : -2.0;
    llr[17] = -llr[17];
    r = ldpc_decode(code, llr);
    CHECK(r.bits == w);
    CHECK(r.unsatisfied_checks == 0);

    CHECK_THROWS_AS(ldpc_decode(code, std::vector<double>(3, 0.0)), ConfigError);
    CHECK_THROWS_AS(ldpc_decode(code, llr, 0), ConfigError);
}
