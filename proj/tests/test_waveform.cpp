#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "jcas/channel.hpp"
#include "jcas/waveform.hpp"

using namespace jcas;

namespace {

OfdmNumerology small_numerology(int n_c = 16, int m_s = 8) {
    OfdmNumerology num;
    num.subcarrier_count = n_c;
    num.symbol_count = m_s;
    return num;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("numerology derived quantities") {
    OfdmNumerology num;
    num.subcarrier_spacing = 480e3;
    num.guard_fraction = 0.125;
    num.carrier_frequency = 63e9;
    num.subcarrier_count = 256;
    CHECK(num.symbol_duration() == doctest::Approx(2.34375e-6).epsilon(1e-12));
    CHECK(num.wavelength() == doctest::Approx(4.75861e-3).epsilon(1e-5));
    CHECK(num.bandwidth() == doctest::Approx(122.88e6).epsilon(1e-12));
}

TEST_CASE("preamble is unit modulus and seed-reproducible") {
    const OfdmNumerology num = small_numerology(32, 16);
    const SymbolGrid g1 = generate_preamble(num, 42);
    const SymbolGrid g2 = generate_preamble(num, 42);
    const SymbolGrid g3 = generate_preamble(num, 43);
    int differing = 0;
    for (int m = 0; m < num.symbol_count; ++m) {
        for (int n = 0; n < num.subcarrier_count; ++n) {
            CHECK(std::abs(std::abs(g1.values(n, m)) - 1.0) < 1e-14);
            CHECK(g1.values(n, m) == g2.values(n, m));
            if (g1.values(n, m) != g3.values(n, m)) ++differing;
        }
    }
    // Neighboring seeds give essentially unrelated grids.
    CHECK(differing > 0.9 * 0.75 * num.grid_size());
}

TEST_CASE("constellations have unit average energy and Gray labels") {
    for (int order : {4, 16, 64}) {
        const QamConstellation c(order);
        double energy = 0.0;
        for (const Complex& p : c.points()) energy += std::norm(p);
        CHECK(energy / order == doctest::Approx(1.0).epsilon(1e-12));
        // Gray property along each axis: adjacent levels differ in one bit.
        for (unsigned idx = 0; idx + 1 < static_cast<unsigned>(order); ++idx) {
            (void)idx;
        }
        CHECK(c.bits_per_symbol() == static_cast<int>(std::round(std::log2(order))));
    }
    CHECK_THROWS_AS(QamConstellation(8), std::invalid_argument);
}

TEST_CASE("4-QAM all-zero label maps to the positive corner") {
    const QamConstellation c(4);
    CHECK(std::abs(c.point(0) - Complex(1.0, 1.0) / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("all-zero bitstream gives a constant grid") {
    const OfdmNumerology num = small_numerology();
    const QamConstellation c(16);
    const std::vector<std::uint8_t> bits(num.grid_size() * 4, 0);
    const SymbolGrid grid = modulate_data(bits, c, num);
    for (int m = 0; m < num.symbol_count; ++m) {
        for (int n = 0; n < num.subcarrier_count; ++n) {
            CHECK(grid.values(n, m) == c.point(0));
        }
    }
    std::vector<std::uint8_t> short_bits(3, 0);
    CHECK_THROWS_AS(modulate_data(short_bits, c, num), std::invalid_argument);
}

TEST_CASE("noiseless loopback is exact for every order") {
    std::mt19937_64 rng(7);
    for (int order : {4, 16, 64}) {
        const QamConstellation c(order);
        OfdmNumerology num = small_numerology(25, 20);  // 10^4 bits at 16-QAM scale
        const std::size_t nbits =
            static_cast<std::size_t>(num.grid_size()) * c.bits_per_symbol();
        const std::vector<std::uint8_t> bits = random_bits(nbits, rng);
        const SymbolGrid tx = modulate_data(bits, c, num);
        const Eigen::MatrixXcd csi = Eigen::MatrixXcd::Constant(
            num.subcarrier_count, num.symbol_count, Complex(0.8, -0.4));
        const double power = 2.5;
        const Eigen::MatrixXcd rx = std::sqrt(power) * tx.values.cwiseProduct(csi);
        const DemodResult out = demodulate_data(rx, csi, power, c);
        CHECK(out.erasures == 0);
        CHECK(count_bit_errors(bits, out.bits) == 0);
    }
}

TEST_CASE("empirical constellation energy over random payloads") {
    std::mt19937_64 rng(123);
    const QamConstellation c(16);
    OfdmNumerology num = small_numerology(64, 64);
    double acc = 0.0;
    long count = 0;
    for (int rep = 0; rep < 256; ++rep) {  // ~10^6 symbols
        const std::vector<std::uint8_t> bits =
            random_bits(static_cast<std::size_t>(num.grid_size()) * 4, rng);
        const SymbolGrid tx = modulate_data(bits, c, num);
        acc += tx.values.squaredNorm();
        count += num.grid_size();
    }
    CHECK(acc / count == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("QPSK BER over AWGN matches the Q-function") {
    // Scalar channel h = 1, Es/N0 = 10 dB: expected BER = Q(sqrt(10)).
    std::mt19937_64 rng(2024);
    const QamConstellation c(4);
    OfdmNumerology num = small_numerology(100, 100);
    const double es_n0 = 10.0;
    const double power = 1.0;
    const double noise_var = power / es_n0;
    long errors = 0, bits_total = 0;
    const Eigen::MatrixXcd csi =
        Eigen::MatrixXcd::Ones(num.subcarrier_count, num.symbol_count);
    for (int rep = 0; rep < 100; ++rep) {  // 10^6 symbols, 2x10^6 bits
        const std::vector<std::uint8_t> bits =
            random_bits(static_cast<std::size_t>(num.grid_size()) * 2, rng);
        const SymbolGrid tx = modulate_data(bits, c, num);
        const Eigen::MatrixXcd rx =
            tx.values + draw_noise(num.subcarrier_count, num.symbol_count, noise_var, rng);
        const DemodResult out = demodulate_data(rx, csi, power, c);
        errors += count_bit_errors(bits, out.bits);
        bits_total += static_cast<long>(bits.size());
    }
    const double ber = static_cast<double>(errors) / bits_total;
    const double expected = q_function(std::sqrt(es_n0));
    CHECK(expected == doctest::Approx(7.83e-4).epsilon(0.01));
    CHECK(ber > expected / 3.0);
    CHECK(ber < expected * 3.0);
}

TEST_CASE("zero CSI entries are erased") {
    const QamConstellation c(4);
    OfdmNumerology num = small_numerology(2, 2);
    const std::vector<std::uint8_t> bits(8, 0);
    const SymbolGrid tx = modulate_data(bits, c, num);
    Eigen::MatrixXcd csi = Eigen::MatrixXcd::Ones(2, 2);
    csi(1, 1) = Complex(0.0, 0.0);
    const DemodResult out = demodulate_data(tx.values, csi, 1.0, c);
    CHECK(out.erasures == 1);
}
