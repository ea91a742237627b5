#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "jcas/channel.hpp"
#include "jcas/spectrum.hpp"

using namespace jcas;

namespace {

const UpaSpec kArray{8, 8, 4.75861e-3 / 2.0, 4.75861e-3};

// Snapshot matrix a s^T + noise for one steering vector.
ComplexMatrix snapshots_for(const ComplexVector& a, int count, double signal_power,
                            double noise_var, std::mt19937_64& rng) {
    ComplexMatrix x(a.size(), count);
    for (int c = 0; c < count; ++c) {
        const Complex s = draw_cscg(signal_power, rng);
        x.col(c) = a * s;
    }
    if (noise_var > 0.0) x += draw_noise(a.size(), count, noise_var, rng);
    return x;
}

// Exact quadratic bowl in (azimuth, elevation): Newton converges in one step.
struct QuadraticBowl {
    double az0, el0;
    double value(const Direction& p) const {
        const double da = p.azimuth - az0, de = p.elevation - el0;
        return da * da + de * de;
    }
    void derivatives(const Direction& p, double* f, Eigen::Vector2d* g,
                     Eigen::Matrix2d* h) const {
        if (f) *f = value(p);
        if (g) *g = Eigen::Vector2d(2.0 * (p.azimuth - az0), 2.0 * (p.elevation - el0));
        if (h) *h = 2.0 * Eigen::Matrix2d::Identity();
    }
};

EigDecomposition random_eig(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ComplexMatrix m = draw_noise(n, n, 1.0, rng);
    return hermitian_eig((m * m.adjoint()).eval());
}

}  // namespace

TEST_CASE("autocorrelation basics") {
    std::mt19937_64 rng(1);
    const ComplexVector v = draw_noise(4, 1, 1.0, rng);
    const ComplexMatrix r1 = autocorrelation(v);
    CHECK((r1 - v * v.adjoint()).cwiseAbs().maxCoeff() < 1e-15);

    CHECK(autocorrelation(ComplexMatrix::Zero(3, 5)).cwiseAbs().maxCoeff() == 0.0);

    // Noiseless two-source snapshots: rank exactly 2.
    const ComplexVector a1 = steering_vector(kArray, {0.2, 1.5});
    const ComplexVector a2 = steering_vector(kArray, {-0.4, 1.8});
    ComplexMatrix x(64, 32);
    for (int c = 0; c < 32; ++c) {
        const Complex s1 = draw_cscg(1.0, rng);
        const Complex s2 = draw_cscg(1.0, rng);
        x.col(c) = a1 * s1 + a2 * s2;
    }
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    int above = 0;
    for (int i = 0; i < 64; ++i) {
        if (eig.eigenvalues(i) > 1e-12 * eig.eigenvalues(0)) ++above;
    }
    CHECK(above == 2);
}

TEST_CASE("source count selection") {
    RealVector ev(4);
    ev << 100.0, 1.0, 1.0, 1.0;
    CHECK(estimate_source_count(ev, ModelOrder::gap(10.0)) == 1);
    CHECK(estimate_source_count(ev, ModelOrder::fixed(3)) == 3);

    // Noiseless rank-2 plus tiny jitter.
    RealVector ev2(6);
    ev2 << 50.0, 20.0, 1e-3, 9e-4, 8e-4, 7e-4;
    CHECK(estimate_source_count(ev2, ModelOrder::gap(10.0)) == 2);

    // Exactly low-rank eigenvalues do not count numerical dust.
    RealVector ev3(4);
    ev3 << 5.0, 1e-17, 1e-18, 0.0;
    CHECK(estimate_source_count(ev3, ModelOrder::gap(10.0)) == 1);
    CHECK_THROWS_AS(estimate_source_count(RealVector(), ModelOrder::gap(10.0)),
                    std::invalid_argument);
}

TEST_CASE("angle spectrum value against the entrywise projection oracle") {
    std::mt19937_64 rng(5);
    const Direction truth{0.3, 1.7};
    const ComplexVector a = steering_vector(kArray, truth);
    const ComplexMatrix x = snapshots_for(a, 40, 1.0, 0.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const AngleSpectrum spectrum(eig, 1, kArray);

    // At the truth the steering vector lies in the signal subspace.
    CHECK(spectrum.value(truth) < 1e-20 * 64.0);

    // Far away: compare against || U_N^H a ||^2 computed entrywise.
    const ComplexMatrix un = spectrum.noise_subspace();
    CHECK(un.cols() == 63);
    const Direction far{-0.8, 2.2};
    const ComplexVector af = steering_vector(kArray, far);
    double oracle = 0.0;
    for (Eigen::Index c = 0; c < un.cols(); ++c) {
        Complex dot(0.0, 0.0);
        for (Eigen::Index r = 0; r < un.rows(); ++r) dot += std::conj(un(r, c)) * af(r);
        oracle += std::norm(dot);
    }
    CHECK(spectrum.value(far) == doctest::Approx(oracle).epsilon(0.1));
    CHECK(spectrum.value(far) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("full-space noise subspace returns the steering norm") {
    // With all eigenvectors treated as noise minus nothing... closest spec
    // case: source_count cannot be 0, so use a 2-element toy with K = 1 and
    // a noise basis equal to the full space complement; instead verify the
    // projection identity directly on a random model.
    const EigDecomposition eig = random_eig(16, 9);
    RealVector omega = ExpSpectrum1D::range_omegas(480e3, 16);
    const ExpSpectrum1D spectrum(eig, 1, omega);
    const ComplexMatrix un = spectrum.noise_subspace();
    const ComplexVector a = range_steering(123.0, 480e3, 16);
    const double direct = (un.adjoint() * a).squaredNorm();
    CHECK(spectrum.value(123.0) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("newton refine on an exact quadratic bowl converges in one step") {
    const QuadraticBowl bowl{0.123456, 1.654321};
    RefineOptions opts;
    opts.grid_points = 8;
    opts.max_iterations = 3;
    opts.epsilon = 1e-12;
    const std::vector<Peak2D> peaks =
        newton_refine_2d(bowl, -1.0, 1.0, 1.0, 2.5, opts);
    REQUIRE(!peaks.empty());
    CHECK(peaks[0].p.azimuth == doctest::Approx(bowl.az0).epsilon(1e-12));
    CHECK(peaks[0].p.elevation == doctest::Approx(bowl.el0).epsilon(1e-12));
    CHECK(peaks[0].refined);
}

TEST_CASE("noiseless one-source angle estimation is exact to refinement tolerance") {
    std::mt19937_64 rng(11);
    const Direction truth{deg_to_rad(-3.02), deg_to_rad(93.17)};
    const ComplexVector a = steering_vector(kArray, truth);
    const ComplexMatrix x = snapshots_for(a, 64, 1.0, 0.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const AngleSpectrum spectrum(eig, 1, kArray);

    RefineOptions opts;
    opts.grid_points = 64;
    opts.max_iterations = 30;
    opts.epsilon = 1e-10;
    const std::vector<Peak2D> refined = newton_refine_2d(
        spectrum, deg_to_rad(-90.0), deg_to_rad(90.0), deg_to_rad(90.0), deg_to_rad(135.0),
        opts);
    REQUIRE(!refined.empty());
    CHECK(std::abs(refined[0].p.azimuth - truth.azimuth) < 1e-6);
    CHECK(std::abs(refined[0].p.elevation - truth.elevation) < 1e-6);

    opts.refine = false;
    const std::vector<Peak2D> on_grid = newton_refine_2d(
        spectrum, deg_to_rad(-90.0), deg_to_rad(90.0), deg_to_rad(90.0), deg_to_rad(135.0),
        opts);
    REQUIRE(!on_grid.empty());
    const double az_pitch = deg_to_rad(180.0) / 63.0;
    const double el_pitch = deg_to_rad(45.0) / 63.0;
    CHECK(std::abs(on_grid[0].p.azimuth - truth.azimuth) < az_pitch);
    CHECK(std::abs(on_grid[0].p.elevation - truth.elevation) < el_pitch);
    CHECK(std::abs(on_grid[0].p.azimuth - truth.azimuth) > 1e-6);  // grid quantized
}

TEST_CASE("noiseless range estimation hits 90.2638 m") {
    std::mt19937_64 rng(13);
    const int n_c = 64;
    const double df = 480e3;
    const ComplexVector a = range_steering(90.2638, df, n_c);
    const ComplexMatrix x = snapshots_for(a, 32, 1.0, 0.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const ExpSpectrum1D spectrum(eig, 1, ExpSpectrum1D::range_omegas(df, n_c));

    RefineOptions opts;
    opts.grid_points = 256;
    opts.epsilon = 1e-8;
    const std::vector<Peak1D> peaks =
        newton_refine_1d(spectrum, 0.0, kSpeedOfLight / df, opts);
    REQUIRE(!peaks.empty());
    CHECK(std::abs(peaks[0].x - 90.2638) < 1e-4);
}

TEST_CASE("range beyond the unambiguous window aliases") {
    std::mt19937_64 rng(15);
    const int n_c = 64;
    const double df = 480e3;
    const double window = kSpeedOfLight / df;
    const double truth = 700.0;  // outside the window
    const ComplexVector a = range_steering(truth, df, n_c);
    const ComplexMatrix x = snapshots_for(a, 32, 1.0, 0.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const ExpSpectrum1D spectrum(eig, 1, ExpSpectrum1D::range_omegas(df, n_c));
    RefineOptions opts;
    opts.grid_points = 256;
    opts.epsilon = 1e-8;
    const std::vector<Peak1D> peaks = newton_refine_1d(spectrum, 0.0, window, opts);
    REQUIRE(!peaks.empty());
    CHECK(std::abs(peaks[0].x - (truth - window)) < 1e-4);
}

TEST_CASE("analytic derivatives match central finite differences") {
    // Angle domain, step 1e-5 rad.
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const EigDecomposition eig = random_eig(16, seed);
        const UpaSpec small{4, 4, 4.75861e-3 / 2.0, 4.75861e-3};
        const AngleSpectrum spectrum(eig, 1 + static_cast<int>(seed % 3), small);
        std::mt19937_64 rng(seed * 7 + 1);
        std::uniform_real_distribution<double> az(-1.2, 1.2), el(0.6, 2.5);
        const Direction p{az(rng), el(rng)};

        double f;
        Eigen::Vector2d g;
        Eigen::Matrix2d h;
        spectrum.derivatives(p, &f, &g, &h);
        CHECK(f == doctest::Approx(spectrum.value(p)).epsilon(1e-12));
        CHECK(h(0, 1) == doctest::Approx(h(1, 0)).epsilon(1e-12));

        const double step = 1e-5;
        const double fd_az = (spectrum.value({p.azimuth + step, p.elevation}) -
                              spectrum.value({p.azimuth - step, p.elevation})) /
                             (2.0 * step);
        const double fd_el = (spectrum.value({p.azimuth, p.elevation + step}) -
                              spectrum.value({p.azimuth, p.elevation - step})) /
                             (2.0 * step);
        const double scale = std::max({std::abs(g(0)), std::abs(g(1)), 1e-6});
        CHECK(std::abs(fd_az - g(0)) / scale < 1e-5);
        CHECK(std::abs(fd_el - g(1)) / scale < 1e-5);

        // Hessian vs central differences of the analytic gradient.
        Eigen::Vector2d gp, gm;
        spectrum.derivatives({p.azimuth + step, p.elevation}, nullptr, &gp, nullptr);
        spectrum.derivatives({p.azimuth - step, p.elevation}, nullptr, &gm, nullptr);
        const Eigen::Vector2d col0 = (gp - gm) / (2.0 * step);
        spectrum.derivatives({p.azimuth, p.elevation + step}, nullptr, &gp, nullptr);
        spectrum.derivatives({p.azimuth, p.elevation - step}, nullptr, &gm, nullptr);
        const Eigen::Vector2d col1 = (gp - gm) / (2.0 * step);
        const double hscale = std::max(h.cwiseAbs().maxCoeff(), 1e-6);
        CHECK(std::abs(col0(0) - h(0, 0)) / hscale < 1e-5);
        CHECK(std::abs(col0(1) - h(1, 0)) / hscale < 1e-5);
        CHECK(std::abs(col1(1) - h(1, 1)) / hscale < 1e-5);
    }

    // Range and Doppler domains.
    for (std::uint64_t seed = 60; seed < 85; ++seed) {
        const EigDecomposition eig = random_eig(16, seed);
        const bool is_range = seed % 2 == 0;
        const RealVector omega = is_range ? ExpSpectrum1D::range_omegas(480e3, 16)
                                          : ExpSpectrum1D::doppler_omegas(2.34375e-6, 16);
        const ExpSpectrum1D spectrum(eig, 1, omega);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> xs(is_range ? 10.0 : -2e5,
                                                  is_range ? 600.0 : 2e5);
        const double x = xs(rng);
        const double step = is_range ? 1e-3 : 1.0;
        double f, d1, d2;
        spectrum.derivatives(x, &f, &d1, &d2);
        const double fd1 = (spectrum.value(x + step) - spectrum.value(x - step)) / (2.0 * step);
        double d1p, d1m;
        spectrum.derivatives(x + step, nullptr, &d1p, nullptr);
        spectrum.derivatives(x - step, nullptr, &d1m, nullptr);
        const double fd2 = (d1p - d1m) / (2.0 * step);
        CHECK(std::abs(fd1 - d1) / std::max(std::abs(d1), 1e-9) < 1e-5);
        CHECK(std::abs(fd2 - d2) / std::max(std::abs(d2), 1e-9) < 1e-5);
    }
}

TEST_CASE("gradient vanishes at a noiseless spectrum minimum") {
    std::mt19937_64 rng(21);
    const Direction truth{0.25, 1.9};
    const ComplexVector a = steering_vector(kArray, truth);
    const ComplexMatrix x = snapshots_for(a, 32, 1.0, 0.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const AngleSpectrum spectrum(eig, 1, kArray);
    Eigen::Vector2d g;
    spectrum.derivatives(truth, nullptr, &g, nullptr);
    CHECK(g.norm() < 1e-10);
}

TEST_CASE("range-Doppler matching: single target reaches the Appendix-A peak") {
    const int n_c = 32, m_s = 16;
    const double df = 480e3, ts = 2.34375e-6;
    const Complex amp(0.7, -0.4);
    const double r0 = 120.0, f0 = 30e3;
    const ComplexMatrix grid =
        amp * range_steering(r0, df, n_c) * doppler_steering(f0, ts, m_s).transpose();

    RdMatchSpec spec{df, ts, 1.0};
    const std::vector<double> ranges{r0};
    const std::vector<double> dopplers{f0};
    const MatchResult match = range_doppler_match(grid, ranges, dopplers, spec);
    const double expected = std::norm(amp) * std::pow(double(n_c) * m_s, 2.0);
    CHECK(match.matrix(0, 0) == doctest::Approx(expected).epsilon(0.1));
    CHECK(match.doppler_of_range[0] == 0);
}

TEST_CASE("range-Doppler matching pairs two separated targets") {
    const int n_c = 64, m_s = 32;
    const double df = 480e3, ts = 2.34375e-6;
    const ComplexMatrix grid =
        Complex(1.0, 0.0) * range_steering(50.0, df, n_c) *
            doppler_steering(0.0, ts, m_s).transpose() +
        Complex(0.8, 0.3) * range_steering(300.0, df, n_c) *
            doppler_steering(100e3, ts, m_s).transpose();

    RdMatchSpec spec{df, ts, 1.0};
    SUBCASE("natural order") {
        const std::vector<double> ranges{50.0, 300.0};
        const std::vector<double> dopplers{0.0, 100e3};
        const MatchResult match = range_doppler_match(grid, ranges, dopplers, spec);
        CHECK(match.doppler_of_range[0] == 0);
        CHECK(match.doppler_of_range[1] == 1);
        const double min_diag = std::min(match.matrix(0, 0), match.matrix(1, 1));
        const double max_off = std::max(match.matrix(0, 1), match.matrix(1, 0));
        CHECK(max_off <= 0.1 * min_diag);
    }
    SUBCASE("swapped doppler order inverts the pairing") {
        const std::vector<double> ranges{50.0, 300.0};
        const std::vector<double> dopplers{100e3, 0.0};
        const MatchResult match = range_doppler_match(grid, ranges, dopplers, spec);
        CHECK(match.doppler_of_range[0] == 1);
        CHECK(match.doppler_of_range[1] == 0);
    }
}

TEST_CASE("sensing SNR from eigenvalues") {
    RealVector ev(4);
    ev << 11.0, 1.0, 1.0, 1.0;
    const std::vector<double> gamma = sensing_snr(ev, 1);
    CHECK(gamma[0] == doctest::Approx(10.0));

    RealVector flat(3);
    flat << 2.0, 2.0, 2.0;
    CHECK(sensing_snr(flat, 1)[0] == doctest::Approx(kSensingSnrFloor));
    CHECK_THROWS_AS(sensing_snr(ev, 4), std::invalid_argument);
}

TEST_CASE("sensing SNR calibration against the array-gain prediction") {
    // One path at per-sample SNR 20 dB over 32 range bins: the dominant
    // eigenvalue collects the coherent bin gain, so gamma ~ N_c * SNR.
    std::mt19937_64 rng(33);
    const int n_c = 32, m_s = 64;
    const double snr = 100.0, noise_var = 1.0;
    const ComplexVector a = range_steering(200.0, 480e3, n_c);
    double acc_db = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const ComplexMatrix x = snapshots_for(a, m_s, snr * noise_var, noise_var, rng);
        const EigDecomposition eig = hermitian_eig(autocorrelation(x));
        acc_db += 10.0 * std::log10(sensing_snr(eig.eigenvalues, 1)[0]);
    }
    const double mean_db = acc_db / 100.0;
    const double predicted_db = 10.0 * std::log10(n_c * snr);
    CHECK(std::abs(mean_db - predicted_db) < 3.0);
}

TEST_CASE("subspace orthogonality improves monotonically with SNR") {
    const UpaSpec small{4, 4, 4.75861e-3 / 2.0, 4.75861e-3};
    const Direction truth{0.2, 1.8};
    const ComplexVector a = steering_vector(small, truth);
    std::mt19937_64 rng(37);
    std::vector<double> mean_residual;
    for (double snr_db : {0.0, 10.0, 20.0, 30.0}) {
        const double snr = std::pow(10.0, snr_db / 10.0);
        double acc = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const ComplexMatrix x = snapshots_for(a, 64, snr, 1.0, rng);
            const EigDecomposition eig = hermitian_eig(autocorrelation(x));
            const AngleSpectrum spectrum(eig, 1, small);
            acc += std::sqrt(spectrum.value(truth)) / a.norm();
        }
        mean_residual.push_back(acc / 100.0);
    }
    for (std::size_t i = 0; i + 1 < mean_residual.size(); ++i) {
        CHECK(mean_residual[i] > mean_residual[i + 1]);
    }
}

TEST_CASE("refinement never lands above the best grid seed") {
    std::mt19937_64 rng(41);
    const int n_c = 32;
    const ComplexVector a = range_steering(333.0, 480e3, n_c);
    const ComplexMatrix x = snapshots_for(a, 16, 10.0, 1.0, rng);
    const EigDecomposition eig = hermitian_eig(autocorrelation(x));
    const ExpSpectrum1D spectrum(eig, 1, ExpSpectrum1D::range_omegas(480e3, n_c));
    RefineOptions opts;
    opts.grid_points = 128;
    opts.epsilon = 1e-8;
    const std::vector<Peak1D> refined =
        newton_refine_1d(spectrum, 0.0, kSpeedOfLight / 480e3, opts);
    opts.refine = false;
    const std::vector<Peak1D> seeds =
        newton_refine_1d(spectrum, 0.0, kSpeedOfLight / 480e3, opts);
    REQUIRE(!refined.empty());
    REQUIRE(!seeds.empty());
    CHECK(refined[0].f <= seeds[0].f);
}

TEST_CASE("Doppler spectrum recovers a signed pure tone") {
    // Grid h(n, m) = e^{j 2 pi f0 m T}: the transposed autocorrelation must
    // place the minimum at +f0, not -f0.
    const int n_c = 24, m_s = 32;
    const double ts = 2.34375e-6, f0 = 12345.0;
    ComplexMatrix grid(n_c, m_s);
    for (int m = 0; m < m_s; ++m) {
        const double phase = 2.0 * kPi * f0 * m * ts;
        for (int n = 0; n < n_c; ++n) grid(n, m) = Complex(std::cos(phase), std::sin(phase));
    }
    const EigDecomposition eig = hermitian_eig(autocorrelation(grid.transpose()));
    const ExpSpectrum1D spectrum(eig, 1, ExpSpectrum1D::doppler_omegas(ts, m_s));
    RefineOptions opts;
    opts.grid_points = 256;
    opts.epsilon = 1e-6;
    const double window = 1.0 / ts;
    const std::vector<Peak1D> peaks =
        newton_refine_1d(spectrum, -window / 2.0, window / 2.0, opts);
    REQUIRE(!peaks.empty());
    CHECK(std::abs(peaks[0].x - f0) < 1e-2);
}
