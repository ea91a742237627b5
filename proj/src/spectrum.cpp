#include "jcas/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jcas {

ComplexMatrix autocorrelation(const ComplexMatrix& snapshots) {
    const double count = static_cast<double>(snapshots.cols());
    return (snapshots * snapshots.adjoint()) / count;
}

int estimate_source_count(const RealVector& eigenvalues_descending, const ModelOrder& order) {
    const Eigen::Index n = eigenvalues_descending.size();
    if (n == 0) {
        throw std::invalid_argument("estimate_source_count: empty eigenvalue list");
    }
    if (order.mode == ModelOrder::Mode::Fixed) {
        return std::clamp(order.fixed_count, 1, static_cast<int>(n));
    }
    const Eigen::Index half = (n + 1) / 2;
    const double floor_mean = eigenvalues_descending.tail(half).mean();
    // The relative floor keeps a noiseless (exactly low-rank) decomposition
    // from counting numerical dust as sources.
    const double floor_val = std::max(floor_mean, 1e-12 * eigenvalues_descending(0));
    int count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (eigenvalues_descending(i) > order.gap_ratio * floor_val) ++count;
    }
    return std::max(count, 1);
}

namespace {

// Quadratic form a^H E a with E = U_N U_N^H, evaluated through the thinner
// side of the eigenbasis: the full basis is orthonormal, so
// ||U_N^H a||^2 = ||a||^2 - ||U_S^H a||^2.
struct SubspaceForm {
    const ComplexMatrix& vectors;
    int source_count;

    bool use_complement() const {
        return source_count <= vectors.cols() - source_count;
    }
    double value(const ComplexVector& a) const {
        if (use_complement()) {
            const ComplexVector proj = vectors.leftCols(source_count).adjoint() * a;
            return a.squaredNorm() - proj.squaredNorm();
        }
        const ComplexVector proj =
            vectors.rightCols(vectors.cols() - source_count).adjoint() * a;
        return proj.squaredNorm();
    }
    // E x (projection of x onto the noise subspace)
    ComplexVector apply(const ComplexVector& x) const {
        if (use_complement()) {
            const auto us = vectors.leftCols(source_count);
            return x - us * (us.adjoint() * x);
        }
        const auto un = vectors.rightCols(vectors.cols() - source_count);
        return un * (un.adjoint() * x);
    }
};

}  // namespace

AngleSpectrum::AngleSpectrum(const EigDecomposition& eig, int source_count,
                             const UpaSpec& array)
    : eigenvectors_(eig.eigenvectors), source_count_(source_count), array_(array) {
    if (source_count_ < 1 || source_count_ >= eigenvectors_.cols()) {
        throw std::invalid_argument("AngleSpectrum: source count out of range");
    }
    if (eigenvectors_.rows() != array.size()) {
        throw std::invalid_argument("AngleSpectrum: eigenvector/array size mismatch");
    }
}

ComplexMatrix AngleSpectrum::noise_subspace() const {
    return eigenvectors_.rightCols(eigenvectors_.cols() - source_count_);
}

double AngleSpectrum::value(const Direction& p) const {
    const SubspaceForm form{eigenvectors_, source_count_};
    return form.value(steering_vector(array_, p));
}

void AngleSpectrum::derivatives(const Direction& p, double* f, Eigen::Vector2d* grad,
                                Eigen::Matrix2d* hess) const {
    const int size = array_.size();
    const double kappa = 2.0 * kPi / array_.wavelength * array_.element_spacing;
    const double ca = std::cos(p.azimuth), sa = std::sin(p.azimuth);
    const double ce = std::cos(p.elevation), se = std::sin(p.elevation);

    ComplexVector a(size), d_az(size), d_el(size), d_azaz(size), d_azel(size), d_elel(size);
    for (int pi = 0; pi < array_.p_count; ++pi) {
        for (int qi = 0; qi < array_.q_count; ++qi) {
            const int k = pi * array_.q_count + qi;
            const double u = pi * ca + qi * sa;    // in-plane projection
            const double v = -pi * sa + qi * ca;   // its azimuth derivative
            const double psi = -kappa * se * u;
            const double psi_az = -kappa * se * v;
            const double psi_el = -kappa * ce * u;
            const double psi_azaz = kappa * se * u;   // = -psi
            const double psi_azel = -kappa * ce * v;
            const double psi_elel = kappa * se * u;   // = -psi
            const Complex ak(std::cos(psi), std::sin(psi));
            const Complex j(0.0, 1.0);
            a(k) = ak;
            d_az(k) = j * psi_az * ak;
            d_el(k) = j * psi_el * ak;
            d_azaz(k) = (j * psi_azaz - psi_az * psi_az) * ak;
            d_azel(k) = (j * psi_azel - psi_az * psi_el) * ak;
            d_elel(k) = (j * psi_elel - psi_el * psi_el) * ak;
        }
    }

    const SubspaceForm form{eigenvectors_, source_count_};
    const ComplexVector ea = form.apply(a);
    const ComplexVector e_az = form.apply(d_az);
    const ComplexVector e_el = form.apply(d_el);

    if (f) *f = std::real(a.dot(ea));
    if (grad) {
        (*grad)(0) = 2.0 * std::real(ea.dot(d_az));
        (*grad)(1) = 2.0 * std::real(ea.dot(d_el));
    }
    if (hess) {
        const double h_azaz =
            2.0 * std::real(e_az.dot(d_az)) + 2.0 * std::real(ea.dot(d_azaz));
        const double h_azel =
            2.0 * std::real(e_az.dot(d_el)) + 2.0 * std::real(ea.dot(d_azel));
        const double h_elel =
            2.0 * std::real(e_el.dot(d_el)) + 2.0 * std::real(ea.dot(d_elel));
        (*hess)(0, 0) = h_azaz;
        (*hess)(0, 1) = h_azel;
        (*hess)(1, 0) = h_azel;
        (*hess)(1, 1) = h_elel;
    }
}

ExpSpectrum1D::ExpSpectrum1D(const EigDecomposition& eig, int source_count, RealVector omega)
    : eigenvectors_(eig.eigenvectors), source_count_(source_count), omega_(std::move(omega)) {
    if (source_count_ < 1 || source_count_ >= eigenvectors_.cols()) {
        throw std::invalid_argument("ExpSpectrum1D: source count out of range");
    }
    if (eigenvectors_.rows() != omega_.size()) {
        throw std::invalid_argument("ExpSpectrum1D: eigenvector/omega size mismatch");
    }
}

ComplexMatrix ExpSpectrum1D::noise_subspace() const {
    return eigenvectors_.rightCols(eigenvectors_.cols() - source_count_);
}

ComplexVector ExpSpectrum1D::steering(double x) const {
    ComplexVector a(omega_.size());
    for (Eigen::Index k = 0; k < omega_.size(); ++k) {
        const double phase = omega_(k) * x;
        a(k) = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

double ExpSpectrum1D::value(double x) const {
    const SubspaceForm form{eigenvectors_, source_count_};
    return form.value(steering(x));
}

void ExpSpectrum1D::derivatives(double x, double* f, double* d1, double* d2) const {
    const Eigen::Index n = omega_.size();
    ComplexVector a(n), da(n), d2a(n);
    const Complex j(0.0, 1.0);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double phase = omega_(k) * x;
        const Complex ak(std::cos(phase), std::sin(phase));
        a(k) = ak;
        da(k) = j * omega_(k) * ak;
        d2a(k) = -omega_(k) * omega_(k) * ak;
    }
    const SubspaceForm form{eigenvectors_, source_count_};
    const ComplexVector ea = form.apply(a);
    const ComplexVector eda = form.apply(da);
    if (f) *f = std::real(a.dot(ea));
    if (d1) *d1 = 2.0 * std::real(ea.dot(da));
    if (d2) *d2 = 2.0 * std::real(eda.dot(da)) + 2.0 * std::real(ea.dot(d2a));
}

RealVector ExpSpectrum1D::range_omegas(double subcarrier_spacing, int subcarrier_count) {
    RealVector omega(subcarrier_count);
    for (int k = 0; k < subcarrier_count; ++k) {
        omega(k) = -2.0 * kPi * k * subcarrier_spacing / kSpeedOfLight;
    }
    return omega;
}

RealVector ExpSpectrum1D::doppler_omegas(double symbol_duration, int symbol_count) {
    RealVector omega(symbol_count);
    for (int k = 0; k < symbol_count; ++k) {
        omega(k) = 2.0 * kPi * k * symbol_duration;
    }
    return omega;
}

ComplexVector range_steering(double range, double subcarrier_spacing, int subcarrier_count) {
    ComplexVector a(subcarrier_count);
    for (int k = 0; k < subcarrier_count; ++k) {
        const double phase = -2.0 * kPi * k * subcarrier_spacing * range / kSpeedOfLight;
        a(k) = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

ComplexVector doppler_steering(double doppler, double symbol_duration, int symbol_count) {
    ComplexVector a(symbol_count);
    for (int k = 0; k < symbol_count; ++k) {
        const double phase = 2.0 * kPi * k * symbol_duration * doppler;
        a(k) = Complex(std::cos(phase), std::sin(phase));
    }
    return a;
}

MatchResult range_doppler_match(const Eigen::MatrixXcd& grid,
                                std::span<const double> ranges,
                                std::span<const double> dopplers,
                                const RdMatchSpec& spec) {
    MatchResult out;
    const std::size_t k = std::min(ranges.size(), dopplers.size());
    out.length_mismatch = ranges.size() != dopplers.size();
    if (k == 0) return out;

    const int n_sub = static_cast<int>(grid.rows());
    const int m_sym = static_cast<int>(grid.cols());
    out.matrix.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
        const ComplexVector ar =
            range_steering(spec.scale * ranges[i], spec.subcarrier_spacing, n_sub);
        const ComplexVector left = grid.adjoint() * ar;  // (a_r^H grid)^H
        for (std::size_t l = 0; l < k; ++l) {
            const ComplexVector af =
                doppler_steering(spec.scale * dopplers[l], spec.symbol_duration, m_sym);
            const Complex v = left.dot(af.conjugate());  // a_r^H grid a_f^*
            out.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) =
                std::norm(v);
        }
    }

    // Row-wise argmax, with duplicate columns resolved greedily by value.
    out.doppler_of_range.assign(k, -1);
    std::vector<bool> row_done(k, false), col_done(k, false);
    struct Entry { double v; std::size_t r, c; };
    std::vector<Entry> entries;
    entries.reserve(k * k);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            entries.push_back({out.matrix(static_cast<Eigen::Index>(r),
                                          static_cast<Eigen::Index>(c)), r, c});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.v > b.v; });

    // First pass: detect whether plain row argmax would conflict.
    std::vector<int> naive(k, 0);
    for (std::size_t r = 0; r < k; ++r) {
        Eigen::Index best;
        out.matrix.row(static_cast<Eigen::Index>(r)).maxCoeff(&best);
        naive[r] = static_cast<int>(best);
    }
    std::vector<int> column_use(k, 0);
    for (std::size_t r = 0; r < k; ++r) column_use[static_cast<std::size_t>(naive[r])]++;
    out.conflict = std::any_of(column_use.begin(), column_use.end(),
                               [](int u) { return u > 1; });
    if (!out.conflict) {
        out.doppler_of_range = naive;
        return out;
    }
    for (const Entry& e : entries) {
        if (row_done[e.r] || col_done[e.c]) continue;
        out.doppler_of_range[e.r] = static_cast<int>(e.c);
        row_done[e.r] = true;
        col_done[e.c] = true;
    }
    return out;
}

std::vector<double> sensing_snr(const RealVector& eigenvalues_descending, int source_count) {
    const Eigen::Index n = eigenvalues_descending.size();
    if (source_count < 1 || source_count >= n) {
        throw std::invalid_argument("sensing_snr: source count out of range");
    }
    const double sigma = eigenvalues_descending.tail(n - source_count).mean();
    std::vector<double> gamma(static_cast<std::size_t>(source_count));
    for (int kk = 0; kk < source_count; ++kk) {
        const double g = sigma > 0.0
                             ? (eigenvalues_descending(kk) - sigma) / sigma
                             : (eigenvalues_descending(kk) > 0.0 ? 1.0 / kSensingSnrFloor : 0.0);
        gamma[static_cast<std::size_t>(kk)] = std::max(g, kSensingSnrFloor);
    }
    return gamma;
}

}  // namespace jcas
