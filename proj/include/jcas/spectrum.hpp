#pragma once

#include <concepts>
#include <span>
#include <vector>

#include "jcas/geometry.hpp"
#include "jcas/linalg.hpp"

namespace jcas {

/// Sample autocorrelation of a snapshot matrix: X X^H / snapshot count,
/// with snapshots as columns.
ComplexMatrix autocorrelation(const ComplexMatrix& snapshots);

/// Source-count (model order) selection from descending eigenvalues.
struct ModelOrder {
    enum class Mode { Fixed, Gap };
    Mode mode = Mode::Gap;
    int fixed_count = 1;
    double gap_ratio = 10.0;

    static ModelOrder fixed(int k) { return {Mode::Fixed, k, 10.0}; }
    static ModelOrder gap(double rho) { return {Mode::Gap, 1, rho}; }
};

/// Fixed mode returns the configured count (capped to the eigenvalue count).
/// Gap mode counts eigenvalues above gap_ratio x noise floor, where the noise
/// floor is the mean of the smallest half (with a tiny relative floor so a
/// noiseless decomposition does not count numerical dust); at least 1.
int estimate_source_count(const RealVector& eigenvalues_descending, const ModelOrder& order);

/// MUSIC pseudo-spectrum denominator over UPA directions:
/// f(p) = a^H(p) U_N U_N^H a(p), evaluated with analytic first and second
/// derivatives in (azimuth, elevation). Internally the projection is taken
/// through whichever of the signal/noise subspaces is thinner; both describe
/// the same quadratic form since the eigenvector basis is complete.
class AngleSpectrum {
  public:
    AngleSpectrum(const EigDecomposition& eig, int source_count, const UpaSpec& array);

    ComplexMatrix noise_subspace() const;
    int source_count() const { return source_count_; }

    double value(const Direction& p) const;
    void derivatives(const Direction& p, double* f, Eigen::Vector2d* grad,
                     Eigen::Matrix2d* hess) const;

  private:
    ComplexMatrix eigenvectors_;
    int source_count_;
    UpaSpec array_;
};

/// 1D MUSIC spectrum over a complex-exponential steering family
/// a_k(x) = exp(j omega_k x); covers both the range and Doppler domains.
class ExpSpectrum1D {
  public:
    ExpSpectrum1D(const EigDecomposition& eig, int source_count, RealVector omega);

    ComplexMatrix noise_subspace() const;
    int source_count() const { return source_count_; }

    double value(double x) const;
    void derivatives(double x, double* f, double* d1, double* d2) const;

    /// omega_n = -2 pi n spacing / c, so x is a one-way propagation range.
    static RealVector range_omegas(double subcarrier_spacing, int subcarrier_count);
    /// omega_m = +2 pi m symbol_duration, so x is a Doppler frequency.
    static RealVector doppler_omegas(double symbol_duration, int symbol_count);

  private:
    ComplexVector steering(double x) const;

    ComplexMatrix eigenvectors_;
    int source_count_;
    RealVector omega_;
};

template <typename F>
concept Spectrum1D = requires(const F& f, double x, double* out) {
    { f.value(x) } -> std::convertible_to<double>;
    { f.derivatives(x, out, out, out) };
};

template <typename F>
concept Spectrum2D = requires(const F& f, Direction p, double* v,
                              Eigen::Vector2d* g, Eigen::Matrix2d* h) {
    { f.value(p) } -> std::convertible_to<double>;
    { f.derivatives(p, v, g, h) };
};

struct RefineOptions {
    int grid_points = 64;     // N_i per axis
    int max_iterations = 30;
    double epsilon = 1e-10;   // step-norm convergence threshold
    bool refine = true;       // false: return grid seeds (on-grid estimates)
};

struct Peak1D {
    double x = 0.0;
    double f = 0.0;
    bool refined = false;
    bool wrapped = false;
};

struct Peak2D {
    Direction p;
    double f = 0.0;
    bool refined = false;
};

/// Two-step Newton minimum search: evaluate the spectrum on the grid, seed
/// from strict local minima of f (= local maxima of 1/f), then per seed run a
/// safeguarded Newton descent (a step that increases f, or a non-positive-
/// definite Hessian, falls back to halved gradient steps, at most 10
/// halvings; a step never increases f). Results are deduplicated within half
/// a grid pitch, keeping the lower f, and sorted ascending by f.
std::vector<Peak2D> newton_refine_2d(const Spectrum2D auto& spectrum,
                                     double az_lo, double az_hi,
                                     double el_lo, double el_hi,
                                     const RefineOptions& options);

std::vector<Peak1D> newton_refine_1d(const Spectrum1D auto& spectrum,
                                     double lo, double hi,
                                     const RefineOptions& options);

ComplexVector range_steering(double range, double subcarrier_spacing, int subcarrier_count);
ComplexVector doppler_steering(double doppler, double symbol_duration, int symbol_count);

/// Range/Doppler matched-filter pairing over a CSI-style grid. The matching
/// matrix is M[k, l] = |a_r(scale * r_k)^H grid a_f(scale * f_l)^*|^2 and each
/// range is paired with the argmax of its row; duplicate column picks are
/// resolved greedily by descending matrix value and flagged. `scale` is 2 for
/// echo grids whose estimates were already halved to one-way values.
struct RdMatchSpec {
    double subcarrier_spacing = 0.0;
    double symbol_duration = 0.0;
    double scale = 1.0;
};

struct MatchResult {
    std::vector<int> doppler_of_range;  // index into the doppler list per range
    RealMatrix matrix;
    bool conflict = false;
    bool length_mismatch = false;
};

MatchResult range_doppler_match(const Eigen::MatrixXcd& grid,
                                std::span<const double> ranges,
                                std::span<const double> dopplers,
                                const RdMatchSpec& spec);

/// Per-source sensing SNR from descending autocorrelation eigenvalues:
/// gamma_k = (lambda_k - sigma) / sigma with sigma the mean of the trailing
/// (count - source_count) eigenvalues; clamped to a tiny positive floor.
std::vector<double> sensing_snr(const RealVector& eigenvalues_descending, int source_count);

inline constexpr double kSensingSnrFloor = 1e-9;

// --- implementation of the templated Newton search -------------------------

std::vector<Peak1D> newton_refine_1d(const Spectrum1D auto& spectrum,
                                     double lo, double hi,
                                     const RefineOptions& options) {
    const int n = options.grid_points;
    if (n < 2 || hi <= lo) {
        throw std::invalid_argument("newton_refine_1d: bad grid");
    }
    const double pitch = (hi - lo) / (n - 1);
    std::vector<double> grid(n);
    std::vector<double> fv(n);
    for (int i = 0; i < n; ++i) {
        grid[i] = lo + i * pitch;
        fv[i] = spectrum.value(grid[i]);
    }

    std::vector<Peak1D> peaks;
    for (int i = 0; i < n; ++i) {
        // Strict local minimum; plateau ties go to the lower index.
        bool is_min = true;
        if (i > 0 && !(fv[i] < fv[i - 1])) is_min = false;
        if (i + 1 < n && fv[i] > fv[i + 1]) is_min = false;
        if (!is_min) continue;

        Peak1D peak;
        peak.x = grid[i];
        peak.f = fv[i];
        if (options.refine) {
            double x = grid[i];
            double f_cur = fv[i];
            for (int iter = 0; iter < options.max_iterations; ++iter) {
                double f0, d1, d2;
                spectrum.derivatives(x, &f0, &d1, &d2);
                double step = 0.0;
                bool have_step = false;
                if (std::isfinite(d1) && std::isfinite(d2) && d2 > 0.0) {
                    step = -d1 / d2;
                    const double f_try = spectrum.value(x + step);
                    if (std::isfinite(f_try) && f_try <= f_cur) {
                        x += step;
                        f_cur = f_try;
                        have_step = true;
                    }
                }
                if (!have_step) {
                    // halved gradient fallback, first trial bounded by a pitch
                    if (!std::isfinite(d1) || d1 == 0.0) break;
                    double t = pitch / std::abs(d1);
                    for (int h = 0; h < 10 && !have_step; ++h, t *= 0.5) {
                        const double f_try = spectrum.value(x - t * d1);
                        if (std::isfinite(f_try) && f_try < f_cur) {
                            step = -t * d1;
                            x += step;
                            f_cur = f_try;
                            have_step = true;
                        }
                    }
                    if (!have_step) break;
                }
                peak.refined = true;
                if (std::abs(step) <= options.epsilon) break;
            }
            peak.x = x;
            peak.f = f_cur;
        }
        peaks.push_back(peak);
    }

    std::sort(peaks.begin(), peaks.end(),
              [](const Peak1D& a, const Peak1D& b) { return a.f < b.f; });
    std::vector<Peak1D> unique;
    for (const Peak1D& p : peaks) {
        bool dup = false;
        for (const Peak1D& kept : unique) {
            if (std::abs(kept.x - p.x) <= 0.5 * pitch) { dup = true; break; }
        }
        if (!dup) unique.push_back(p);
    }
    return unique;
}

std::vector<Peak2D> newton_refine_2d(const Spectrum2D auto& spectrum,
                                     double az_lo, double az_hi,
                                     double el_lo, double el_hi,
                                     const RefineOptions& options) {
    const int n = options.grid_points;
    if (n < 2 || az_hi <= az_lo || el_hi <= el_lo) {
        throw std::invalid_argument("newton_refine_2d: bad grid");
    }
    const double az_pitch = (az_hi - az_lo) / (n - 1);
    const double el_pitch = (el_hi - el_lo) / (n - 1);

    RealMatrix fv(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            fv(i, j) = spectrum.value({az_lo + i * az_pitch, el_lo + j * el_pitch});
        }
    }

    auto flat = [n](int i, int j) { return i * n + j; };
    std::vector<Peak2D> peaks;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            bool is_min = true;
            const double c = fv(i, j);
            const int di[4] = {-1, 1, 0, 0};
            const int dj[4] = {0, 0, -1, 1};
            for (int k = 0; k < 4 && is_min; ++k) {
                const int ni = i + di[k], nj = j + dj[k];
                if (ni < 0 || ni >= n || nj < 0 || nj >= n) continue;
                const double nv = fv(ni, nj);
                if (c > nv) is_min = false;
                if (c == nv && flat(i, j) > flat(ni, nj)) is_min = false;
            }
            if (!is_min) continue;

            Peak2D peak;
            peak.p = {az_lo + i * az_pitch, el_lo + j * el_pitch};
            peak.f = c;
            if (options.refine) {
                Direction p = peak.p;
                double f_cur = c;
                for (int iter = 0; iter < options.max_iterations; ++iter) {
                    double f0;
                    Eigen::Vector2d g;
                    Eigen::Matrix2d h;
                    spectrum.derivatives(p, &f0, &g, &h);
                    Eigen::Vector2d step = Eigen::Vector2d::Zero();
                    bool have_step = false;
                    const double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
                    const bool pd = h(0, 0) > 0.0 && det > 0.0;
                    if (g.allFinite() && h.allFinite() && pd) {
                        step = -h.inverse() * g;
                        const Direction trial{p.azimuth + step(0), p.elevation + step(1)};
                        const double f_try = spectrum.value(trial);
                        if (std::isfinite(f_try) && f_try <= f_cur) {
                            p = trial;
                            f_cur = f_try;
                            have_step = true;
                        }
                    }
                    if (!have_step) {
                        if (!g.allFinite() || g.norm() == 0.0) break;
                        double t = std::min(az_pitch, el_pitch) / g.norm();
                        for (int hh = 0; hh < 10 && !have_step; ++hh, t *= 0.5) {
                            const Direction trial{p.azimuth - t * g(0), p.elevation - t * g(1)};
                            const double f_try = spectrum.value(trial);
                            if (std::isfinite(f_try) && f_try < f_cur) {
                                step = -t * g;
                                p = trial;
                                f_cur = f_try;
                                have_step = true;
                            }
                        }
                        if (!have_step) break;
                    }
                    peak.refined = true;
                    if (step.norm() <= options.epsilon) break;
                }
                peak.p = p;
                peak.f = f_cur;
            }
            peaks.push_back(peak);
        }
    }

    std::sort(peaks.begin(), peaks.end(),
              [](const Peak2D& a, const Peak2D& b) { return a.f < b.f; });
    std::vector<Peak2D> unique;
    for (const Peak2D& p : peaks) {
        bool dup = false;
        for (const Peak2D& kept : unique) {
            if (std::abs(kept.p.azimuth - p.p.azimuth) <= 0.5 * az_pitch &&
                std::abs(kept.p.elevation - p.p.elevation) <= 0.5 * el_pitch) {
                dup = true;
                break;
            }
        }
        if (!dup) unique.push_back(p);
    }
    return unique;
}

}  // namespace jcas
