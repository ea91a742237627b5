#include "jcas/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace jcas {

namespace {

// Wrap x into [lo, lo + period); flags when a wrap actually happened.
double wrap_into(double x, double lo, double period, bool* wrapped) {
    double y = std::fmod(x - lo, period);
    if (y < 0.0) y += period;
    y += lo;
    if (wrapped && std::abs(y - x) > 1e-12 * period) *wrapped = true;
    return y;
}

struct Spectrum1DOutputs {
    std::vector<Peak1D> peaks;
    RealVector eigenvalues;
    int source_count = 0;
};

// Shared 1D MUSIC stage: autocorrelation -> eig -> source count -> refined
// peaks over the search window [lo, hi), wrapped on the steering family's
// unambiguous period.
Spectrum1DOutputs music_1d(const Eigen::MatrixXcd& snapshots, const RealVector& omega,
                           const ModelOrder& order, double lo, double hi, double period,
                           const RefineOptions& options) {
    Spectrum1DOutputs out;
    const ComplexMatrix r = autocorrelation(snapshots);
    const EigDecomposition eig = hermitian_eig(r);
    out.eigenvalues = eig.eigenvalues;
    out.source_count = estimate_source_count(eig.eigenvalues, order);
    if (out.source_count >= static_cast<int>(eig.eigenvalues.size())) {
        out.source_count = static_cast<int>(eig.eigenvalues.size()) - 1;
    }
    const ExpSpectrum1D spectrum(eig, out.source_count, omega);
    out.peaks = newton_refine_1d(spectrum, lo, hi, options);
    for (Peak1D& p : out.peaks) {
        p.x = wrap_into(p.x, lo, period, &p.wrapped);
    }
    return out;
}

// Pairs refined range and Doppler peaks into detections: top source_count
// peaks per domain, matched through the grid, sensing SNR by eigenvalue rank.
std::vector<Detection> build_detections(const Eigen::MatrixXcd& grid,
                                        const Spectrum1DOutputs& range_out,
                                        const Spectrum1DOutputs& doppler_out,
                                        const RdMatchSpec& match_spec,
                                        double estimate_scale) {
    std::vector<Detection> detections;
    const std::size_t k = std::min({range_out.peaks.size(), doppler_out.peaks.size(),
                                    static_cast<std::size_t>(range_out.source_count)});
    if (k == 0) return detections;

    std::vector<double> ranges(k), dopplers(k);
    for (std::size_t i = 0; i < k; ++i) {
        ranges[i] = range_out.peaks[i].x / estimate_scale;
        dopplers[i] = doppler_out.peaks[i].x / estimate_scale;
    }
    const MatchResult match = range_doppler_match(grid, ranges, dopplers, match_spec);
    const std::vector<double> gammas = sensing_snr(range_out.eigenvalues,
                                                   range_out.source_count);
    for (std::size_t i = 0; i < k; ++i) {
        Detection d;
        d.range = ranges[i];
        d.doppler = dopplers[static_cast<std::size_t>(match.doppler_of_range[i])];
        d.sensing_snr = i < gammas.size() ? gammas[i] : gammas.back();
        d.peak = range_out.peaks[i].f > 0.0 ? 1.0 / range_out.peaks[i].f
                                            : std::numeric_limits<double>::infinity();
        d.wrapped = range_out.peaks[i].wrapped ||
                    doppler_out.peaks[static_cast<std::size_t>(match.doppler_of_range[i])].wrapped;
        detections.push_back(d);
    }
    return detections;
}

}  // namespace

UlpResult run_ulp(const ChannelRealization& realization, const PipelineConfig& cfg,
                  std::mt19937_64& rng) {
    UlpResult out;
    const OfdmNumerology& num = cfg.numerology;
    const int n_c = num.subcarrier_count;
    const int m_s = num.symbol_count;
    const int pq = cfg.bs_array.size();
    const SymbolGrid preamble = generate_preamble(num, cfg.preamble_seed);

    // The user aims its transmit beam at the BS over the synchronized link.
    const Beamformer user_tx =
        ls_transmit_bf(cfg.user_array, realization.paths().comm[0].tx_direction);

    // Per-element LS CSI stack: column m*N_c + n holds h_hat(n, m). The noise
    // term is n / (sqrt(P) d), with |d| = 1 for the preamble.
    out.stacked_csi.resize(pq, n_c * m_s);
    const double amp = std::sqrt(cfg.ul_power_w);
    const Eigen::MatrixXcd noise =
        draw_noise(pq, static_cast<Eigen::Index>(n_c) * m_s, cfg.noise_variance_w, rng);
    for (int m = 0; m < m_s; ++m) {
        for (int n = 0; n < n_c; ++n) {
            const Eigen::Index col = static_cast<Eigen::Index>(m) * n_c + n;
            const Complex d = preamble.values(n, m);
            out.stacked_csi.col(col) =
                realization.ul_response(n, m, user_tx.weights) + noise.col(col) / (amp * d);
        }
    }

    // 2D MUSIC over the UPA directions.
    const ComplexMatrix r_x = autocorrelation(out.stacked_csi);
    const EigDecomposition eig_x = hermitian_eig(r_x);
    out.spatial_signature = eig_x.eigenvectors.col(0);
    int n_sources = estimate_source_count(eig_x.eigenvalues, cfg.angle_order);
    if (n_sources >= pq) n_sources = pq - 1;
    const AngleSpectrum angle_spectrum(eig_x, n_sources, cfg.bs_array);

    RefineOptions angle_opts;
    angle_opts.grid_points = cfg.angle_grid;
    angle_opts.max_iterations = cfg.max_iterations;
    angle_opts.epsilon = cfg.epsilon_angle;
    angle_opts.refine = cfg.refine;
    std::vector<Peak2D> peaks =
        newton_refine_2d(angle_spectrum, cfg.azimuth_lo, cfg.azimuth_hi,
                         cfg.elevation_lo, cfg.elevation_hi, angle_opts);
    if (cfg.fold_elevation) {
        for (Peak2D& p : peaks) {
            if (p.p.elevation < kPi / 2.0) p.p.elevation = kPi - p.p.elevation;
        }
        // Folding can land two mirror estimates on one target.
        std::vector<Peak2D> unique;
        const double az_merge = (cfg.azimuth_hi - cfg.azimuth_lo) / (2.0 * (cfg.angle_grid - 1));
        const double el_merge = (cfg.elevation_hi - cfg.elevation_lo) / (2.0 * (cfg.angle_grid - 1));
        for (const Peak2D& p : peaks) {
            bool dup = false;
            for (const Peak2D& kept : unique) {
                if (std::abs(kept.p.azimuth - p.p.azimuth) <= az_merge &&
                    std::abs(kept.p.elevation - p.p.elevation) <= el_merge) {
                    dup = true;
                    break;
                }
            }
            if (!dup) unique.push_back(p);
        }
        peaks = std::move(unique);
    }
    if (peaks.empty()) {
        out.sensing_failed = true;
        return out;
    }
    // The user's AoA leads the set. Peaks are already ordered by spectrum
    // depth, but an exactly noiseless spectrum zeroes out at every source;
    // alignment with the dominant eigenvector (the LoS signature) breaks the
    // tie and agrees with the depth order whenever noise is present.
    std::size_t leader = 0;
    double best_alignment = -1.0;
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const ComplexVector a = steering_vector(cfg.bs_array, peaks[i].p);
        const double alignment = std::abs(out.spatial_signature.dot(a));
        if (alignment > best_alignment) {
            best_alignment = alignment;
            leader = i;
        }
    }
    out.aoas.push_back(peaks[leader].p);
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        if (i == leader) continue;
        if (out.aoas.size() >= static_cast<std::size_t>(n_sources)) break;
        out.aoas.push_back(peaks[i].p);
    }

    // LoS combining: first column of the normalized LS combiner.
    const CombinerResult combiner = rx_combiner_matrix(out.aoas, cfg.bs_array);
    out.combiner_regularized = combiner.regularized;
    out.combiner = combiner.weights.col(0);

    // h_CS = w^H H_hat, reshaped to the (subcarrier, symbol) grid.
    const Eigen::RowVectorXcd csi_row = out.combiner.adjoint() * out.stacked_csi;
    out.csi.source = CsiSource::Ulp;
    out.csi.grid.resize(n_c, m_s);
    for (int m = 0; m < m_s; ++m) {
        for (int n = 0; n < n_c; ++n) {
            out.csi.grid(n, m) = csi_row(static_cast<Eigen::Index>(m) * n_c + n);
        }
    }

    // Decoupled range and Doppler MUSIC on the CSI grid.
    RefineOptions opts_1d;
    opts_1d.max_iterations = cfg.max_iterations;
    opts_1d.refine = cfg.refine;

    const double range_window = kSpeedOfLight / num.subcarrier_spacing;
    opts_1d.grid_points = cfg.range_grid;
    opts_1d.epsilon = cfg.epsilon_range;
    const Spectrum1DOutputs range_out =
        music_1d(out.csi.grid, ExpSpectrum1D::range_omegas(num.subcarrier_spacing, n_c),
                 cfg.ul_range_order, 0.0, range_window, range_window, opts_1d);

    const double doppler_period = 1.0 / num.symbol_duration();
    double doppler_lo = -doppler_period / 2.0;
    double doppler_hi = doppler_period / 2.0;
    if (cfg.doppler_search_hi_hz > cfg.doppler_search_lo_hz) {
        doppler_lo = std::max(doppler_lo, cfg.doppler_search_lo_hz);
        doppler_hi = std::min(doppler_hi, cfg.doppler_search_hi_hz);
    }
    opts_1d.grid_points = cfg.doppler_grid;
    opts_1d.epsilon = cfg.epsilon_doppler;
    const Spectrum1DOutputs doppler_out =
        music_1d(out.csi.grid.transpose(),
                 ExpSpectrum1D::doppler_omegas(num.symbol_duration(), m_s),
                 cfg.ul_range_order, doppler_lo, doppler_hi, doppler_period, opts_1d);

    out.csi.estimated_snr = sensing_snr(range_out.eigenvalues, 1)[0];

    RdMatchSpec match_spec;
    match_spec.subcarrier_spacing = num.subcarrier_spacing;
    match_spec.symbol_duration = num.symbol_duration();
    match_spec.scale = 1.0;
    out.detections.domain = DetectionDomain::Ul;
    out.detections.entries =
        build_detections(out.csi.grid, range_out, doppler_out, match_spec, 1.0);
    for (Detection& d : out.detections.entries) d.direction = out.aoas[0];
    if (out.detections.entries.empty()) out.sensing_failed = true;
    return out;
}

CsiMatrix run_dlp(const ChannelRealization& realization, const PipelineConfig& cfg,
                  const UlpResult& ulp, std::mt19937_64& rng) {
    const OfdmNumerology& num = cfg.numerology;
    const int n_c = num.subcarrier_count;
    const int m_s = num.symbol_count;
    const SymbolGrid preamble = generate_preamble(num, cfg.preamble_seed);

    // TDD reciprocity: the DL beams reuse the UL beams conjugated, which is
    // what makes the DL per-path gains equal (not conjugate) to the UL ones.
    const ComplexVector bs_tx = ulp.combiner.conjugate();
    const Beamformer user_tx =
        ls_transmit_bf(cfg.user_array, realization.paths().comm[0].tx_direction);
    const ComplexVector user_rx = user_tx.weights.conjugate();

    CsiMatrix csi;
    csi.source = CsiSource::Dlp;
    csi.grid.resize(n_c, m_s);
    const double amp = std::sqrt(cfg.dl_power_w);
    const Eigen::MatrixXcd noise = draw_noise(
        cfg.user_array.size(), static_cast<Eigen::Index>(n_c) * m_s, cfg.noise_variance_w, rng);
    for (int m = 0; m < m_s; ++m) {
        for (int n = 0; n < n_c; ++n) {
            const Complex d = preamble.values(n, m);
            const ComplexVector y =
                amp * d * realization.dl_comm_response(n, m, bs_tx) +
                noise.col(static_cast<Eigen::Index>(m) * n_c + n);
            csi.grid(n, m) = (user_rx.adjoint() * y)(0) / (amp * d);
        }
    }

    const ComplexMatrix r = autocorrelation(csi.grid);
    const EigDecomposition eig = hermitian_eig(r);
    csi.estimated_snr = sensing_snr(eig.eigenvalues, 1)[0];
    return csi;
}

DldResult run_dld(const ChannelRealization& realization, const PipelineConfig& cfg,
                  const UlpResult& ulp, std::mt19937_64& rng) {
    if (cfg.dl_data_power_w < 0.0 || cfg.dl_data_power_w > cfg.dl_power_w) {
        throw std::invalid_argument("run_dld: data power outside [0, total]");
    }
    const OfdmNumerology& num = cfg.numerology;
    const int n_c = num.subcarrier_count;
    const int m_s = num.symbol_count;
    const int pq = cfg.bs_array.size();

    DldResult out;

    // Reference channels from the ULP estimates; r_E is the estimated user
    // range so both echoes see a comparable loss scale.
    const Direction user_dir = *ulp.detections.entries[0].direction;
    const double user_range = ulp.detections.entries[0].range;
    const ReferenceChannel doi_ref = reference_channel(
        cfg.doi_direction, user_range, cfg.bs_array, num.wavelength());
    const ReferenceChannel dou_ref =
        reference_channel(user_dir, user_range, cfg.bs_array, num.wavelength());
    const ComplexVector comm_tx = ulp.combiner.conjugate();  // w_TX^D

    out.beams = dl_jcas_beamformers(doi_ref, dou_ref, comm_tx, ulp.spatial_signature);

    // Data and probe symbol streams. Draw order: data bits, probe symbols,
    // echo noise, user-side noise.
    const QamConstellation constellation(cfg.qam_order);
    out.tx_bits = random_bits(
        static_cast<std::size_t>(num.grid_size()) * constellation.bits_per_symbol(), rng);
    const SymbolGrid data = modulate_data(out.tx_bits, constellation, num);
    const SymbolGrid probe = generate_probe(num, rng);

    const double data_amp = std::sqrt(cfg.dl_data_power_w);
    const double probe_amp = std::sqrt(cfg.probe_power_w());
    const Eigen::MatrixXcd echo_noise =
        draw_noise(pq, static_cast<Eigen::Index>(n_c) * m_s, cfg.noise_variance_w, rng);
    const Eigen::MatrixXcd user_noise = draw_noise(
        cfg.user_array.size(), static_cast<Eigen::Index>(n_c) * m_s, cfg.noise_variance_w, rng);

    const Beamformer user_tx_bf =
        ls_transmit_bf(cfg.user_array, realization.paths().comm[0].tx_direction);
    const ComplexVector user_rx = user_tx_bf.weights.conjugate();

    // Per-(n, m) nullspace mode projects the probe out of each subcarrier's
    // own CSI row; the rank-1 structure reduces it to a vector rejection.
    const ComplexVector doi_steer = steering_vector(cfg.bs_array, cfg.doi_direction);

    Eigen::MatrixXcd echo_dou(n_c, m_s);  // h_S1: DoU stream after symbol removal
    Eigen::MatrixXcd echo_doi(n_c, m_s);  // h_S2
    out.user_rx_grid.resize(n_c, m_s);

    ComplexMatrix rx_pair(pq, 2);
    rx_pair.col(0) = out.beams.comm_echo_rx;
    rx_pair.col(1) = out.beams.probe_echo_rx;

    double sig_acc = 0.0, intf_acc = 0.0;
    for (int m = 0; m < m_s; ++m) {
        for (int n = 0; n < n_c; ++n) {
            const Eigen::Index col = static_cast<Eigen::Index>(m) * n_c + n;
            const Complex d = data.values(n, m);
            const Complex ds = probe.values(n, m);

            ComplexVector probe_tx = out.beams.probe_tx;
            if (cfg.per_element_nullspace) {
                const ComplexVector h = ulp.stacked_csi.col(col).conjugate();
                ComplexVector rej = doi_steer.conjugate();
                rej -= h * (h.dot(rej) / h.squaredNorm());
                const double nrm = rej.norm();
                if (nrm > 0.0) probe_tx = rej / nrm;
            }

            const ComplexVector tx =
                data_amp * d * comm_tx + probe_amp * ds * probe_tx;
            const ComplexVector echo =
                realization.dl_echo_response(n, m, tx) + echo_noise.col(col);
            const ComplexVector r = rx_pair.adjoint() * echo;
            echo_dou(n, m) = r(0) / d;
            echo_doi(n, m) = r(1) / ds;

            // User-side data signal, Eq.-38 style: data term, probe leak, noise.
            const Complex h_cs =
                (user_rx.adjoint() * realization.dl_comm_response(n, m, comm_tx))(0);
            const Complex leak =
                (user_rx.adjoint() * realization.dl_comm_response(n, m, probe_tx))(0);
            const Complex term1 = data_amp * d * h_cs;
            const Complex term2 = probe_amp * ds * leak;
            const Complex w = (user_rx.adjoint() * user_noise.col(col))(0);
            out.user_rx_grid(n, m) = term1 + term2 + w;
            sig_acc += std::norm(term1);
            intf_acc += std::norm(term2);
        }
    }
    out.user_signal_power = sig_acc / num.grid_size();
    out.user_interference_power = intf_acc / num.grid_size();

    // Both streams carry two-way delays and Dopplers; estimates are halved
    // and the factor of two returns inside the matched-filter steering.
    RefineOptions opts_1d;
    opts_1d.max_iterations = cfg.max_iterations;
    opts_1d.refine = cfg.refine;

    const double range_window = kSpeedOfLight / num.subcarrier_spacing;
    const double doppler_period = 1.0 / num.symbol_duration();
    // Echo streams carry two-way Dopplers: the search prior doubles.
    double doppler_lo = -doppler_period / 2.0;
    double doppler_hi = doppler_period / 2.0;
    if (cfg.doppler_search_hi_hz > cfg.doppler_search_lo_hz) {
        doppler_lo = std::max(doppler_lo, 2.0 * cfg.doppler_search_lo_hz);
        doppler_hi = std::min(doppler_hi, 2.0 * cfg.doppler_search_hi_hz);
    }
    RdMatchSpec match_spec;
    match_spec.subcarrier_spacing = num.subcarrier_spacing;
    match_spec.symbol_duration = num.symbol_duration();
    match_spec.scale = 2.0;

    const RealVector range_omega = ExpSpectrum1D::range_omegas(num.subcarrier_spacing, n_c);
    const RealVector doppler_omega =
        ExpSpectrum1D::doppler_omegas(num.symbol_duration(), m_s);

    auto run_stream = [&](const Eigen::MatrixXcd& grid, const ModelOrder& order,
                          DetectionDomain domain, const Direction& dir) {
        opts_1d.grid_points = cfg.range_grid;
        opts_1d.epsilon = cfg.epsilon_range;
        const Spectrum1DOutputs range_out =
            music_1d(grid, range_omega, order, 0.0, range_window, range_window, opts_1d);
        opts_1d.grid_points = cfg.doppler_grid;
        opts_1d.epsilon = cfg.epsilon_doppler;
        const Spectrum1DOutputs doppler_out =
            music_1d(grid.transpose(), doppler_omega, order,
                     doppler_lo, doppler_hi, doppler_period, opts_1d);
        DetectionSet set;
        set.domain = domain;
        set.entries = build_detections(grid, range_out, doppler_out, match_spec, 2.0);
        for (Detection& det : set.entries) det.direction = dir;
        return set;
    };

    out.dou_detections = run_stream(echo_dou, cfg.dou_order, DetectionDomain::DlDoU, user_dir);
    out.doi_detections =
        run_stream(echo_doi, cfg.doi_order, DetectionDomain::DlDoI, cfg.doi_direction);
    return out;
}

std::vector<TargetFeature> make_features(const DetectionSet& detections) {
    std::vector<TargetFeature> features;
    for (const Detection& d : detections.entries) {
        TargetFeature f;
        f.location = location_from_polar(d.range, *d.direction);
        f.doppler = d.doppler;
        f.sensing_snr = d.sensing_snr;
        switch (detections.domain) {
            case DetectionDomain::Ul: f.origin = FeatureOrigin::Ul; break;
            case DetectionDomain::DlDoU: f.origin = FeatureOrigin::DlDoU; break;
            case DetectionDomain::DlDoI: f.origin = FeatureOrigin::DlDoI; break;
        }
        features.push_back(f);
    }
    return features;
}

BlockResult run_block(const ChannelRealization& realization, const PipelineConfig& cfg,
                      std::mt19937_64& rng) {
    BlockResult out;
    out.ulp = run_ulp(realization, cfg, rng);

    if (out.ulp.sensing_failed) {
        if (!cfg.oracle_debug) {
            out.sensing_failed = true;
            return out;
        }
        // Oracle fallback: substitute ground truth so the DL period can still
        // be exercised; the result is marked and never used for scoring.
        out.used_oracle = true;
        const TruthTarget& user = realization.paths().truth[0];
        out.ulp.sensing_failed = false;
        out.ulp.aoas = {user.direction};
        Detection d;
        d.direction = user.direction;
        d.range = user.range;
        d.doppler = user.one_way_doppler;
        d.sensing_snr = 1.0;
        out.ulp.detections.domain = DetectionDomain::Ul;
        out.ulp.detections.entries = {d};
        const CombinerResult comb = rx_combiner_matrix(out.ulp.aoas, cfg.bs_array);
        out.ulp.combiner = comb.weights.col(0);
        out.ulp.spatial_signature = steering_vector(cfg.bs_array, user.direction);
        if (out.ulp.csi.grid.size() == 0 && out.ulp.stacked_csi.size() > 0) {
            const int n_c = cfg.numerology.subcarrier_count;
            const int m_s = cfg.numerology.symbol_count;
            const Eigen::RowVectorXcd row = out.ulp.combiner.adjoint() * out.ulp.stacked_csi;
            out.ulp.csi.grid.resize(n_c, m_s);
            for (int m = 0; m < m_s; ++m) {
                for (int n = 0; n < n_c; ++n) {
                    out.ulp.csi.grid(n, m) = row(static_cast<Eigen::Index>(m) * n_c + n);
                }
            }
            const EigDecomposition eig =
                hermitian_eig(autocorrelation(out.ulp.csi.grid));
            out.ulp.csi.estimated_snr = sensing_snr(eig.eigenvalues, 1)[0];
        }
    }

    // UL data period: demodulated later against both CSI choices.
    const QamConstellation constellation(cfg.qam_order);
    const OfdmNumerology& num = cfg.numerology;
    std::vector<std::uint8_t> ul_bits = random_bits(
        static_cast<std::size_t>(num.grid_size()) * constellation.bits_per_symbol(), rng);
    const SymbolGrid ul_data = modulate_data(ul_bits, constellation, num);
    Eigen::MatrixXcd ul_rx(num.subcarrier_count, num.symbol_count);
    {
        const Beamformer user_tx =
            ls_transmit_bf(cfg.user_array, realization.paths().comm[0].tx_direction);
        const double amp = std::sqrt(cfg.ul_power_w);
        const Eigen::MatrixXcd noise =
            draw_noise(cfg.bs_array.size(),
                       static_cast<Eigen::Index>(num.subcarrier_count) * num.symbol_count,
                       cfg.noise_variance_w, rng);
        for (int m = 0; m < num.symbol_count; ++m) {
            for (int n = 0; n < num.subcarrier_count; ++n) {
                const Eigen::Index col =
                    static_cast<Eigen::Index>(m) * num.subcarrier_count + n;
                const ComplexVector y =
                    amp * ul_data.values(n, m) * realization.ul_response(n, m, user_tx.weights) +
                    noise.col(col);
                ul_rx(n, m) = (out.ulp.combiner.adjoint() * y)(0);
            }
        }
    }

    out.dl_csi = run_dlp(realization, cfg, out.ulp, rng);
    out.dld = run_dld(realization, cfg, out.ulp, rng);

    // CSI fusion (Theorem-4 weights from the estimated link SNRs).
    out.fused_csi.source = CsiSource::Fused;
    out.fused_csi.grid = fuse_csi_grids(out.ulp.csi.grid, out.dl_csi.grid,
                                        out.ulp.csi.estimated_snr,
                                        out.dl_csi.estimated_snr);
    out.fused_csi.estimated_snr =
        out.ulp.csi.estimated_snr + out.dl_csi.estimated_snr;

    // Sensing fusion between the UL set and the DL DoU set.
    out.fused = fuse_sensing(make_features(out.ulp.detections),
                             make_features(out.dld.dou_detections));

    // BER bookkeeping under fused and single-link CSI.
    const DemodResult dl_fused = demodulate_data(out.dld.user_rx_grid, out.fused_csi.grid,
                                                 cfg.dl_data_power_w, constellation);
    const DemodResult dl_single = demodulate_data(out.dld.user_rx_grid, out.dl_csi.grid,
                                                  cfg.dl_data_power_w, constellation);
    out.dl_bits = static_cast<long>(out.dld.tx_bits.size());
    out.dl_errors_fused = count_bit_errors(out.dld.tx_bits, dl_fused.bits);
    out.dl_errors_single = count_bit_errors(out.dld.tx_bits, dl_single.bits);

    const DemodResult ul_fused =
        demodulate_data(ul_rx, out.fused_csi.grid, cfg.ul_power_w, constellation);
    const DemodResult ul_single =
        demodulate_data(ul_rx, out.ulp.csi.grid, cfg.ul_power_w, constellation);
    out.ul_bits = static_cast<long>(ul_bits.size());
    out.ul_errors_fused = count_bit_errors(ul_bits, ul_fused.bits);
    out.ul_errors_single = count_bit_errors(ul_bits, ul_single.bits);
    return out;
}

}  // namespace jcas
