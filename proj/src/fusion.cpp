#include "jcas/fusion.hpp"

#include <algorithm>

namespace jcas {

RealMatrix normalized_distance_matrix(std::span<const TargetFeature> set_a,
                                      std::span<const TargetFeature> set_b) {
    if (set_a.empty() || set_b.empty()) {
        throw std::invalid_argument("normalized_distance_matrix: empty feature set");
    }
    const Eigen::Index ka = static_cast<Eigen::Index>(set_a.size());
    const Eigen::Index kb = static_cast<Eigen::Index>(set_b.size());
    RealMatrix z_loc(ka, kb), z_dop(ka, kb);
    for (Eigen::Index i = 0; i < ka; ++i) {
        for (Eigen::Index j = 0; j < kb; ++j) {
            z_loc(i, j) = squared_distance(set_a[i].location, set_b[j].location);
            const double df = set_a[i].doppler - set_b[j].doppler;
            z_dop(i, j) = df * df;
        }
    }
    const double max_loc = z_loc.maxCoeff();
    const double max_dop = z_dop.maxCoeff();
    RealMatrix z = RealMatrix::Zero(ka, kb);
    if (max_loc > 0.0) z += z_loc / max_loc;
    if (max_dop > 0.0) z += z_dop / max_dop;
    return z;
}

ScalarFusion fuse_estimates(double v1, double var1, double v2, double var2) {
    if (var1 <= 0.0 || var2 <= 0.0) {
        throw std::invalid_argument("fuse_estimates: variances must be positive");
    }
    ScalarFusion out;
    out.alpha = var1 / (var1 + var2);
    out.value = v1 + out.alpha * (v2 - v1);
    return out;
}

Location3D fuse_locations(const Location3D& v1, const Location3D& v2, double alpha) {
    return {v1.x + alpha * (v2.x - v1.x),
            v1.y + alpha * (v2.y - v1.y),
            v1.z + alpha * (v2.z - v1.z)};
}

std::vector<FusedFeature> fuse_sensing(std::span<const TargetFeature> ul_set,
                                       std::span<const TargetFeature> dl_dou_set) {
    std::vector<FusedFeature> fused;

    if (dl_dou_set.empty()) {
        for (const TargetFeature& u : ul_set) {
            FusedFeature f;
            f.location = u.location;
            f.doppler = u.doppler;
            f.is_user = true;
            f.contributors = {u.origin};
            fused.push_back(std::move(f));
        }
        return fused;
    }
    if (ul_set.empty()) {
        for (const TargetFeature& d : dl_dou_set) {
            FusedFeature f;
            f.location = d.location;
            f.doppler = d.doppler;
            f.contributors = {d.origin};
            fused.push_back(std::move(f));
        }
        return fused;
    }

    const RealMatrix z = normalized_distance_matrix(ul_set, dl_dou_set);
    std::vector<bool> matched(dl_dou_set.size(), false);
    for (std::size_t k = 0; k < ul_set.size(); ++k) {
        Eigen::Index best;
        z.row(static_cast<Eigen::Index>(k)).minCoeff(&best);
        const TargetFeature& u = ul_set[k];
        const TargetFeature& d = dl_dou_set[static_cast<std::size_t>(best)];
        matched[static_cast<std::size_t>(best)] = true;

        const double var_u = 1.0 / u.sensing_snr;
        const double var_d = 1.0 / d.sensing_snr;
        const double alpha = var_u / (var_u + var_d);

        FusedFeature f;
        f.location = fuse_locations(u.location, d.location, alpha);
        f.doppler = u.doppler + alpha * (d.doppler - u.doppler);
        f.is_user = true;
        f.contributors = {u.origin, d.origin};
        f.alpha = alpha;
        f.match_distance = z(static_cast<Eigen::Index>(k), best);
        f.matched_index = static_cast<std::size_t>(best);
        fused.push_back(std::move(f));
    }
    for (std::size_t l = 0; l < dl_dou_set.size(); ++l) {
        if (matched[l]) continue;
        const TargetFeature& d = dl_dou_set[l];
        FusedFeature f;
        f.location = d.location;
        f.doppler = d.doppler;
        f.contributors = {d.origin};
        fused.push_back(std::move(f));
    }
    return fused;
}

Eigen::MatrixXcd fuse_csi_grids(const Eigen::MatrixXcd& ul_grid,
                                const Eigen::MatrixXcd& dl_grid,
                                double gamma_u, double gamma_d) {
    if (ul_grid.rows() != dl_grid.rows() || ul_grid.cols() != dl_grid.cols()) {
        throw std::invalid_argument("fuse_csi_grids: grid shapes differ");
    }
    if (gamma_u <= 0.0 || gamma_d <= 0.0) {
        throw std::invalid_argument("fuse_csi_grids: SNRs must be positive");
    }
    const double var_u = 1.0 / gamma_u;
    const double var_d = 1.0 / gamma_d;
    const double alpha = var_u / (var_u + var_d);
    return ul_grid + alpha * (dl_grid - ul_grid);
}

}  // namespace jcas
