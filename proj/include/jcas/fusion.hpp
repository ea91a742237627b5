#pragma once

#include <optional>
#include <span>
#include <vector>

#include "jcas/geometry.hpp"
#include "jcas/linalg.hpp"

namespace jcas {

enum class FeatureOrigin { Ul, DlDoU, DlDoI };

/// One detected target's feature point: location in the BS frame plus
/// one-way Doppler, with the sensing SNR standing in for the inverse
/// estimation variance.
struct TargetFeature {
    Location3D location;
    double doppler = 0.0;
    double sensing_snr = 0.0;  // > 0
    FeatureOrigin origin = FeatureOrigin::Ul;
};

struct FusedFeature {
    Location3D location;
    double doppler = 0.0;
    bool is_user = false;
    std::vector<FeatureOrigin> contributors;
    std::optional<double> alpha;           // present iff two contributors
    std::optional<double> match_distance;  // normalized distance of the match
    std::optional<std::size_t> matched_index;  // index into the DL set
};

/// Normalized pairwise distance: squared location distances and squared
/// Doppler distances, each divided by its own maximum. A term whose maximum
/// is exactly zero is uninformative and contributes a zero matrix. Entries
/// lie in [0, 2].
RealMatrix normalized_distance_matrix(std::span<const TargetFeature> set_a,
                                      std::span<const TargetFeature> set_b);

struct ScalarFusion {
    double value = 0.0;
    double alpha = 0.0;
};

/// Inverse-variance weighted fusion of two independent estimates:
/// alpha* = var1 / (var1 + var2), fused = v1 + alpha* (v2 - v1), with fused
/// variance var1 var2 / (var1 + var2). Throws on nonpositive variances.
ScalarFusion fuse_estimates(double v1, double var1, double v2, double var2);

/// Componentwise location fusion with one shared alpha per pair.
Location3D fuse_locations(const Location3D& v1, const Location3D& v2, double alpha);

/// Matches every UL feature to its normalized-distance argmin among the
/// DL DoU features and fuses the pair (variances = 1 / sensing SNR); matched
/// pairs are marked as the user. Unmatched DL features are appended as dumb
/// targets. An empty DL set passes the UL features through unfused.
std::vector<FusedFeature> fuse_sensing(std::span<const TargetFeature> ul_set,
                                       std::span<const TargetFeature> dl_dou_set);

/// Entrywise CSI fusion with a single scalar alpha from the two link SNRs
/// (variances sigma^2 = 1/gamma). Returns the fused grid; the caller owns the
/// bookkeeping of the combined SNR gamma_u + gamma_d.
Eigen::MatrixXcd fuse_csi_grids(const Eigen::MatrixXcd& ul_grid,
                                const Eigen::MatrixXcd& dl_grid,
                                double gamma_u, double gamma_d);

}  // namespace jcas
