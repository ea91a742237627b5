#pragma once

#include <random>
#include <vector>

#include "jcas/geometry.hpp"
#include "jcas/waveform.hpp"

namespace jcas {

enum class PathKind { LosUser, UserEcho, Scatterer };

/// One dumb scatterer in the scene. `in_uplink` controls whether the
/// user-scatterer-BS bounce appears in the UL/DL communication channel (the
/// scatterer always reflects the BS echo). `doi_target` marks the scatterer
/// as the direction-of-interest target: it is aimed at by the probe beam and
/// scored under the DoI cases.
struct ScattererSpec {
    Location3D location;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
    double reflect_variance = 1.0;
    bool in_uplink = true;
    bool doi_target = false;
};

struct SceneGeometry {
    Location3D bs_location;
    Eigen::Vector3d bs_velocity = Eigen::Vector3d::Zero();
    Location3D user_location;
    Eigen::Vector3d user_velocity = Eigen::Vector3d::Zero();
    double user_echo_reflect_variance = 1.0;
    std::vector<ScattererSpec> scatterers;
};

/// Deterministic per-path constants of the UL/DL communication channel:
/// aggregate delay and Doppler over both hops, and the attenuation before the
/// reflect factor is applied (the LoS path has no reflect factor).
struct CommPathParams {
    PathKind kind = PathKind::LosUser;
    Direction rx_direction;  // AoA at the BS array
    Direction tx_direction;  // AoD at the user array
    double delay = 0.0;
    double doppler = 0.0;
    double amplitude = 0.0;
    bool has_reflect_factor = false;
    double reflect_variance = 0.0;
};

/// Deterministic per-path constants of the BS echo channel. AoA equals AoD.
struct EchoPathParams {
    PathKind kind = PathKind::UserEcho;
    Direction direction;
    double delay = 0.0;           // two-way
    double doppler = 0.0;         // two-way
    double amplitude = 0.0;       // before reflect factor
    double reflect_variance = 0.0;
    double range = 0.0;           // one-way ground truth
    double radial_speed = 0.0;    // one-way closing speed, ground truth
};

/// Ground truth of one sensing target, in the BS local frame.
struct TruthTarget {
    PathKind kind = PathKind::LosUser;
    bool doi_target = false;
    Location3D offset;        // target - BS
    double range = 0.0;
    Direction direction;
    double radial_speed = 0.0;  // closing speed towards the BS
    double one_way_doppler = 0.0;
};

struct PathTable {
    std::vector<CommPathParams> comm;  // [0] is the LoS path
    std::vector<EchoPathParams> echo;  // [0] is the user echo
    std::vector<TruthTarget> truth;    // [0] is the user
};

/// Derives all path constants from the scene. Throws std::invalid_argument
/// on coincident endpoints. Doppler sign convention: positive for closing.
PathTable derive_path_parameters(const SceneGeometry& scene, double wavelength);

/// One coherence block: path constants with reflect factors drawn once
/// (block fading), plus cached steering vectors. Channel responses for any
/// (n, m) are generated on demand; the full tensor is never materialized.
class ChannelRealization {
  public:
    ChannelRealization(PathTable table, const OfdmNumerology& numerology,
                       const UpaSpec& bs_array, const UpaSpec& user_array,
                       std::mt19937_64& rng);

    const PathTable& paths() const { return table_; }
    const std::vector<Complex>& comm_gains() const { return comm_gains_; }
    const std::vector<Complex>& echo_gains() const { return echo_gains_; }
    const UpaSpec& bs_array() const { return bs_array_; }
    const UpaSpec& user_array() const { return user_array_; }

    /// Eq.-style responses at subcarrier n, symbol m.
    ComplexMatrix ul_channel_at(int n, int m) const;       // PtQt x PrQr
    ComplexMatrix dl_comm_channel_at(int n, int m) const;  // transpose of UL
    ComplexMatrix dl_echo_channel_at(int n, int m) const;  // PtQt x PtQt

    /// Channel applied to a transmit vector without forming the matrix.
    ComplexVector ul_response(int n, int m, const ComplexVector& user_tx) const;
    ComplexVector dl_comm_response(int n, int m, const ComplexVector& bs_tx) const;
    ComplexVector dl_echo_response(int n, int m, const ComplexVector& bs_tx) const;

    Complex comm_phase(std::size_t path, int n, int m) const;
    Complex echo_phase(std::size_t path, int n, int m) const;

    const ComplexVector& comm_rx_steering(std::size_t path) const { return comm_rx_[path]; }
    const ComplexVector& comm_tx_steering(std::size_t path) const { return comm_tx_[path]; }
    const ComplexVector& echo_steering(std::size_t path) const { return echo_dir_[path]; }

  private:
    PathTable table_;
    UpaSpec bs_array_;
    UpaSpec user_array_;
    double symbol_duration_;
    double subcarrier_spacing_;
    std::vector<Complex> comm_gains_;  // amplitude x reflect factor
    std::vector<Complex> echo_gains_;
    std::vector<ComplexVector> comm_rx_;   // BS side
    std::vector<ComplexVector> comm_tx_;   // user side
    std::vector<ComplexVector> echo_dir_;  // BS side, AoA == AoD
};

/// Convenience constructor: derive paths, then draw the block's reflect
/// factors from `rng` (communication paths in scene order, then echo paths).
ChannelRealization make_realization(const SceneGeometry& scene,
                                    const OfdmNumerology& numerology,
                                    const UpaSpec& bs_array, const UpaSpec& user_array,
                                    std::mt19937_64& rng);

/// i.i.d. circularly symmetric complex Gaussian samples with total variance
/// `variance` per entry (variance/2 per real component).
Eigen::MatrixXcd draw_noise(Eigen::Index rows, Eigen::Index cols, double variance,
                            std::mt19937_64& rng);

Complex draw_cscg(double variance, std::mt19937_64& rng);

}  // namespace jcas
