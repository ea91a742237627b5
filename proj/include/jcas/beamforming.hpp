#pragma once

#include <span>

#include "jcas/geometry.hpp"
#include "jcas/linalg.hpp"

namespace jcas {

enum class BeamKind { TxLs, RxCombiner, DlCommTx, DlProbeTx, EchoRxDoU, EchoRxDoI };

struct Beamformer {
    ComplexVector weights;  // unit norm
    Direction target;
    BeamKind kind = BeamKind::TxLs;
};

/// Rank-1 reference echo channel sqrt(lambda^2 / ((4 pi)^3 r_E^4)) a(p) a^T(p)
/// used to construct the DLD beamformers before the true echo channel is
/// observable.
struct ReferenceChannel {
    ComplexMatrix matrix;
    Direction direction;
    double expected_range = 0.0;
};

/// Thrown when the DoU and DoI reference channels are too close to separate:
/// nulling one erases the other.
class SeparationError : public std::runtime_error {
  public:
    SeparationError(const std::string& what, double angle_rad)
        : std::runtime_error(what), subspace_angle_rad(angle_rad) {}
    double subspace_angle_rad;
};

/// Least-squares transmit beamformer towards `dir`: the pseudo-inverse of the
/// steering row is its conjugate, rescaled here to unit norm. Aligned gain
/// |a^T(dir) w| is then sqrt(PQ).
Beamformer ls_transmit_bf(const UpaSpec& array, const Direction& dir);

struct CombinerResult {
    ComplexMatrix weights;  // one unit-norm column per direction
    bool regularized = false;
};

/// Multi-direction receive combiner W = [A A^H]^+ A with columns normalized.
/// The Gram matrix is Tikhonov-regularized (and flagged) when its condition
/// number exceeds 1e12. Requires fewer directions than array elements.
CombinerResult rx_combiner_matrix(std::span<const Direction> dirs, const UpaSpec& array);

ReferenceChannel reference_channel(const Direction& dir, double expected_range,
                                   const UpaSpec& array, double wavelength);

struct DlJcasBeamformers {
    ComplexVector comm_echo_rx;  // w^D: receives the DoU echo, nulls the DoI reference
    ComplexVector probe_echo_rx; // w^DS: receives the DoI echo, nulls the DoU reference
    ComplexVector probe_tx;      // w_TX^DS: probes DoI inside the comm-channel nullspace
};

/// Solves the two constrained max-gain problems on the reference channels:
/// each beamformer is an SVD-selected direction inside the nullspace of the
/// channel it must not excite. `ul_csi_vector` is the spatial signature of the
/// DL communication row (via reciprocity, the transposed UL CSI vector) whose
/// nullspace carries the probe. Throws SeparationError when the DoU and DoI
/// steering vectors are nearly colinear.
DlJcasBeamformers dl_jcas_beamformers(const ReferenceChannel& doi_reference,
                                      const ReferenceChannel& dou_reference,
                                      const ComplexVector& comm_tx_weights,
                                      const ComplexVector& ul_csi_vector);

}  // namespace jcas
