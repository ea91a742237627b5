#include "jcas/beamforming.hpp"

namespace jcas {

Beamformer ls_transmit_bf(const UpaSpec& array, const Direction& dir) {
    Beamformer bf;
    bf.kind = BeamKind::TxLs;
    bf.target = dir;
    // [a^T]^+ = a^* / ||a||^2; unit-norm scaling absorbs the arbitrary c0.
    const ComplexVector a = steering_vector(array, dir);
    bf.weights = a.conjugate() / a.norm();
    return bf;
}

CombinerResult rx_combiner_matrix(std::span<const Direction> dirs, const UpaSpec& array) {
    if (dirs.empty()) {
        throw std::invalid_argument("rx_combiner_matrix: no directions");
    }
    if (static_cast<int>(dirs.size()) >= array.size()) {
        throw std::invalid_argument("rx_combiner_matrix: need fewer directions than elements");
    }
    const ComplexMatrix a = steering_matrix(array, dirs);

    // [A A^H]^+ A = A (A^H A)^{-1}: work on the small Gram matrix.
    ComplexMatrix gram = a.adjoint() * a;
    CombinerResult out;
    {
        const EigDecomposition eig = hermitian_eig(gram);
        const double lo = eig.eigenvalues(eig.eigenvalues.size() - 1);
        const double hi = eig.eigenvalues(0);
        if (lo <= 0.0 || hi / lo > 1e12) {
            const double ridge = 1e-10 * gram.real().trace() / array.size();
            gram += ridge * ComplexMatrix::Identity(gram.rows(), gram.cols());
            out.regularized = true;
        }
    }
    ComplexMatrix w = a * gram.inverse();
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w.col(c) /= w.col(c).norm();
    }
    out.weights = std::move(w);
    return out;
}

ReferenceChannel reference_channel(const Direction& dir, double expected_range,
                                   const UpaSpec& array, double wavelength) {
    if (expected_range <= 0.0) {
        throw std::invalid_argument("reference_channel: expected range must be positive");
    }
    const double four_pi = 4.0 * kPi;
    const double amplitude =
        wavelength / std::sqrt(four_pi * four_pi * four_pi) / (expected_range * expected_range);
    const ComplexVector a = steering_vector(array, dir);
    ReferenceChannel ref;
    ref.direction = dir;
    ref.expected_range = expected_range;
    ref.matrix = amplitude * (a * a.transpose());
    return ref;
}

DlJcasBeamformers dl_jcas_beamformers(const ReferenceChannel& doi_reference,
                                      const ReferenceChannel& dou_reference,
                                      const ComplexVector& comm_tx_weights,
                                      const ComplexVector& ul_csi_vector) {
    const Eigen::Index n = doi_reference.matrix.rows();
    if (ul_csi_vector.size() != n || ul_csi_vector.norm() == 0.0) {
        throw std::invalid_argument("dl_jcas_beamformers: bad UL CSI vector");
    }

    const SvdDecomposition s_rs = svd(doi_reference.matrix);
    const SvdDecomposition s_is = svd(dou_reference.matrix);

    // Colinear reference channels cannot be separated by nulling.
    {
        const double corr = std::min(std::abs(s_rs.left.col(0).dot(s_is.left.col(0))), 1.0);
        if (corr > 0.999) {
            throw SeparationError("dl_jcas_beamformers: DoU and DoI nearly colinear",
                                  std::acos(corr));
        }
    }

    DlJcasBeamformers out;

    // Probe transmit: nullspace of the communication row, steered to maximize
    // the DoI reference response.
    const ComplexMatrix comm_row = ul_csi_vector.transpose();  // stands in for h_C^D
    const ComplexMatrix v_comm_null = nullspace_basis(comm_row, 1);
    // Left nullspaces of the rank-1 reference channels.
    const ComplexMatrix u_rs_null = s_rs.left.rightCols(n - 1);
    const ComplexMatrix u_is_null = s_is.left.rightCols(n - 1);

    // w^D = U_RS^null [U_IS]_{:,1}: the dominant left direction of the
    // DoI-nulled DoU response.
    {
        const ComplexMatrix projected =
            u_rs_null.adjoint() * (dou_reference.matrix * comm_tx_weights);
        const SvdDecomposition s = svd(projected);
        out.comm_echo_rx = u_rs_null * s.left.col(0);
    }
    // w^DS and w_TX^DS from the dominant singular pair of the DoU-nulled DoI
    // reference restricted to the comm nullspace.
    {
        const ComplexMatrix projected =
            u_is_null.adjoint() * doi_reference.matrix * v_comm_null;
        const SvdDecomposition s = svd(projected);
        out.probe_echo_rx = u_is_null * s.left.col(0);
        out.probe_tx = v_comm_null * s.right.col(0);
    }
    return out;
}

}  // namespace jcas
