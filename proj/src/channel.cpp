#include "jcas/channel.hpp"

namespace jcas {

namespace {

constexpr double kMinSeparation = 1e-9;  // meters

double free_space_los_amplitude(double wavelength, double range) {
    return wavelength / (4.0 * kPi * range);
}

// sqrt(lambda^2 / ((4 pi)^3 r1^2 r2^2)), the two-hop bounce attenuation.
double bounce_amplitude(double wavelength, double r1, double r2) {
    const double four_pi = 4.0 * kPi;
    return wavelength / std::sqrt(four_pi * four_pi * four_pi) / (r1 * r2);
}

}  // namespace

PathTable derive_path_parameters(const SceneGeometry& scene, double wavelength) {
    PathTable table;

    const Location3D user_offset = scene.user_location - scene.bs_location;
    const double user_range = norm(user_offset);
    if (user_range < kMinSeparation) {
        throw std::invalid_argument("derive_path_parameters: BS and user coincide");
    }
    const double user_closing = closing_speed(scene.user_location, scene.user_velocity,
                                              scene.bs_location, scene.bs_velocity);

    // LoS path, Doppler v0 / lambda, delay r / c, amplitude lambda / (4 pi r).
    CommPathParams los;
    los.kind = PathKind::LosUser;
    los.rx_direction = polar_from_offset(user_offset).direction;
    los.tx_direction = polar_from_offset(scene.bs_location - scene.user_location).direction;
    los.delay = user_range / kSpeedOfLight;
    los.doppler = user_closing / wavelength;
    los.amplitude = free_space_los_amplitude(wavelength, user_range);
    table.comm.push_back(los);

    TruthTarget user_truth;
    user_truth.kind = PathKind::LosUser;
    user_truth.offset = user_offset;
    user_truth.range = user_range;
    user_truth.direction = los.rx_direction;
    user_truth.radial_speed = user_closing;
    user_truth.one_way_doppler = los.doppler;
    table.truth.push_back(user_truth);

    // User echo: two-way delay/Doppler, Swerling reflect factor.
    EchoPathParams user_echo;
    user_echo.kind = PathKind::UserEcho;
    user_echo.direction = los.rx_direction;
    user_echo.delay = 2.0 * user_range / kSpeedOfLight;
    user_echo.doppler = 2.0 * user_closing / wavelength;
    user_echo.amplitude = bounce_amplitude(wavelength, user_range, user_range);
    user_echo.reflect_variance = scene.user_echo_reflect_variance;
    user_echo.range = user_range;
    user_echo.radial_speed = user_closing;
    table.echo.push_back(user_echo);

    for (const ScattererSpec& s : scene.scatterers) {
        const Location3D bs_offset = s.location - scene.bs_location;
        const double r_bs = norm(bs_offset);
        const Location3D user_hop = s.location - scene.user_location;
        const double r_user = norm(user_hop);
        if (r_bs < kMinSeparation || r_user < kMinSeparation) {
            throw std::invalid_argument("derive_path_parameters: scatterer coincides with an endpoint");
        }
        const Direction dir_from_bs = polar_from_offset(bs_offset).direction;
        const double closing_bs = closing_speed(s.location, s.velocity,
                                                scene.bs_location, scene.bs_velocity);

        if (s.in_uplink) {
            // Aggregate both hops: user->scatterer and scatterer->BS.
            const double closing_user = closing_speed(s.location, s.velocity,
                                                      scene.user_location, scene.user_velocity);
            CommPathParams bounce;
            bounce.kind = PathKind::Scatterer;
            bounce.rx_direction = dir_from_bs;
            bounce.tx_direction = polar_from_offset(user_hop).direction;
            bounce.delay = (r_user + r_bs) / kSpeedOfLight;
            bounce.doppler = (closing_user + closing_bs) / wavelength;
            bounce.amplitude = bounce_amplitude(wavelength, r_user, r_bs);
            bounce.has_reflect_factor = true;
            bounce.reflect_variance = s.reflect_variance;
            table.comm.push_back(bounce);
        }

        EchoPathParams echo;
        echo.kind = PathKind::Scatterer;
        echo.direction = dir_from_bs;
        echo.delay = 2.0 * r_bs / kSpeedOfLight;
        echo.doppler = 2.0 * closing_bs / wavelength;
        echo.amplitude = bounce_amplitude(wavelength, r_bs, r_bs);
        echo.reflect_variance = s.reflect_variance;
        echo.range = r_bs;
        echo.radial_speed = closing_bs;
        table.echo.push_back(echo);

        TruthTarget truth;
        truth.kind = PathKind::Scatterer;
        truth.doi_target = s.doi_target;
        truth.offset = bs_offset;
        truth.range = r_bs;
        truth.direction = dir_from_bs;
        truth.radial_speed = closing_bs;
        truth.one_way_doppler = closing_bs / wavelength;
        table.truth.push_back(truth);
    }
    return table;
}

ChannelRealization::ChannelRealization(PathTable table, const OfdmNumerology& numerology,
                                       const UpaSpec& bs_array, const UpaSpec& user_array,
                                       std::mt19937_64& rng)
    : table_(std::move(table)),
      bs_array_(bs_array),
      user_array_(user_array),
      symbol_duration_(numerology.symbol_duration()),
      subcarrier_spacing_(numerology.subcarrier_spacing) {
    // Block fading: reflect factors drawn once per realization, communication
    // paths first (scene order), then echo paths.
    comm_gains_.reserve(table_.comm.size());
    for (const CommPathParams& p : table_.comm) {
        Complex beta(1.0, 0.0);
        if (p.has_reflect_factor) beta = draw_cscg(p.reflect_variance, rng);
        comm_gains_.push_back(p.amplitude * beta);
    }
    echo_gains_.reserve(table_.echo.size());
    for (const EchoPathParams& p : table_.echo) {
        echo_gains_.push_back(p.amplitude * draw_cscg(p.reflect_variance, rng));
    }

    for (const CommPathParams& p : table_.comm) {
        comm_rx_.push_back(steering_vector(bs_array_, p.rx_direction));
        comm_tx_.push_back(steering_vector(user_array_, p.tx_direction));
    }
    for (const EchoPathParams& p : table_.echo) {
        echo_dir_.push_back(steering_vector(bs_array_, p.direction));
    }
}

Complex ChannelRealization::comm_phase(std::size_t path, int n, int m) const {
    const CommPathParams& p = table_.comm[path];
    const double arg = 2.0 * kPi * (p.doppler * m * symbol_duration_ -
                                    n * subcarrier_spacing_ * p.delay);
    return Complex(std::cos(arg), std::sin(arg));
}

Complex ChannelRealization::echo_phase(std::size_t path, int n, int m) const {
    const EchoPathParams& p = table_.echo[path];
    const double arg = 2.0 * kPi * (p.doppler * m * symbol_duration_ -
                                    n * subcarrier_spacing_ * p.delay);
    return Complex(std::cos(arg), std::sin(arg));
}

ComplexMatrix ChannelRealization::ul_channel_at(int n, int m) const {
    ComplexMatrix h = ComplexMatrix::Zero(bs_array_.size(), user_array_.size());
    for (std::size_t l = 0; l < table_.comm.size(); ++l) {
        h.noalias() += comm_gains_[l] * comm_phase(l, n, m) * comm_rx_[l] *
                       comm_tx_[l].transpose();
    }
    return h;
}

ComplexMatrix ChannelRealization::dl_comm_channel_at(int n, int m) const {
    return ul_channel_at(n, m).transpose();
}

ComplexMatrix ChannelRealization::dl_echo_channel_at(int n, int m) const {
    ComplexMatrix h = ComplexMatrix::Zero(bs_array_.size(), bs_array_.size());
    for (std::size_t l = 0; l < table_.echo.size(); ++l) {
        h.noalias() += echo_gains_[l] * echo_phase(l, n, m) * echo_dir_[l] *
                       echo_dir_[l].transpose();
    }
    return h;
}

ComplexVector ChannelRealization::ul_response(int n, int m, const ComplexVector& user_tx) const {
    ComplexVector y = ComplexVector::Zero(bs_array_.size());
    for (std::size_t l = 0; l < table_.comm.size(); ++l) {
        const Complex coupled = comm_tx_[l].transpose() * user_tx;
        y.noalias() += comm_gains_[l] * comm_phase(l, n, m) * coupled * comm_rx_[l];
    }
    return y;
}

ComplexVector ChannelRealization::dl_comm_response(int n, int m, const ComplexVector& bs_tx) const {
    ComplexVector y = ComplexVector::Zero(user_array_.size());
    for (std::size_t l = 0; l < table_.comm.size(); ++l) {
        const Complex coupled = comm_rx_[l].transpose() * bs_tx;
        y.noalias() += comm_gains_[l] * comm_phase(l, n, m) * coupled * comm_tx_[l];
    }
    return y;
}

ComplexVector ChannelRealization::dl_echo_response(int n, int m, const ComplexVector& bs_tx) const {
    ComplexVector y = ComplexVector::Zero(bs_array_.size());
    for (std::size_t l = 0; l < table_.echo.size(); ++l) {
        const Complex coupled = echo_dir_[l].transpose() * bs_tx;
        y.noalias() += echo_gains_[l] * echo_phase(l, n, m) * coupled * echo_dir_[l];
    }
    return y;
}

ChannelRealization make_realization(const SceneGeometry& scene,
                                    const OfdmNumerology& numerology,
                                    const UpaSpec& bs_array, const UpaSpec& user_array,
                                    std::mt19937_64& rng) {
    return ChannelRealization(derive_path_parameters(scene, numerology.wavelength()),
                              numerology, bs_array, user_array, rng);
}

Complex draw_cscg(double variance, std::mt19937_64& rng) {
    if (variance < 0.0) {
        throw std::invalid_argument("draw_cscg: negative variance");
    }
    if (variance == 0.0) {
        return Complex(0.0, 0.0);
    }
    std::normal_distribution<double> component(0.0, std::sqrt(variance / 2.0));
    const double re = component(rng);
    const double im = component(rng);
    return Complex(re, im);
}

Eigen::MatrixXcd draw_noise(Eigen::Index rows, Eigen::Index cols, double variance,
                            std::mt19937_64& rng) {
    Eigen::MatrixXcd noise(rows, cols);
    if (variance == 0.0) {
        noise.setZero();
        return noise;
    }
    if (variance < 0.0) {
        throw std::invalid_argument("draw_noise: negative variance");
    }
    std::normal_distribution<double> component(0.0, std::sqrt(variance / 2.0));
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double re = component(rng);
            const double im = component(rng);
            noise(r, c) = Complex(re, im);
        }
    }
    return noise;
}

}  // namespace jcas
