#include "jcas/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace jcas {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

double ScenarioConfig::noise_variance() const {
    if (noise_variance_w) return *noise_variance_w;
    constexpr double boltzmann = 1.38e-23;  // J/K
    return boltzmann * noise_figure * noise_temperature_k * numerology.bandwidth();
}

UpaSpec ScenarioConfig::bs_upa() const {
    return {bs_p, bs_q, element_spacing_wavelengths * numerology.wavelength(),
            numerology.wavelength()};
}

UpaSpec ScenarioConfig::user_upa() const {
    return {user_p, user_q, element_spacing_wavelengths * numerology.wavelength(),
            numerology.wavelength()};
}

Direction ScenarioConfig::resolved_doi_direction() const {
    if (doi_direction) return *doi_direction;
    for (const ScattererSpec& s : scene.scatterers) {
        if (s.doi_target) {
            return polar_from_offset(s.location - scene.bs_location).direction;
        }
    }
    throw ConfigError("no doi_direction configured and no scatterer marked doi");
}

PipelineConfig ScenarioConfig::pipeline_config(double ptd_dbm, Scheme run_scheme) const {
    PipelineConfig cfg;
    cfg.numerology = numerology;
    cfg.bs_array = bs_upa();
    cfg.user_array = user_upa();
    cfg.ul_power_w = dbm_to_watts(ul_power_dbm);
    cfg.dl_power_w = dbm_to_watts(dl_power_dbm);
    cfg.dl_data_power_w = dbm_to_watts(ptd_dbm);
    cfg.noise_variance_w = noise_variance();
    cfg.qam_order = qam_order;
    cfg.preamble_seed = preamble_seed;
    cfg.angle_grid = angle_grid;
    cfg.range_grid = range_grid;
    cfg.doppler_grid = doppler_grid;
    cfg.max_iterations = newton_max_iterations;
    cfg.epsilon_angle = newton_epsilon_angle_rad;
    cfg.epsilon_range = newton_epsilon_range_m;
    cfg.epsilon_doppler = newton_epsilon_doppler_hz;
    cfg.azimuth_lo = deg_to_rad(azimuth_window_deg_lo);
    cfg.azimuth_hi = deg_to_rad(azimuth_window_deg_hi);
    cfg.elevation_lo = deg_to_rad(elevation_window_deg_lo);
    cfg.elevation_hi = deg_to_rad(elevation_window_deg_hi);
    cfg.fold_elevation = fold_elevation;
    cfg.angle_order = angle_order;
    cfg.ul_range_order = ul_range_order;
    cfg.dou_order = dou_order;
    cfg.doi_order = doi_order;
    cfg.refine = run_scheme == Scheme::Duc;
    cfg.per_element_nullspace = per_element_nullspace;
    cfg.oracle_debug = oracle_debug;
    cfg.doppler_search_lo_hz = doppler_search_lo_hz;
    cfg.doppler_search_hi_hz = doppler_search_hi_hz;
    cfg.doi_direction = resolved_doi_direction();
    return cfg;
}

void ScenarioConfig::apply_full_scale() {
    numerology.subcarrier_count = 256;
    if (numerology.symbol_count < 64) numerology.symbol_count = 64;
    trials = 10000;
}

namespace {

struct Parser {
    std::string origin;
    int line = 0;
    ScenarioConfig cfg;
    bool saw_scatterer = false;

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        std::ostringstream os;
        os << origin << ":" << line << ": key '" << key << "': " << msg;
        throw ConfigError(os.str());
    }

    double to_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) fail(key, "trailing characters in number '" + v + "'");
            return x;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + v + "'");
        }
    }

    long to_long(const std::string& key, const std::string& v) const {
        const double x = to_double(key, v);
        if (x != std::floor(x)) fail(key, "expected an integer, got '" + v + "'");
        return static_cast<long>(x);
    }

    bool to_bool(const std::string& key, const std::string& v) const {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail(key, "expected true/false, got '" + v + "'");
    }

    std::vector<double> to_list(const std::string& key, const std::string& v) const {
        std::vector<double> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            out.push_back(to_double(key, trim(item)));
        }
        if (out.empty()) fail(key, "expected a comma-separated list");
        return out;
    }

    Location3D to_vec3(const std::string& key, const std::string& v) const {
        const std::vector<double> xs = to_list(key, v);
        if (xs.size() != 3) fail(key, "expected 3 components");
        return {xs[0], xs[1], xs[2]};
    }

    ModelOrder to_model_order(const std::string& key, const std::string& v) const {
        std::stringstream ss(v);
        std::string mode;
        double arg = 0.0;
        ss >> mode >> arg;
        if (ss.fail()) fail(key, "expected '<fixed|gap> <value>'");
        if (mode == "fixed") return ModelOrder::fixed(static_cast<int>(arg));
        if (mode == "gap") return ModelOrder::gap(arg);
        fail(key, "mode must be 'fixed' or 'gap'");
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    void parse_scatterer(const std::string& key, const std::string& v) {
        std::vector<std::string> parts;
        std::stringstream ss(v);
        std::string part;
        while (std::getline(ss, part, '|')) parts.push_back(trim(part));
        if (parts.size() < 4 || parts.size() > 5) {
            fail(key, "expected 'x,y,z | vx,vy,vz | variance | dou|doi [| uplink-flag]'");
        }
        ScattererSpec s;
        s.location = to_vec3(key, parts[0]);
        s.velocity = as_vector(to_vec3(key, parts[1]));
        s.reflect_variance = to_double(key, parts[2]);
        if (parts[3] == "doi") s.doi_target = true;
        else if (parts[3] != "dou") fail(key, "role must be 'dou' or 'doi'");
        if (parts.size() == 5) s.in_uplink = to_bool(key, parts[4]);
        if (!saw_scatterer) {
            cfg.scene.scatterers.clear();  // replace defaults on first entry
            saw_scatterer = true;
        }
        cfg.scene.scatterers.push_back(s);
    }

    void handle(const std::string& key, const std::string& v) {
        if (key == "schema_version") {
            if (to_long(key, v) != 1) fail(key, "unsupported schema version");
        } else if (key == "carrier_frequency_hz") {
            cfg.numerology.carrier_frequency = to_double(key, v);
        } else if (key == "subcarrier_spacing_hz") {
            cfg.numerology.subcarrier_spacing = to_double(key, v);
        } else if (key == "subcarrier_count") {
            cfg.numerology.subcarrier_count = static_cast<int>(to_long(key, v));
        } else if (key == "symbol_count") {
            cfg.numerology.symbol_count = static_cast<int>(to_long(key, v));
        } else if (key == "guard_fraction") {
            cfg.numerology.guard_fraction = to_double(key, v);
        } else if (key == "bs_array" || key == "user_array") {
            const auto x = v.find('x');
            if (x == std::string::npos) fail(key, "expected PxQ");
            const int p = static_cast<int>(to_long(key, trim(v.substr(0, x))));
            const int q = static_cast<int>(to_long(key, trim(v.substr(x + 1))));
            if (p < 1 || q < 1) fail(key, "array sizes must be >= 1");
            if (key == "bs_array") { cfg.bs_p = p; cfg.bs_q = q; }
            else { cfg.user_p = p; cfg.user_q = q; }
        } else if (key == "element_spacing_wavelengths") {
            cfg.element_spacing_wavelengths = to_double(key, v);
        } else if (key == "bs_location_m") {
            cfg.scene.bs_location = to_vec3(key, v);
        } else if (key == "bs_velocity_mps") {
            cfg.scene.bs_velocity = as_vector(to_vec3(key, v));
        } else if (key == "user_location_m") {
            cfg.scene.user_location = to_vec3(key, v);
        } else if (key == "user_velocity_mps") {
            cfg.scene.user_velocity = as_vector(to_vec3(key, v));
        } else if (key == "user_echo_reflect_variance") {
            cfg.scene.user_echo_reflect_variance = to_double(key, v);
        } else if (key == "scatterer") {
            parse_scatterer(key, v);
        } else if (key == "ul_power_dbm") {
            cfg.ul_power_dbm = to_double(key, v);
        } else if (key == "dl_power_dbm") {
            cfg.dl_power_dbm = to_double(key, v);
        } else if (key == "ptd_sweep_dbm") {
            cfg.ptd_sweep_dbm = to_list(key, v);
        } else if (key == "noise_figure") {
            cfg.noise_figure = to_double(key, v);
        } else if (key == "noise_temperature_k") {
            cfg.noise_temperature_k = to_double(key, v);
        } else if (key == "noise_variance_w") {
            cfg.noise_variance_w = to_double(key, v);
        } else if (key == "qam_order") {
            cfg.qam_order = static_cast<int>(to_long(key, v));
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(to_long(key, v));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
        } else if (key == "preamble_seed") {
            cfg.preamble_seed = static_cast<std::uint64_t>(to_long(key, v));
        } else if (key == "scheme") {
            if (v == "duc") cfg.scheme = Scheme::Duc;
            else if (v == "separated") cfg.scheme = Scheme::Separated;
            else fail(key, "expected 'duc' or 'separated'");
        } else if (key == "jobs") {
            cfg.jobs = static_cast<int>(to_long(key, v));
        } else if (key == "report_ul_ber") {
            cfg.report_ul_ber = to_bool(key, v);
        } else if (key == "angle_grid") {
            cfg.angle_grid = static_cast<int>(to_long(key, v));
        } else if (key == "range_grid") {
            cfg.range_grid = static_cast<int>(to_long(key, v));
        } else if (key == "doppler_grid") {
            cfg.doppler_grid = static_cast<int>(to_long(key, v));
        } else if (key == "newton_max_iterations") {
            cfg.newton_max_iterations = static_cast<int>(to_long(key, v));
        } else if (key == "newton_epsilon_angle_rad") {
            cfg.newton_epsilon_angle_rad = to_double(key, v);
        } else if (key == "newton_epsilon_range_m") {
            cfg.newton_epsilon_range_m = to_double(key, v);
        } else if (key == "newton_epsilon_doppler_hz") {
            cfg.newton_epsilon_doppler_hz = to_double(key, v);
        } else if (key == "azimuth_window_deg") {
            const auto xs = to_list(key, v);
            if (xs.size() != 2) fail(key, "expected 'lo, hi'");
            cfg.azimuth_window_deg_lo = xs[0];
            cfg.azimuth_window_deg_hi = xs[1];
        } else if (key == "elevation_window_deg") {
            const auto xs = to_list(key, v);
            if (xs.size() != 2) fail(key, "expected 'lo, hi'");
            cfg.elevation_window_deg_lo = xs[0];
            cfg.elevation_window_deg_hi = xs[1];
        } else if (key == "fold_elevation") {
            cfg.fold_elevation = to_bool(key, v);
        } else if (key == "model_order_angle") {
            cfg.angle_order = to_model_order(key, v);
        } else if (key == "model_order_ul_range") {
            cfg.ul_range_order = to_model_order(key, v);
        } else if (key == "model_order_dou") {
            cfg.dou_order = to_model_order(key, v);
        } else if (key == "model_order_doi") {
            cfg.doi_order = to_model_order(key, v);
        } else if (key == "min_sensing_snr") {
            cfg.min_sensing_snr = to_double(key, v);
        } else if (key == "doppler_search_hz") {
            const auto xs = to_list(key, v);
            if (xs.size() != 2 || xs[0] >= xs[1]) fail(key, "expected 'lo, hi'");
            cfg.doppler_search_lo_hz = xs[0];
            cfg.doppler_search_hi_hz = xs[1];
        } else if (key == "per_element_nullspace") {
            cfg.per_element_nullspace = to_bool(key, v);
        } else if (key == "oracle_debug") {
            cfg.oracle_debug = to_bool(key, v);
        } else if (key == "doi_direction_deg") {
            const auto xs = to_list(key, v);
            if (xs.size() != 2) fail(key, "expected 'azimuth, elevation'");
            cfg.doi_direction = Direction{deg_to_rad(xs[0]), deg_to_rad(xs[1])};
        } else {
            fail(key, "unknown key");
        }
    }
};

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
    Parser parser;
    parser.origin = origin;
    std::stringstream ss(text);
    std::string raw;
    while (std::getline(ss, raw)) {
        ++parser.line;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        const std::string s = Parser::trim(raw);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << origin << ":" << parser.line << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        const std::string key = Parser::trim(s.substr(0, eq));
        const std::string value = Parser::trim(s.substr(eq + 1));
        if (key.empty()) {
            std::ostringstream os;
            os << origin << ":" << parser.line << ": empty key";
            throw ConfigError(os.str());
        }
        parser.handle(key, value);
    }

    const ScenarioConfig& c = parser.cfg;
    if (c.numerology.subcarrier_count < 1 || c.numerology.symbol_count < 1 ||
        c.numerology.subcarrier_spacing <= 0.0 || c.numerology.carrier_frequency <= 0.0) {
        throw ConfigError(origin + ": invalid numerology");
    }
    if (c.qam_order != 4 && c.qam_order != 16 && c.qam_order != 64) {
        throw ConfigError(origin + ": qam_order must be 4, 16 or 64");
    }
    if (c.trials < 1) throw ConfigError(origin + ": trials must be >= 1");
    if (c.jobs < 1) throw ConfigError(origin + ": jobs must be >= 1");
    return parser.cfg;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string fmt_vec(const Location3D& v) {
    return fmt(v.x) + ", " + fmt(v.y) + ", " + fmt(v.z);
}

std::string fmt_vec(const Eigen::Vector3d& v) {
    return fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z());
}

std::string fmt_order(const ModelOrder& m) {
    if (m.mode == ModelOrder::Mode::Fixed) return "fixed " + std::to_string(m.fixed_count);
    return "gap " + fmt(m.gap_ratio);
}

}  // namespace

std::string format_config(const ScenarioConfig& c) {
    std::ostringstream os;
    os << "schema_version = " << c.schema_version << "\n";
    os << "carrier_frequency_hz = " << fmt(c.numerology.carrier_frequency) << "\n";
    os << "subcarrier_spacing_hz = " << fmt(c.numerology.subcarrier_spacing) << "\n";
    os << "subcarrier_count = " << c.numerology.subcarrier_count << "\n";
    os << "symbol_count = " << c.numerology.symbol_count << "\n";
    os << "guard_fraction = " << fmt(c.numerology.guard_fraction) << "\n";
    os << "bs_array = " << c.bs_p << "x" << c.bs_q << "\n";
    os << "user_array = " << c.user_p << "x" << c.user_q << "\n";
    os << "element_spacing_wavelengths = " << fmt(c.element_spacing_wavelengths) << "\n";
    os << "bs_location_m = " << fmt_vec(c.scene.bs_location) << "\n";
    os << "bs_velocity_mps = " << fmt_vec(c.scene.bs_velocity) << "\n";
    os << "user_location_m = " << fmt_vec(c.scene.user_location) << "\n";
    os << "user_velocity_mps = " << fmt_vec(c.scene.user_velocity) << "\n";
    os << "user_echo_reflect_variance = " << fmt(c.scene.user_echo_reflect_variance) << "\n";
    for (const ScattererSpec& s : c.scene.scatterers) {
        os << "scatterer = " << fmt_vec(s.location) << " | " << fmt_vec(s.velocity) << " | "
           << fmt(s.reflect_variance) << " | " << (s.doi_target ? "doi" : "dou") << " | "
           << (s.in_uplink ? "true" : "false") << "\n";
    }
    os << "ul_power_dbm = " << fmt(c.ul_power_dbm) << "\n";
    os << "dl_power_dbm = " << fmt(c.dl_power_dbm) << "\n";
    os << "ptd_sweep_dbm = ";
    for (std::size_t i = 0; i < c.ptd_sweep_dbm.size(); ++i) {
        os << (i ? ", " : "") << fmt(c.ptd_sweep_dbm[i]);
    }
    os << "\n";
    os << "noise_figure = " << fmt(c.noise_figure) << "\n";
    os << "noise_temperature_k = " << fmt(c.noise_temperature_k) << "\n";
    if (c.noise_variance_w) os << "noise_variance_w = " << fmt(*c.noise_variance_w) << "\n";
    os << "qam_order = " << c.qam_order << "\n";
    os << "trials = " << c.trials << "\n";
    os << "seed = " << c.seed << "\n";
    os << "preamble_seed = " << c.preamble_seed << "\n";
    os << "scheme = " << (c.scheme == Scheme::Duc ? "duc" : "separated") << "\n";
    os << "jobs = " << c.jobs << "\n";
    os << "report_ul_ber = " << (c.report_ul_ber ? "true" : "false") << "\n";
    os << "angle_grid = " << c.angle_grid << "\n";
    os << "range_grid = " << c.range_grid << "\n";
    os << "doppler_grid = " << c.doppler_grid << "\n";
    os << "newton_max_iterations = " << c.newton_max_iterations << "\n";
    os << "newton_epsilon_angle_rad = " << fmt(c.newton_epsilon_angle_rad) << "\n";
    os << "newton_epsilon_range_m = " << fmt(c.newton_epsilon_range_m) << "\n";
    os << "newton_epsilon_doppler_hz = " << fmt(c.newton_epsilon_doppler_hz) << "\n";
    os << "azimuth_window_deg = " << fmt(c.azimuth_window_deg_lo) << ", "
       << fmt(c.azimuth_window_deg_hi) << "\n";
    os << "elevation_window_deg = " << fmt(c.elevation_window_deg_lo) << ", "
       << fmt(c.elevation_window_deg_hi) << "\n";
    os << "fold_elevation = " << (c.fold_elevation ? "true" : "false") << "\n";
    os << "model_order_angle = " << fmt_order(c.angle_order) << "\n";
    os << "model_order_ul_range = " << fmt_order(c.ul_range_order) << "\n";
    os << "model_order_dou = " << fmt_order(c.dou_order) << "\n";
    os << "model_order_doi = " << fmt_order(c.doi_order) << "\n";
    os << "min_sensing_snr = " << fmt(c.min_sensing_snr) << "\n";
    if (c.doppler_search_hi_hz > c.doppler_search_lo_hz) {
        os << "doppler_search_hz = " << fmt(c.doppler_search_lo_hz) << ", "
           << fmt(c.doppler_search_hi_hz) << "\n";
    }
    os << "per_element_nullspace = " << (c.per_element_nullspace ? "true" : "false") << "\n";
    os << "oracle_debug = " << (c.oracle_debug ? "true" : "false") << "\n";
    if (c.doi_direction) {
        os << "doi_direction_deg = " << fmt(rad_to_deg(c.doi_direction->azimuth)) << ", "
           << fmt(rad_to_deg(c.doi_direction->elevation)) << "\n";
    }
    return os.str();
}

}  // namespace jcas
