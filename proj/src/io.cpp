#include "rotrec/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "binary payloads are little-endian");

namespace rotrec::io {

std::string fnv1a_hex(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_string(const std::string& s) { return fnv1a_hex(s.data(), s.size()); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io-error", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string hash_file(const std::filesystem::path& p) { return hash_string(read_file(p)); }

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const auto tmp = std::filesystem::path(path.string() + ".partial");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("io-error", "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail("io-error", "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) fail("parse-error", "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat3_to_json(const Mat3& m) {
    json arr = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
    return arr;
}

Mat3 mat3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 9) fail("parse-error", "expected a flattened 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = j[static_cast<std::size_t>(3 * r + c)].get<double>();
    return m;
}

}  // namespace

json phantom_to_json(const phantom::Phantom& ph) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "phantom";
    json pts = json::array();
    for (const auto& p : ph.points()) pts.push_back(vec3_to_json(p));
    j["points"] = pts;
    j["weights"] = ph.weights();
    j["profile"] = {
        {"kind", ph.profile().kind == phantom::BlobProfile::Kind::Gaussian ? "gaussian"
                                                                           : "ball-indicator"},
        {"radius_or_sigma", ph.profile().radius_or_sigma}};
    j["support_radius"] = ph.support_radius();
    return j;
}

phantom::Phantom phantom_from_json(const json& j) {
    if (!j.contains("format_version")) fail("parse-error", "phantom: missing format_version");
    if (j.value("kind", "") != "phantom") fail("parse-error", "phantom: wrong document kind");
    pointset::PointSet pts;
    for (const auto& p : j.at("points")) pts.push_back(vec3_from_json(p));
    std::vector<double> w = j.at("weights").get<std::vector<double>>();
    phantom::BlobProfile prof;
    const std::string kind = j.at("profile").at("kind").get<std::string>();
    if (kind == "gaussian")
        prof.kind = phantom::BlobProfile::Kind::Gaussian;
    else if (kind == "ball-indicator")
        prof.kind = phantom::BlobProfile::Kind::BallIndicator;
    else
        fail("parse-error", "phantom: unknown profile kind " + kind);
    prof.radius_or_sigma = j.at("profile").at("radius_or_sigma").get<double>();
    return phantom::Phantom(std::move(pts), std::move(w), prof,
                            j.at("support_radius").get<double>());
}

void save_phantom(const phantom::Phantom& ph, const std::filesystem::path& path) {
    atomic_write(path, phantom_to_json(ph).dump(2) + "\n");
}

phantom::Phantom load_phantom(const std::filesystem::path& path) {
    return phantom_from_json(json::parse(read_file(path)));
}

json trajectory_to_json(const so3::MotionTrajectory& t) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "trajectory";
    j["times"] = t.times;
    auto mats = [&](const std::vector<Mat3>& v) {
        json arr = json::array();
        for (const auto& m : v) arr.push_back(mat3_to_json(m));
        return arr;
    };
    auto vecs = [&](const std::vector<Vec3>& v) {
        json arr = json::array();
        for (const auto& x : v) arr.push_back(vec3_to_json(x));
        return arr;
    };
    j["R"] = mats(t.R);
    j["Rdot"] = mats(t.Rdot);
    j["Rddot"] = mats(t.Rddot);
    j["omega"] = vecs(t.omega);
    j["omega_dot"] = vecs(t.omega_dot);
    return j;
}

so3::MotionTrajectory trajectory_from_json(const json& j) {
    if (j.value("kind", "") != "trajectory") fail("parse-error", "trajectory: wrong kind");
    so3::MotionTrajectory t;
    t.times = j.at("times").get<std::vector<double>>();
    for (const auto& m : j.at("R")) t.R.push_back(mat3_from_json(m));
    for (const auto& m : j.at("Rdot")) t.Rdot.push_back(mat3_from_json(m));
    for (const auto& m : j.at("Rddot")) t.Rddot.push_back(mat3_from_json(m));
    for (const auto& v : j.at("omega")) t.omega.push_back(vec3_from_json(v));
    for (const auto& v : j.at("omega_dot")) t.omega_dot.push_back(vec3_from_json(v));
    return t;
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& payload) {
    return std::filesystem::path(payload.string() + ".json");
}

std::string doubles_to_bytes(const double* p, std::size_t count) {
    std::string bytes(count * sizeof(double), '\0');
    std::memcpy(bytes.data(), p, bytes.size());
    return bytes;
}

}  // namespace

void save_voxels(const voxel::VoxelGrid& g, const std::filesystem::path& payload_path) {
    const std::string payload = doubles_to_bytes(g.data.data(), g.data.size());
    json h;
    h["format_version"] = 1;
    h["kind"] = "voxel-grid";
    h["dims"] = json::array({g.n, g.n, g.n});
    h["spacing"] = g.spacing;
    h["origin"] = vec3_to_json(g.origin);
    h["order"] = "x-fastest";
    h["dtype"] = "float64-le";
    h["payload_hash"] = fnv1a_hex(payload.data(), payload.size());
    atomic_write(payload_path, payload);
    atomic_write(sidecar(payload_path), h.dump(2) + "\n");
}

voxel::VoxelGrid load_voxels(const std::filesystem::path& payload_path) {
    const json h = json::parse(read_file(sidecar(payload_path)));
    if (h.value("kind", "") != "voxel-grid") fail("parse-error", "voxels: wrong header kind");
    voxel::VoxelGrid g;
    const auto dims = h.at("dims");
    if (dims.size() != 3 || dims[0] != dims[1] || dims[1] != dims[2])
        fail("parse-error", "voxels: only cube grids are supported");
    g.n = dims[0].get<std::size_t>();
    g.spacing = h.at("spacing").get<double>();
    g.origin = vec3_from_json(h.at("origin"));
    const std::string payload = read_file(payload_path);
    if (h.contains("payload_hash") &&
        h["payload_hash"].get<std::string>() != fnv1a_hex(payload.data(), payload.size()))
        fail("parse-error", "voxels: payload hash mismatch");
    if (payload.size() != g.n * g.n * g.n * sizeof(double))
        fail("parse-error", "voxels: payload size mismatch");
    g.data.resize(g.n * g.n * g.n);
    std::memcpy(g.data.data(), payload.data(), payload.size());
    return g;
}

void save_measurements(const forward::MeasurementSet& ms,
                       const std::filesystem::path& payload_path,
                       const std::string& phantom_path, const std::string& trajectory_path) {
    std::string payload(ms.values.size() * 2 * sizeof(double), '\0');
    for (std::size_t i = 0; i < ms.values.size(); ++i) {
        const double re = ms.values[i].real(), im = ms.values[i].imag();
        std::memcpy(payload.data() + 2 * i * sizeof(double), &re, sizeof(double));
        std::memcpy(payload.data() + (2 * i + 1) * sizeof(double), &im, sizeof(double));
    }
    json h;
    h["format_version"] = 1;
    h["kind"] = "measurement-set";
    h["model"] = ms.cfg.model == pointset::Model::DT ? "dt" : "pb";
    h["k0"] = ms.cfg.k0;
    h["samples"] = ms.cfg.samples;
    h["phi_grid"] = ms.phi_grid;
    h["times"] = ms.times;
    h["normalization"] = "fourier-diffraction-constants-dropped";
    if (ms.noise)
        h["noise"] = {{"level", ms.noise->level},
                      {"seed", ms.noise->seed},
                      {"rms_ref", ms.noise->rms_ref}};
    else
        h["noise"] = nullptr;
    h["phantom_hash"] = ms.phantom_hash;
    h["motion_hash"] = ms.motion_hash;
    if (!phantom_path.empty()) h["phantom_path"] = phantom_path;
    if (!trajectory_path.empty()) h["trajectory_path"] = trajectory_path;
    h["dtype"] = "complex128-le";
    h["payload_hash"] = fnv1a_hex(payload.data(), payload.size());
    atomic_write(payload_path, payload);
    atomic_write(sidecar(payload_path), h.dump(2) + "\n");
}

json load_measurement_header(const std::filesystem::path& payload_path) {
    return json::parse(read_file(sidecar(payload_path)));
}

forward::MeasurementSet load_measurements(const std::filesystem::path& payload_path) {
    const json h = load_measurement_header(payload_path);
    if (h.value("kind", "") != "measurement-set")
        fail("parse-error", "measurements: wrong header kind");
    forward::MeasurementSet ms;
    ms.cfg.model = h.at("model").get<std::string>() == "dt" ? pointset::Model::DT
                                                            : pointset::Model::PB;
    ms.cfg.k0 = h.at("k0").get<double>();
    ms.cfg.samples = h.at("samples").get<std::vector<double>>();
    ms.phi_grid = h.at("phi_grid").get<std::vector<double>>();
    ms.cfg.phi_lines = ms.phi_grid.size();
    ms.times = h.at("times").get<std::vector<double>>();
    if (!h.at("noise").is_null())
        ms.noise = forward::NoiseRecord{h["noise"].at("level").get<double>(),
                                        h["noise"].at("seed").get<std::uint64_t>(),
                                        h["noise"].at("rms_ref").get<double>()};
    ms.phantom_hash = h.value("phantom_hash", "");
    ms.motion_hash = h.value("motion_hash", "");
    const std::string payload = read_file(payload_path);
    if (h["payload_hash"].get<std::string>() != fnv1a_hex(payload.data(), payload.size()))
        fail("parse-error", "measurements: payload hash mismatch");
    const std::size_t count = payload.size() / (2 * sizeof(double));
    if (count != ms.times.size() * ms.lines() * ms.samples_per_line())
        fail("parse-error", "measurements: payload size mismatch");
    ms.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        double re, im;
        std::memcpy(&re, payload.data() + 2 * i * sizeof(double), sizeof(double));
        std::memcpy(&im, payload.data() + (2 * i + 1) * sizeof(double), sizeof(double));
        ms.values[i] = {re, im};
    }
    return ms;
}

json result_to_json(const recover::RecoveryResult& r) {
    json j;
    j["format_version"] = 1;
    j["kind"] = "recovery-result";
    j["branch"] = r.branch == recover::Branch::Direct ? "direct" : "sigma";
    j["equivalence_distance"] = r.equivalence_distance;
    j["clean"] = r.clean;
    json steps = json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"omega_hat", vec3_to_json(s.omega_hat)},
                         {"residual", s.residual},
                         {"data_scale", s.data_scale},
                         {"ambiguity", recover::to_string(s.ambiguity)},
                         {"condition", s.condition},
                         {"phi", s.phi},
                         {"zeta", s.zeta},
                         {"rho", s.rho}});
    j["steps"] = steps;
    json traj;
    traj["times"] = r.trajectory.times;
    json mats = json::array();
    for (const auto& m : r.trajectory.R) mats.push_back(mat3_to_json(m));
    traj["R"] = mats;
    j["trajectory"] = traj;
    return j;
}

void save_result(const recover::RecoveryResult& r, const std::filesystem::path& path) {
    atomic_write(path, result_to_json(r).dump(2) + "\n");
}

std::string result_csv(const recover::RecoveryResult& r) {
    std::ostringstream out;
    out << "index,time,omega1,omega2,omega3,residual,data_scale,ambiguity,condition\n";
    out.precision(17);
    for (std::size_t i = 0; i < r.steps.size(); ++i) {
        const auto& s = r.steps[i];
        out << i << ',' << r.trajectory.times[i] << ',' << s.omega_hat.x() << ','
            << s.omega_hat.y() << ',' << s.omega_hat.z() << ',' << s.residual << ','
            << s.data_scale << ',' << recover::to_string(s.ambiguity) << ',' << s.condition
            << '\n';
    }
    return out.str();
}

}  // namespace rotrec::io
