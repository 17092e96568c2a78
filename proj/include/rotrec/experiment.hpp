#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "rotrec/forward.hpp"
#include "rotrec/phantom.hpp"
#include "rotrec/recovery.hpp"
#include "rotrec/so3.hpp"

namespace rotrec::experiment {

using json = nlohmann::json;

// value(t) = sum poly[i] t^i + sum amp sin(freq t + phase); C-infinity, so
// motions built from these are as smooth as the solvers need.
struct ProfileSpec {
    std::vector<double> poly;
    struct Trig {
        double amp = 0, freq = 0, phase = 0;
    };
    std::vector<Trig> trig;

    double eval(double t) const;
    double d1(double t) const;
    double d2(double t) const;
};

struct MotionSpec {
    enum class Kind { AnalyticOmega, AxisComposite } kind = Kind::AnalyticOmega;
    std::array<ProfileSpec, 3> omega;  // AnalyticOmega
    Vec3 axis = Vec3{1, 0, 0};         // AxisComposite
    ProfileSpec alpha, beta;
    double t_start = 0, t_end = 1;
    std::size_t n_steps = 100;
};

std::shared_ptr<so3::MotionModel> build_motion(const MotionSpec& spec);
json motion_spec_to_json(const MotionSpec& spec);
MotionSpec motion_spec_from_json(const json& j);

struct PhantomSpec {
    // either an inline file-equivalent phantom document or a generator recipe
    std::optional<json> inline_doc;            // full phantom json
    std::optional<std::string> path;           // external phantom file
    // generator recipe
    std::size_t n_points = 8;
    pointset::Placement placement = pointset::ball_placement(0.55);
    phantom::BlobProfile profile;
    double support_radius = 1.0;
    bool mirror = false;
    Vec3 mirror_normal = Vec3{0, 1, 0};
};

phantom::Phantom build_phantom(const PhantomSpec& spec, std::uint64_t seed);
json phantom_spec_to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const json& j);

struct ExperimentConfig {
    int schema_version = 1;
    std::string name;
    std::uint64_t seed = 0;
    forward::ModelConfig model;
    PhantomSpec phantom;
    MotionSpec motion;
    recover::SolverConfig solver;
    double noise_level = 0;
    std::vector<std::string> report_formats = {"json", "csv"};
};

json config_to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const json& j);
// Parses with line-anchored diagnostics on failure (parse-error code carries
// "file:line: message").
ExperimentConfig load_config(const std::filesystem::path& path);

// exit codes shared by the library entry points and the CLI
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitPhantom = 3;
inline constexpr int kExitAmbiguous = 10;

struct CommandOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> backend;  // "analytic" | "fd"
    std::optional<std::size_t> threads;
    std::filesystem::path out_dir = ".";
};

// synth: phantom + trajectory + measurements + manifest. Returns an exit code
// and writes diagnostics to err on failure.
int cmd_synth(const std::filesystem::path& config_path, const CommandOptions& opt,
              std::string& err);

// recover: reads a measurement file (header sidecar required), rebuilds the
// jet provider from the referenced artifacts and runs recovery.
int cmd_recover(const std::filesystem::path& measurements_path,
                const std::filesystem::path& config_path, const CommandOptions& opt,
                std::string& err);

// report: re-renders summary + csv from a stored recovery result
int cmd_report(const std::filesystem::path& result_path, const CommandOptions& opt,
               std::string& err);

}  // namespace rotrec::experiment
