#include "rotrec/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "rotrec/io.hpp"

namespace rotrec::experiment {

double ProfileSpec::eval(double t) const {
    double acc = 0, p = 1;
    for (double c : poly) {
        acc += c * p;
        p *= t;
    }
    for (const auto& tr : trig) acc += tr.amp * std::sin(tr.freq * t + tr.phase);
    return acc;
}

double ProfileSpec::d1(double t) const {
    double acc = 0, p = 1;
    for (std::size_t i = 1; i < poly.size(); ++i) {
        acc += static_cast<double>(i) * poly[i] * p;
        p *= t;
    }
    for (const auto& tr : trig) acc += tr.amp * tr.freq * std::cos(tr.freq * t + tr.phase);
    return acc;
}

double ProfileSpec::d2(double t) const {
    double acc = 0, p = 1;
    for (std::size_t i = 2; i < poly.size(); ++i) {
        acc += static_cast<double>(i * (i - 1)) * poly[i] * p;
        p *= t;
    }
    for (const auto& tr : trig)
        acc -= tr.amp * tr.freq * tr.freq * std::sin(tr.freq * t + tr.phase);
    return acc;
}

std::shared_ptr<so3::MotionModel> build_motion(const MotionSpec& spec) {
    if (spec.kind == MotionSpec::Kind::AnalyticOmega) {
        auto om = [p = spec.omega](double t) {
            return Vec3{p[0].eval(t), p[1].eval(t), p[2].eval(t)};
        };
        auto omd = [p = spec.omega](double t) {
            return Vec3{p[0].d1(t), p[1].d1(t), p[2].d1(t)};
        };
        const auto cache = std::max<std::size_t>(2000, 10 * spec.n_steps);
        return std::make_shared<so3::AnalyticOmegaMotion>(om, omd, spec.t_start, spec.t_end,
                                                          cache);
    }
    so3::ScalarC2 a{[p = spec.alpha](double t) { return p.eval(t); },
                    [p = spec.alpha](double t) { return p.d1(t); },
                    [p = spec.alpha](double t) { return p.d2(t); }};
    so3::ScalarC2 b{[p = spec.beta](double t) { return p.eval(t); },
                    [p = spec.beta](double t) { return p.d1(t); },
                    [p = spec.beta](double t) { return p.d2(t); }};
    return std::make_shared<so3::AxisCompositeMotion>(spec.axis, a, b, spec.t_start,
                                                      spec.t_end);
}

namespace {

json profile_to_json(const ProfileSpec& p) {
    json j;
    j["poly"] = p.poly;
    json tr = json::array();
    for (const auto& t : p.trig)
        tr.push_back({{"amp", t.amp}, {"freq", t.freq}, {"phase", t.phase}});
    j["trig"] = tr;
    return j;
}

ProfileSpec profile_from_json(const json& j) {
    ProfileSpec p;
    if (j.contains("poly")) p.poly = j["poly"].get<std::vector<double>>();
    if (j.contains("trig"))
        for (const auto& t : j["trig"])
            p.trig.push_back({t.at("amp").get<double>(), t.at("freq").get<double>(),
                              t.value("phase", 0.0)});
    return p;
}

json vec3j(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3p(const json& j) {
    if (!j.is_array() || j.size() != 3) fail("parse-error", "expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json motion_spec_to_json(const MotionSpec& s) {
    json j;
    j["kind"] = s.kind == MotionSpec::Kind::AnalyticOmega ? "analytic-omega" : "axis-composite";
    if (s.kind == MotionSpec::Kind::AnalyticOmega) {
        j["omega"] = json::array(
            {profile_to_json(s.omega[0]), profile_to_json(s.omega[1]), profile_to_json(s.omega[2])});
    } else {
        j["axis"] = vec3j(s.axis);
        j["alpha"] = profile_to_json(s.alpha);
        j["beta"] = profile_to_json(s.beta);
    }
    j["t_start"] = s.t_start;
    j["t_end"] = s.t_end;
    j["n_steps"] = s.n_steps;
    return j;
}

MotionSpec motion_spec_from_json(const json& j) {
    MotionSpec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "analytic-omega") {
        s.kind = MotionSpec::Kind::AnalyticOmega;
        const auto& om = j.at("omega");
        if (om.size() != 3) fail("parse-error", "motion: omega needs 3 profiles");
        for (int i = 0; i < 3; ++i)
            s.omega[static_cast<std::size_t>(i)] = profile_from_json(om[static_cast<std::size_t>(i)]);
    } else if (kind == "axis-composite") {
        s.kind = MotionSpec::Kind::AxisComposite;
        s.axis = vec3p(j.at("axis"));
        s.alpha = profile_from_json(j.at("alpha"));
        s.beta = profile_from_json(j.at("beta"));
    } else {
        fail("parse-error", "motion: unknown kind " + kind);
    }
    s.t_start = j.value("t_start", 0.0);
    s.t_end = j.at("t_end").get<double>();
    s.n_steps = j.at("n_steps").get<std::size_t>();
    if (s.n_steps < 2) fail("parse-error", "motion: n_steps must be >= 2");
    return s;
}

phantom::Phantom build_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    if (spec.inline_doc) return io::phantom_from_json(*spec.inline_doc);
    if (spec.path) return io::load_phantom(*spec.path);
    auto pts = pointset::generate_asymmetric_pointset(spec.n_points, seed, spec.placement);
    auto ph = phantom::phantom_from_pointset(pts, spec.profile, spec.support_radius);
    if (spec.mirror) return phantom::mirror_symmetrize(ph, spec.mirror_normal);
    return ph;
}

json phantom_spec_to_json(const PhantomSpec& s) {
    json j;
    if (s.inline_doc) {
        j["inline"] = *s.inline_doc;
        return j;
    }
    if (s.path) {
        j["path"] = *s.path;
        return j;
    }
    j["n_points"] = s.n_points;
    j["placement"] = {
        {"kind", s.placement.kind == pointset::Placement::Kind::Ball ? "ball" : "shell"},
        {"radius", s.placement.radius},
        {"cap_eps", s.placement.cap_eps}};
    j["profile"] = {
        {"kind", s.profile.kind == phantom::BlobProfile::Kind::Gaussian ? "gaussian"
                                                                        : "ball-indicator"},
        {"radius_or_sigma", s.profile.radius_or_sigma}};
    j["support_radius"] = s.support_radius;
    if (s.mirror) {
        j["mirror"] = true;
        j["mirror_normal"] = vec3j(s.mirror_normal);
    }
    return j;
}

PhantomSpec phantom_spec_from_json(const json& j) {
    PhantomSpec s;
    if (j.contains("inline")) {
        s.inline_doc = j["inline"];
        return s;
    }
    if (j.contains("path")) {
        s.path = j["path"].get<std::string>();
        return s;
    }
    s.n_points = j.at("n_points").get<std::size_t>();
    const auto& pl = j.at("placement");
    const std::string pk = pl.at("kind").get<std::string>();
    if (pk == "ball")
        s.placement = pointset::ball_placement(pl.at("radius").get<double>());
    else if (pk == "shell")
        s.placement =
            pointset::shell_placement(pl.at("radius").get<double>(), pl.at("cap_eps").get<double>());
    else
        fail("parse-error", "phantom: unknown placement kind " + pk);
    const auto& pr = j.at("profile");
    const std::string prk = pr.at("kind").get<std::string>();
    if (prk == "gaussian")
        s.profile.kind = phantom::BlobProfile::Kind::Gaussian;
    else if (prk == "ball-indicator")
        s.profile.kind = phantom::BlobProfile::Kind::BallIndicator;
    else
        fail("parse-error", "phantom: unknown profile kind " + prk);
    s.profile.radius_or_sigma = pr.at("radius_or_sigma").get<double>();
    s.support_radius = j.at("support_radius").get<double>();
    s.mirror = j.value("mirror", false);
    if (j.contains("mirror_normal")) s.mirror_normal = vec3p(j["mirror_normal"]);
    return s;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["model"] = {{"kind", c.model.model == pointset::Model::DT ? "dt" : "pb"},
                  {"k0", c.model.k0},
                  {"samples", c.model.samples},
                  {"backend", c.model.backend == forward::ModelConfig::Backend::Analytic
                                  ? "analytic"
                                  : "fd"},
                  {"fd_dt", c.model.fd_dt},
                  {"fd_dk", c.model.fd_dk},
                  {"phi_lines", c.model.phi_lines}};
    j["phantom"] = phantom_spec_to_json(c.phantom);
    j["motion"] = motion_spec_to_json(c.motion);
    j["solver"] = {{"phi_grid", c.solver.phi_grid},
                   {"refine_iters", c.solver.refine_iters},
                   {"residual_tol", c.solver.residual_tol},
                   {"ambiguity_ratio", c.solver.ambiguity_ratio},
                   {"condition_max", c.solver.condition_max},
                   {"threads", c.solver.threads}};
    j["noise_level"] = c.noise_level;
    j["report_formats"] = c.report_formats;
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (!j.contains("schema_version")) fail("parse-error", "config: missing schema_version");
    c.schema_version = j["schema_version"].get<int>();
    if (c.schema_version != 1) fail("parse-error", "config: unsupported schema_version");
    c.name = j.value("name", "experiment");
    if (!j.contains("seed")) fail("parse-error", "config: seed is mandatory");
    c.seed = j["seed"].get<std::uint64_t>();
    const auto& m = j.at("model");
    c.model.model = m.at("kind").get<std::string>() == "dt" ? pointset::Model::DT
                                                            : pointset::Model::PB;
    c.model.k0 = m.value("k0", 0.0);
    if (m.contains("samples"))
        c.model.samples = m["samples"].get<std::vector<double>>();
    else
        c.model.samples =
            forward::default_samples(c.model.model, c.model.k0 > 0 ? c.model.k0 : 10.0,
                                     m.value("n_samples", std::size_t{16}));
    const std::string backend = m.value("backend", "analytic");
    c.model.backend = backend == "fd" ? forward::ModelConfig::Backend::FiniteDifference
                                      : forward::ModelConfig::Backend::Analytic;
    c.model.fd_dt = m.value("fd_dt", 1e-4);
    c.model.fd_dk = m.value("fd_dk", 1e-3);
    c.model.phi_lines = m.value("phi_lines", std::size_t{64});
    c.phantom = phantom_spec_from_json(j.at("phantom"));
    c.motion = motion_spec_from_json(j.at("motion"));
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        c.solver.phi_grid = s.value("phi_grid", c.solver.phi_grid);
        c.solver.refine_iters = s.value("refine_iters", c.solver.refine_iters);
        c.solver.residual_tol = s.value("residual_tol", c.solver.residual_tol);
        c.solver.ambiguity_ratio = s.value("ambiguity_ratio", c.solver.ambiguity_ratio);
        c.solver.condition_max = s.value("condition_max", c.solver.condition_max);
        c.solver.threads = s.value("threads", c.solver.threads);
    }
    c.noise_level = j.value("noise_level", 0.0);
    if (c.noise_level < 0) fail("parse-error", "config: noise_level must be >= 0");
    if (j.contains("report_formats"))
        c.report_formats = j["report_formats"].get<std::vector<std::string>>();
    c.model.validate();
    c.solver.validate();
    return c;
}

namespace {

// line number of a byte offset in a text blob (1-based)
std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

// best-effort line anchor for a key mentioned in an error message
std::size_t find_key_line(const std::string& text, const std::string& msg) {
    // pick the last single-quoted or known token in the message and search it
    std::string key;
    auto q1 = msg.find('\'');
    if (q1 != std::string::npos) {
        auto q2 = msg.find('\'', q1 + 1);
        if (q2 != std::string::npos) key = msg.substr(q1 + 1, q2 - q1 - 1);
    }
    if (key.empty()) {
        for (const char* k : {"seed", "schema_version", "model", "motion", "phantom"})
            if (msg.find(k) != std::string::npos) {
                key = k;
                break;
            }
    }
    if (key.empty()) return 1;
    const auto pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 1 : line_of(text, pos);
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    const std::string text = io::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("parse-error", path.string() + ":" + std::to_string(line_of(text, e.byte)) +
                                ": " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const Error& e) {
        if (e.code() == "parse-error")
            fail("parse-error", path.string() + ":" +
                                    std::to_string(find_key_line(text, e.what())) + ": " +
                                    e.what());
        throw;
    } catch (const json::exception& e) {
        fail("parse-error", path.string() + ":" + std::to_string(find_key_line(text, e.what())) +
                                ": " + e.what());
    }
}

namespace {

struct Pipeline {
    ExperimentConfig cfg;
    std::shared_ptr<phantom::Phantom> ph;
    std::shared_ptr<so3::MotionModel> motion;
    std::vector<double> grid;
};

Pipeline build_pipeline(ExperimentConfig cfg, const CommandOptions& opt) {
    Pipeline p;
    if (opt.seed_override) cfg.seed = *opt.seed_override;
    if (opt.backend) {
        if (*opt.backend == "analytic")
            cfg.model.backend = forward::ModelConfig::Backend::Analytic;
        else if (*opt.backend == "fd")
            cfg.model.backend = forward::ModelConfig::Backend::FiniteDifference;
        else
            fail("invalid-argument", "unknown backend " + *opt.backend);
    }
    if (opt.threads) cfg.solver.threads = *opt.threads;
    p.ph = std::make_shared<phantom::Phantom>(build_phantom(cfg.phantom, cfg.seed));
    p.motion = build_motion(cfg.motion);
    p.grid = so3::uniform_grid(cfg.motion.t_start, cfg.motion.t_end, cfg.motion.n_steps);
    p.cfg = std::move(cfg);
    return p;
}

std::shared_ptr<forward::JetProvider> make_jets(const Pipeline& p,
                                                std::optional<forward::NoiseRecord> noise) {
    if (p.cfg.model.backend == forward::ModelConfig::Backend::Analytic) {
        if (noise && noise->level > 0)
            fail("invalid-argument",
                 "noisy recovery requires the finite-difference backend");
        return std::make_shared<forward::AnalyticJetProvider>(p.ph, p.motion, p.cfg.model,
                                                              p.grid);
    }
    std::optional<forward::FdJetProvider::NoiseField> nf;
    if (noise && noise->level > 0)
        nf = forward::FdJetProvider::NoiseField{noise->level, noise->seed, noise->rms_ref};
    return std::make_shared<forward::FdJetProvider>(p.ph, p.motion, p.cfg.model, p.grid, nf);
}

}  // namespace

int cmd_synth(const std::filesystem::path& config_path, const CommandOptions& opt,
              std::string& err) {
    Pipeline p;
    try {
        p = build_pipeline(load_config(config_path), opt);
    } catch (const Error& e) {
        err = e.what();
        return std::string(e.code()) == "parse-error" ? kExitConfig : kExitPhantom;
    }
    try {
        std::filesystem::create_directories(opt.out_dir);
        const auto phantom_path = opt.out_dir / (p.cfg.name + ".phantom.json");
        const auto traj_path = opt.out_dir / (p.cfg.name + ".trajectory.json");
        const auto meas_path = opt.out_dir / (p.cfg.name + ".msr");

        io::save_phantom(*p.ph, phantom_path);

        const auto traj = p.motion->sample(p.grid);
        json tj = io::trajectory_to_json(traj);
        tj["motion_spec"] = motion_spec_to_json(p.cfg.motion);
        io::atomic_write(traj_path, tj.dump(2) + "\n");

        auto ms = forward::synthesize(*p.ph, *p.motion, p.cfg.model, p.grid);
        ms.phantom_hash = io::hash_file(phantom_path);
        ms.motion_hash = io::hash_file(traj_path);
        if (p.cfg.noise_level > 0) ms = forward::add_noise(ms, p.cfg.noise_level, p.cfg.seed);
        io::save_measurements(ms, meas_path, phantom_path.string(), traj_path.string());

        json manifest;
        manifest["format_version"] = 1;
        manifest["kind"] = "manifest";
        manifest["name"] = p.cfg.name;
        manifest["seed"] = p.cfg.seed;
        manifest["artifacts"] = json::array(
            {json{{"path", phantom_path.filename().string()},
                  {"hash", io::hash_file(phantom_path)}},
             json{{"path", traj_path.filename().string()}, {"hash", io::hash_file(traj_path)}},
             json{{"path", meas_path.filename().string()}, {"hash", io::hash_file(meas_path)}}});
        io::atomic_write(opt.out_dir / (p.cfg.name + ".manifest.json"),
                         manifest.dump(2) + "\n");
        return kExitOk;
    } catch (const Error& e) {
        err = e.what();
        return kExitPhantom;
    }
}

int cmd_recover(const std::filesystem::path& measurements_path,
                const std::filesystem::path& config_path, const CommandOptions& opt,
                std::string& err) {
    try {
        const auto cfg = load_config(config_path);
        json header;
        try {
            header = io::load_measurement_header(measurements_path);
            (void)io::load_measurements(measurements_path);  // validates payload hash
        } catch (const Error& e) {
            err = e.what();
            return kExitConfig;
        }
        const std::string model = cfg.model.model == pointset::Model::DT ? "dt" : "pb";
        if (header.value("model", "") != model) {
            err = "measurement header model does not match the config";
            return kExitConfig;
        }

        Pipeline p = build_pipeline(cfg, opt);
        std::optional<forward::NoiseRecord> noise;
        if (!header.at("noise").is_null())
            noise = forward::NoiseRecord{header["noise"]["level"].get<double>(),
                                         header["noise"]["seed"].get<std::uint64_t>(),
                                         header["noise"]["rms_ref"].get<double>()};
        const auto jets = make_jets(p, noise);

        const auto truth = p.motion->sample(p.grid);
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = recover::recover_trajectory(*jets, p.cfg.solver, &truth);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::filesystem::create_directories(opt.out_dir);
        const auto result_path = opt.out_dir / (p.cfg.name + ".result.json");
        io::save_result(result, result_path);
        io::atomic_write(opt.out_dir / (p.cfg.name + ".steps.csv"), io::result_csv(result));

        double max_err = 0, mean_err = 0;
        for (std::size_t i = 0; i < result.steps.size(); ++i) {
            Vec3 w_true = truth.omega[i];
            Vec3 w_hat = result.steps[i].omega_hat;
            const double direct = (w_hat - w_true).norm();
            const double mirrored = (w_hat - so3::sigma_velocity(w_true)).norm();
            const double e = std::min(direct, mirrored);
            max_err = std::max(max_err, e);
            mean_err += e / static_cast<double>(result.steps.size());
        }
        json summary;
        summary["format_version"] = 1;
        summary["kind"] = "summary";
        summary["name"] = p.cfg.name;
        summary["clean"] = result.clean;
        summary["branch"] = result.branch == recover::Branch::Direct ? "direct" : "sigma";
        summary["equivalence_distance"] = result.equivalence_distance;
        summary["max_omega_error"] = max_err;
        summary["mean_omega_error"] = mean_err;
        summary["runtime_seconds"] = seconds;
        summary["provenance"] = {{"measurements", io::hash_file(measurements_path)},
                                 {"phantom_hash", header.value("phantom_hash", "")},
                                 {"motion_hash", header.value("motion_hash", "")}};
        io::atomic_write(opt.out_dir / (p.cfg.name + ".summary.json"), summary.dump(2) + "\n");
        return result.clean ? kExitOk : kExitAmbiguous;
    } catch (const Error& e) {
        err = e.what();
        return std::string(e.code()) == "parse-error" ? kExitConfig : kExitPhantom;
    }
}

int cmd_report(const std::filesystem::path& result_path, const CommandOptions& opt,
               std::string& err) {
    try {
        const json j = json::parse(io::read_file(result_path));
        if (j.value("kind", "") != "recovery-result") {
            err = "not a recovery result document";
            return kExitConfig;
        }
        std::filesystem::create_directories(opt.out_dir);
        std::ostringstream csv;
        csv << "index,time,omega1,omega2,omega3,residual,ambiguity,condition\n";
        csv.precision(17);
        const auto& steps = j.at("steps");
        const auto& times = j.at("trajectory").at("times");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& s = steps[i];
            csv << i << ',' << times[i].get<double>() << ','
                << s["omega_hat"][0].get<double>() << ',' << s["omega_hat"][1].get<double>()
                << ',' << s["omega_hat"][2].get<double>() << ',' << s["residual"].get<double>()
                << ',' << s["ambiguity"].get<std::string>() << ','
                << s["condition"].get<double>() << '\n';
        }
        io::atomic_write(opt.out_dir / (result_path.stem().string() + ".csv"), csv.str());
        return kExitOk;
    } catch (const std::exception& e) {
        err = e.what();
        return kExitConfig;
    }
}

}  // namespace rotrec::experiment
