#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>

#include "rotrec/experiment.hpp"
#include "rotrec/io.hpp"
#include "rotrec/verify.hpp"

namespace {

using rotrec::experiment::CommandOptions;

void add_common(CLI::App* cmd, CommandOptions& opt, std::string& out_dir,
                std::string& backend, std::uint64_t& seed, std::size_t& threads,
                bool& seed_set, bool& backend_set, bool& threads_set) {
    cmd->add_option("--out", out_dir, "output directory")->capture_default_str();
    cmd->add_option_function<std::string>(
           "--backend", [&](const std::string& b) { backend = b; backend_set = true; },
           "derivative backend: analytic|fd");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s; seed_set = true; }, "seed override");
    cmd->add_option_function<std::size_t>(
        "--threads", [&](std::size_t t) { threads = t; threads_set = true; },
        "solver threads");
    (void)opt;
}

CommandOptions finish(const std::string& out_dir, const std::string& backend,
                      std::uint64_t seed, std::size_t threads, bool seed_set,
                      bool backend_set, bool threads_set) {
    CommandOptions opt;
    opt.out_dir = out_dir;
    if (seed_set) opt.seed_override = seed;
    if (backend_set) opt.backend = backend;
    if (threads_set) opt.threads = threads;
    return opt;
}

int run_verify(const std::string& scope, const std::string& out_path) {
    rotrec::verify::Options vopt;
    std::vector<rotrec::verify::CheckResult> results;
    if (scope == "kinematics")
        results = rotrec::verify::verify_kinematics(vopt);
    else if (scope == "phantoms")
        results = rotrec::verify::verify_phantoms(vopt);
    else if (scope == "forward")
        results = rotrec::verify::verify_forward(vopt);
    else if (scope == "recovery")
        results = rotrec::verify::verify_recovery(vopt);
    else if (scope == "all")
        results = rotrec::verify::verify_all(vopt);
    else {
        std::cerr << "unknown scope: " << scope << "\n";
        return rotrec::experiment::kExitConfig;
    }
    nlohmann::json doc;
    doc["kind"] = "verify-report";
    doc["scope"] = scope;
    nlohmann::json checks = nlohmann::json::array();
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%-55s %s  (value=%.3e bound=%.3e)\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", r.value, r.bound);
        checks.push_back({{"name", r.name},
                          {"passed", r.passed},
                          {"value", r.value},
                          {"bound", r.bound},
                          {"note", r.note}});
        ok = ok && r.passed;
    }
    doc["checks"] = checks;
    doc["passed"] = ok;
    if (!out_path.empty()) rotrec::io::atomic_write(out_path, doc.dump(2) + "\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotrec: rotational motion recovery from tomographic measurements"};
    app.require_subcommand(1);

    std::string config_path, measurements_path, result_path;
    std::string out_dir = ".", backend, scope = "all", verify_out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool seed_set = false, backend_set = false, threads_set = false;
    CommandOptions opt;

    auto* synth = app.add_subcommand("synth", "generate phantom, trajectory, measurements");
    synth->add_option("--config", config_path, "experiment config")->required();
    add_common(synth, opt, out_dir, backend, seed, threads, seed_set, backend_set, threads_set);

    auto* recover = app.add_subcommand("recover", "recover the motion from measurements");
    recover->add_option("measurements", measurements_path, "measurement payload")->required();
    recover->add_option("--config", config_path, "experiment config")->required();
    add_common(recover, opt, out_dir, backend, seed, threads, seed_set, backend_set,
               threads_set);

    auto* verify = app.add_subcommand("verify", "run the module invariant suites");
    verify->add_option("scope", scope, "kinematics|phantoms|forward|recovery|all")
        ->capture_default_str();
    verify->add_option("--out", verify_out, "write a machine-readable report here");

    auto* report = app.add_subcommand("report", "re-render reports from a recovery result");
    report->add_option("result", result_path, "recovery result json")->required();
    add_common(report, opt, out_dir, backend, seed, threads, seed_set, backend_set,
               threads_set);

    CLI11_PARSE(app, argc, argv);

    std::string err;
    int rc = 0;
    try {
        if (synth->parsed()) {
            rc = rotrec::experiment::cmd_synth(
                config_path,
                finish(out_dir, backend, seed, threads, seed_set, backend_set, threads_set),
                err);
        } else if (recover->parsed()) {
            rc = rotrec::experiment::cmd_recover(
                measurements_path, config_path,
                finish(out_dir, backend, seed, threads, seed_set, backend_set, threads_set),
                err);
        } else if (verify->parsed()) {
            rc = run_verify(scope, verify_out);
        } else if (report->parsed()) {
            rc = rotrec::experiment::cmd_report(
                result_path,
                finish(out_dir, backend, seed, threads, seed_set, backend_set, threads_set),
                err);
        }
    } catch (const rotrec::Error& e) {
        err = e.what();
        rc = rotrec::experiment::kExitConfig;
    } catch (const std::exception& e) {
        err = e.what();
        rc = rotrec::experiment::kExitConfig;
    }
    if (!err.empty()) std::cerr << err << "\n";
    return rc;
}
