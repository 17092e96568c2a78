#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rotrec::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0;  // the measured quantity
    double bound = 0;  // the bound it was held against
    std::string note;
};

struct Options {
    std::uint64_t seed = 2026;
    // fault injection for suite self-tests: flips the sign of h in the
    // synthesized DT data of the forward checks
    bool fault_h_sign = false;
};

std::vector<CheckResult> verify_kinematics(const Options& opt = {});
std::vector<CheckResult> verify_phantoms(const Options& opt = {});
std::vector<CheckResult> verify_forward(const Options& opt = {});
std::vector<CheckResult> verify_recovery(const Options& opt = {});
std::vector<CheckResult> verify_all(const Options& opt = {});

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace rotrec::verify
