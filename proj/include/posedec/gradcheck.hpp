#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace posedec::gradcheck {

struct SuiteResult {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = false;
};

// Central finite-difference verification (f64, step 1e-6) of every analytic
// gradient in the library: the loss gradients, score-net backprop, and the
// adaptive-convolution input adjoint. A suite passes when the worst relative
// error stays below 1e-4.
std::vector<SuiteResult> run_all(std::uint64_t seed);

}  // namespace posedec::gradcheck
