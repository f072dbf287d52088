#ifndef RESCALE_ERRORS_HPP
#define RESCALE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rescale {

// Runtime aborts that terminate a scenario (CLI exit code 2), as opposed to
// invalid-argument errors (exit code 1).
struct collapse_error : std::runtime_error {
    explicit collapse_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shock_error : std::runtime_error {
    explicit shock_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct boundary_error : std::runtime_error {
    explicit boundary_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rescale

#endif
