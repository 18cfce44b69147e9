#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "tflr/composition.hpp"

namespace tflr {

enum class StopReason {
    coefficient_change,  // L1 change in B fell below eps
    objective_change,    // KLD change fell below eps
    iteration_limit,
    closed_form,         // single-shot estimator (cls)
};

inline std::string_view to_string(StopReason reason) noexcept {
    switch (reason) {
        case StopReason::coefficient_change: return "coefficient_change";
        case StopReason::objective_change: return "objective_change";
        case StopReason::iteration_limit: return "iteration_limit";
        case StopReason::closed_form: return "closed_form";
    }
    return "unknown";
}

/// Output shared by every estimator.
struct FitResult {
    std::string method;
    CoefficientMatrix B;
    double kld = 0.0;
    int iterations = 0;
    double elapsed_s = 0.0;
    bool converged = false;
    StopReason stop = StopReason::iteration_limit;
    std::vector<double> trace;  // objective per iteration, index 0 is the start value
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline void require_paired(const CompositionMatrix& x, const CompositionMatrix& y) {
    if (x.rows() != y.rows()) {
        throw Error(Errc::DimensionMismatch, "X has " + std::to_string(x.rows()) + " rows but Y has " +
                                                 std::to_string(y.rows()));
    }
}

}  // namespace detail

}  // namespace tflr
