// Finite-difference gradient kernels. The serial loop is the reference the
// OpenMP kernel is tested against; each coordinate's difference quotient is
// computed from its own copy of x, so both produce identical bits.
#include <vector>

#include "kitepower/optimizer.hpp"

namespace kitepower::optimizer {

namespace {

double central_difference(const CycleProblem& problem, std::vector<double>& work, std::size_t i, double h) {
    const double xi = work[i];
    work[i] = xi + h;
    const double fp = problem.objective(work);
    work[i] = xi - h;
    const double fm = problem.objective(work);
    work[i] = xi;
    return (fp - fm) / (2.0 * h);
}

}  // namespace

void objective_gradient_serial(const CycleProblem& problem, std::span<const double> x, double h,
                               std::span<double> grad) {
    std::vector<double> work(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = central_difference(problem, work, i, h);
}

void objective_gradient_parallel(const CycleProblem& problem, std::span<const double> x, double h,
                                 std::span<double> grad) {
    const auto n = static_cast<long>(x.size());
#pragma omp parallel
    {
        std::vector<double> work(x.begin(), x.end());
#pragma omp for schedule(static)
        for (long i = 0; i < n; ++i) {
            grad[static_cast<std::size_t>(i)] = central_difference(problem, work, static_cast<std::size_t>(i), h);
        }
    }
}

}  // namespace kitepower::optimizer
