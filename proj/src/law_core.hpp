#pragma once

#include <memory>
#include <mutex>
#include <variant>
#include <vector>

#include "bpve/detail/kernels.hpp"
#include "bpve/offspring.hpp"

namespace bpve::detail {

template<class Real>
using Kernel = std::variant<FiniteKernel<Real>, GeometricKernel<Real>, PowerTailKernel<Real>>;

struct LawCore
{
    LawKind kind = LawKind::finite;
    std::vector<double> probs; // finite only
    double alpha = 0;
    double mean_param = 0;
    double rho = 0;
    double mean = 0;

    Kernel<double> kernel;

    // Sampling tables. finite: cumulative distribution; power tail: P(X > k).
    std::vector<double> cdf;
    std::vector<double> tail;

    // Extended kernel is built on first use.
    mutable std::once_flag ext_once;
    mutable std::unique_ptr<Kernel<ExtendedReal>> ext;

    explicit LawCore(Kernel<double> k) : kernel(std::move(k)) {}

    Kernel<ExtendedReal> const& extended() const;
};

} // namespace bpve::detail
