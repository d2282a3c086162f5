#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bpve/precision.hpp"

namespace bpve {

namespace detail {
struct LawCore;
}

enum class LawKind
{
    finite,
    power_tail,
    geometric,
};

/// Offspring distribution, optionally wrapped in Bernoulli thinning.
///
/// The base law is shared and immutable; thinning only stores a retention
/// probability p, and every evaluation is routed through the reparametrized
/// argument 1 - p + p s. Nested thinning collapses to one multiplied p.
class OffspringLaw
{
  public:
    /// Probabilities q_0..q_K; must be nonnegative and sum to 1 within 1e-12.
    static OffspringLaw finite(std::vector<double> probs);
    /// q_k = c k^{-(2+alpha)} for k >= 1 with c chosen so the mean is `mean`.
    static OffspringLaw power_tail(double alpha, double mean);
    /// q_k = (1 - rho) rho^k with rho = mean / (1 + mean).
    static OffspringLaw geometric(double mean);

    LawKind kind() const noexcept;
    double retention() const noexcept { return retention_; }
    bool thinned() const noexcept { return retention_ != 1.0; }

    /// The unthinned law.
    OffspringLaw base() const;

    std::span<double const> probabilities() const;
    double alpha() const;
    double mean_parameter() const;

    /// Canonical law specification string; re-parses to the same law.
    std::string spec() const;

    detail::LawCore const& core() const noexcept { return *core_; }

  private:
    OffspringLaw(std::shared_ptr<detail::LawCore const> core, double retention)
        : core_(std::move(core)), retention_(retention)
    {
    }

    friend OffspringLaw thin(OffspringLaw const& law, double p);

    std::shared_ptr<detail::LawCore const> core_;
    double retention_ = 1.0;
};

struct SecondMomentClass
{
    bool finite = true;
    double variance = 0; // meaningful only when finite
};

/// P(X = k). Thinned laws sum the binomial mixture over the base pmf.
double pmf(OffspringLaw const& law, std::uint64_t k);

/// f(s) with certified absolute error at most `tolerance`.
double pgf(OffspringLaw const& law, double s, double tolerance = 1e-12);
Certified<double> pgf_certified(OffspringLaw const& law, double s);

/// 1 - f(1 - s), never formed by subtraction. Relative error <= 1e-10.
double pgf_complement(OffspringLaw const& law, double s);

/// Complement form with its certified absolute error, at any supported scalar.
template<class Real>
Certified<Real> pgf_complement_certified(OffspringLaw const& law, Real const& s);

extern template Certified<double> pgf_complement_certified<double>(OffspringLaw const&, double const&);
extern template Certified<ExtendedReal>
pgf_complement_certified<ExtendedReal>(OffspringLaw const&, ExtendedReal const&);

double mean(OffspringLaw const& law);
SecondMomentClass second_moment_class(OffspringLaw const& law);

/// Kill each child independently with probability 1 - p.
OffspringLaw thin(OffspringLaw const& law, double p);

/// thin(law, 1/m); requires m > 1.
OffspringLaw criticalize(OffspringLaw const& law);

using Rng = std::mt19937_64;

/// Uniform on (0, 1] with full relative resolution near zero.
double uniform_fine(Rng& rng);

std::uint64_t sample(OffspringLaw const& law, Rng& rng);

/// Total offspring of `parents` independent individuals.
std::uint64_t sample_total(OffspringLaw const& law, std::uint64_t parents, Rng& rng);

} // namespace bpve
