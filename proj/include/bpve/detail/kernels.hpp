#pragma once

// Scalar-generic evaluation kernels for the three base offspring families.
// Every kernel evaluates the complement form h(s) = 1 - f(1 - s), which stays
// accurate when s is tiny; f itself is recovered as 1 - h(1 - x).

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/expm1.hpp>
#include <boost/math/special_functions/factorials.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/log1p.hpp>

#include "bpve/precision.hpp"

namespace bpve::detail {

template<class Real>
Real expm1_(Real const& x)
{
    if constexpr (std::is_floating_point_v<Real>)
        return std::expm1(x);
    else
        return boost::math::expm1(x);
}

template<class Real>
Real log1p_(Real const& x)
{
    if constexpr (std::is_floating_point_v<Real>)
        return std::log1p(x);
    else
        return boost::math::log1p(x);
}

/// Neumaier-compensated running sum of positive terms; the result carries a
/// relative rounding error of a few ulps regardless of the term count.
template<class Real>
class CompensatedSum
{
  public:
    void add(Real const& x)
    {
        Real const t = sum_ + x;
        if (abs_of(sum_) >= abs_of(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    Real value() const { return sum_ + carry_; }

  private:
    static Real abs_of(Real const& x) { return x < 0 ? Real(-x) : x; }
    Real sum_ = 0;
    Real carry_ = 0;
};

/// Accuracy knobs for the Euler-Maclaurin machinery at a given precision.
template<class Real>
struct SeriesParams
{
    int anchor;          // direct summation below, Euler-Maclaurin tail from here
    int bernoulli_terms; // correction terms kept
    Real negligible;     // exp(-lambda k) below this is treated as 0
    Real eps;            // unit roundoff used in rounding estimates
};

template<class Real>
SeriesParams<Real> default_series_params()
{
    if constexpr (std::is_same_v<Real, double>)
        return {64, 6, 1e-20, std::numeric_limits<double>::epsilon()};
    else
        return {64, 14, Real("1e-56"), Real("1e-49")};
}

/// B_{2j} / (2j)! for j = 1..count.
template<class Real>
std::vector<Real> bernoulli_coefficients(int count)
{
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j)
        out.push_back(boost::math::bernoulli_b2n<Real>(j) /
                      boost::math::factorial<Real>(static_cast<unsigned>(2 * j)));
    return out;
}

/// Certified sum over k > a of k^{-beta}, via Euler-Maclaurin at a.
/// Requires beta > 1 and a large enough that the asymptotic corrections shrink
/// (a >= 16 in practice).
template<class Real>
Certified<Real> power_sum_tail(Real const& beta, Real const& a, std::span<Real const> bern)
{
    using std::pow;
    Real const fa = pow(a, -beta);
    Real sum = fa * a / (beta - 1) - fa / 2;

    // F^{(r)}(a) = (-1)^r (beta)_r a^{-beta-r}, only odd r are needed.
    Real rising = beta;
    Real apow = fa / a;
    Real last = 0;
    for (std::size_t j = 0; j < bern.size(); ++j)
    {
        int const r = 2 * static_cast<int>(j) + 1;
        Real const deriv = -rising * apow;
        sum -= bern[j] * deriv;
        last = rising * apow;
        rising *= (beta + r) * (beta + r + 1);
        apow /= a * a;
    }
    Real const two_pi = 2 * boost::math::constants::pi<Real>();
    Real const rem = 4 * last / pow(two_pi, static_cast<int>(2 * bern.size()));
    return {sum, rem};
}

/// Sum_{k>=1} k^{-s} by partial sum plus certified tail.
template<class Real>
Certified<Real> zeta_sum(Real const& s, SeriesParams<Real> const& params)
{
    using std::pow;
    auto const bern = bernoulli_coefficients<Real>(params.bernoulli_terms);
    Real head = 0;
    for (int k = params.anchor; k >= 1; --k)
        head += pow(Real(k), -s);
    auto tail = power_sum_tail<Real>(s, Real(params.anchor), bern);
    Real const rounding = 4 * params.anchor * params.eps * (head + tail.value);
    return {head + tail.value, tail.error_bound + rounding};
}

//---------------------------------------------------------------------------//
// Finite support
//---------------------------------------------------------------------------//
template<class Real>
class FiniteKernel
{
  public:
    explicit FiniteKernel(std::span<double const> probs) : q_(probs.begin(), probs.end()) {}

    Real pgf(Real const& x) const
    {
        Real acc = 0;
        for (auto it = q_.rbegin(); it != q_.rend(); ++it)
            acc = acc * x + *it;
        return acc;
    }

    Certified<Real> complement(Real const& s) const
    {
        if (s <= 0)
            return {Real(0), Real(0)};
        Real const log_keep = log1p_(Real(-s));
        CompensatedSum<Real> sum;
        for (std::size_t k = 1; k < q_.size(); ++k)
        {
            if (q_[k] == 0)
                continue;
            Real const gone = (s >= 1) ? Real(1) : Real(-expm1_(Real(log_keep * Real(k))));
            sum.add(q_[k] * gone);
        }
        Real const acc = sum.value();
        Real const eps = default_series_params<Real>().eps;
        // log1p feeds every term: its rounding scales by the exponent k.
        return {acc, (6 + 2 * static_cast<Real>(q_.size())) * eps * acc};
    }

  private:
    std::vector<Real> q_;
};

//---------------------------------------------------------------------------//
// Geometric q_k = (1 - rho) rho^k
//---------------------------------------------------------------------------//
template<class Real>
class GeometricKernel
{
  public:
    explicit GeometricKernel(double rho) : rho_(rho) {}

    Real pgf(Real const& x) const { return (1 - rho_) / (1 - rho_ * x); }

    Certified<Real> complement(Real const& s) const
    {
        Real const v = rho_ * s / (1 - rho_ + rho_ * s);
        return {v, 8 * default_series_params<Real>().eps * v};
    }

  private:
    Real rho_;
};

//---------------------------------------------------------------------------//
// Power tail q_k = c k^{-(2+alpha)}, k >= 1
//---------------------------------------------------------------------------//
template<class Real>
class PowerTailKernel
{
  public:
    PowerTailKernel(double alpha, double mean, SeriesParams<Real> params = default_series_params<Real>())
        : params_(params), alpha_(alpha), beta_(Real(2) + Real(alpha))
    {
        using std::ceil;
        using std::log;
        using std::pow;
        bern_ = bernoulli_coefficients<Real>(params_.bernoulli_terms);
        zeta_mean_ = zeta_sum<Real>(Real(1) + alpha_, params_);
        zeta_mass_ = zeta_sum<Real>(beta_, params_);
        scale_ = Real(mean) / zeta_mean_.value;
        gamma_ = boost::math::tgamma(Real(1) - beta_);

        // Direct-regime sums run to ceil(ln(1/negligible) * anchor) terms.
        Real const reach = ceil(-log(params_.negligible) * params_.anchor) + 2;
        auto const size = static_cast<std::size_t>(reach);
        w_.resize(size + 1);
        w_[0] = 0;
        for (std::size_t k = 1; k <= size; ++k)
            w_[k] = pow(Real(k), -beta_);
    }

    Real const& scale() const noexcept { return scale_; }
    Real zero_mass() const { return 1 - scale_ * zeta_mass_.value; }
    Certified<Real> const& zeta_mean() const noexcept { return zeta_mean_; }
    Certified<Real> const& zeta_mass() const noexcept { return zeta_mass_; }

    /// k^{-(2+alpha)} for k >= 1.
    Real weight(std::size_t k) const
    {
        using std::pow;
        if (k < w_.size())
            return w_[k];
        return pow(Real(k), -beta_);
    }

    /// P(X > k) = c * sum_{j>k} j^{-beta}.
    Certified<Real> tail_mass(std::size_t k) const
    {
        auto const anchor = static_cast<std::size_t>(params_.anchor);
        Real head = 0;
        std::size_t from = k;
        if (k < anchor)
        {
            for (std::size_t j = anchor; j > k; --j)
                head += w_[j];
            from = anchor;
        }
        auto tail = power_sum_tail<Real>(beta_, Real(from), bern_);
        Real const v = scale_ * (head + tail.value);
        return {v, scale_ * tail.error_bound + 8 * params_.anchor * params_.eps * v};
    }

    /// h(s) = c * sum_k k^{-beta} (1 - (1 - s)^k).
    Certified<Real> complement(Real const& s) const
    {
        if (s <= 0)
            return {Real(0), Real(0)};
        if (s >= 1)
        {
            Real const v = scale_ * zeta_mass_.value;
            return {v, scale_ * zeta_mass_.error_bound};
        }
        Real const lambda = -log1p_(Real(-s));
        if (lambda * params_.anchor <= 1)
            return small_argument(lambda);
        return large_argument(lambda);
    }

  private:
    // lambda * anchor <= 1: direct head, Euler-Maclaurin tail on
    // F(x) = x^{-beta} (1 - exp(-lambda x)).
    Certified<Real> small_argument(Real const& lambda) const
    {
        using std::exp;
        using std::pow;
        int const a_int = params_.anchor;
        Real const a(a_int);

        CompensatedSum<Real> head_sum;
        for (int k = a_int - 1; k >= 1; --k)
            head_sum.add(w_[static_cast<std::size_t>(k)] * -expm1_(Real(-lambda * k)));
        Real const head = head_sum.value();

        // Integral of F over [a, inf): lambda^{beta-1} J(lambda a) with
        // J(z) = z^{-alpha}/alpha - Gamma(1-beta) + sum_{j>=2} (-1)^j z^{j-1-alpha} / (j! (j-1-alpha)).
        Real const z = lambda * a;
        Real series = 0;
        {
            Real zpow = pow(z, Real(1) - alpha_); // z^{j-1-alpha} at j = 2
            Real fact = 2;
            for (int j = 2; j < 200; ++j)
            {
                Real const term = zpow / (fact * (Real(j - 1) - alpha_));
                series += (j % 2 == 0) ? term : Real(-term);
                if (term < params_.eps * abs_(series) / 1000)
                    break;
                zpow *= z;
                fact *= (j + 1);
            }
        }
        Real const lam_pow = pow(lambda, Real(1) + alpha_);
        Real const lead = lambda * pow(a, -alpha_) / alpha_;
        Real const integral = lead + lam_pow * (series - gamma_);

        Real const e = exp(-lambda * a);
        Real const v0 = -expm1_(Real(-lambda * a));
        Real const fa = w_[static_cast<std::size_t>(a_int)] * v0;

        // Leibniz: u = x^{-beta}, v = 1 - exp(-lambda x).
        int const p = params_.bernoulli_terms;
        int const order = 2 * p;
        std::vector<Real> u(static_cast<std::size_t>(order) + 1);
        std::vector<Real> v(static_cast<std::size_t>(order) + 1);
        {
            Real rising = 1;
            Real apow = pow(a, -beta_);
            Real lpow = 1;
            for (int i = 0; i <= order; ++i)
            {
                u[static_cast<std::size_t>(i)] = ((i % 2 == 0) ? rising : Real(-rising)) * apow;
                v[static_cast<std::size_t>(i)] =
                    (i == 0) ? v0 : ((i % 2 == 1) ? Real(lpow * e) : Real(-lpow * e));
                rising *= beta_ + i;
                apow /= a;
                lpow *= lambda;
            }
        }
        Real corr = 0;
        for (int j = 1; j <= p; ++j)
        {
            int const r = 2 * j - 1;
            Real deriv = 0;
            Real binom = 1;
            for (int i = 0; i <= r; ++i)
            {
                deriv += binom * u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(r - i)];
                binom = binom * (r - i) / (i + 1);
            }
            corr += bern_[static_cast<std::size_t>(j - 1)] * deriv;
        }
        Real const tail = integral + fa / 2 - corr;

        // Remainder: 4 / (2 pi)^{2p} * integral of |F^{(2p)}| over [a, inf).
        Real rem = 0;
        {
            Real binom = 1;
            Real rising = 1;
            for (int i = 0; i <= order; ++i)
            {
                Real piece;
                if (i < order)
                    piece = rising * pow(lambda, order - i) * pow(a, Real(1) - beta_ - i) /
                            (beta_ + i - 1);
                else
                    piece = lambda * rising * pow(a, Real(2) - beta_ - i) / (beta_ + i - 2);
                rem += binom * piece;
                binom = binom * (order - i) / (i + 1);
                rising *= beta_ + i;
            }
            Real const two_pi = 2 * boost::math::constants::pi<Real>();
            rem *= 4 / pow(two_pi, order);
        }

        Real const total = head + tail;
        Real const v_out = scale_ * total;
        Real const tail_size =
            lead + lam_pow * (abs_(series) + abs_(gamma_)) + fa / 2 + abs_(corr);
        Real const rounding =
            params_.eps * scale_ * (6 * head + 16 * tail_size) + 2 * params_.eps * v_out;
        return {v_out, scale_ * rem + rounding};
    }

    // lambda * anchor > 1: sum directly until exp(-lambda k) is negligible,
    // then the pure power tail.
    Certified<Real> large_argument(Real const& lambda) const
    {
        using std::ceil;
        using std::exp;
        using std::log;
        Real const reach = ceil(-log(params_.negligible) / lambda);
        std::size_t n = static_cast<std::size_t>(params_.anchor);
        if (reach > Real(n))
            n = static_cast<std::size_t>(reach);
        if (n >= w_.size())
            n = w_.size() - 1;

        CompensatedSum<Real> head_sum;
        for (std::size_t k = n; k >= 1; --k)
            head_sum.add(w_[k] * -expm1_(Real(-lambda * Real(k))));
        Real const head = head_sum.value();
        auto tail = power_sum_tail<Real>(beta_, Real(n), bern_);
        Real const cut = exp(-lambda * Real(n));
        Real const v_out = scale_ * (head + tail.value);
        Real const rounding = params_.eps * scale_ * (6 * head + 16 * tail.value) + 2 * params_.eps * v_out;
        return {v_out, scale_ * (tail.error_bound + cut * tail.value) + rounding};
    }

    static Real abs_(Real const& x) { return x < 0 ? Real(-x) : x; }

    SeriesParams<Real> params_;
    Real alpha_;
    Real beta_;
    Real scale_;
    Real gamma_;
    Certified<Real> zeta_mean_;
    Certified<Real> zeta_mass_;
    std::vector<Real> w_;
    std::vector<Real> bern_;
};

} // namespace bpve::detail
