#include <cmath>
#include <map>

#include "doctest.h"

#include "bpve/errors.hpp"
#include "bpve/offspring.hpp"
#include "fixtures.hpp"

using namespace bpve;

// mpmath at 50 digits: q0 + c Li_{2.5}(s) for alpha = 0.5, mean 1.5.
TEST_CASE("power tail constants")
{
    auto const law = OffspringLaw::power_tail(0.5, 1.5);
    CHECK(pmf(law, 0) == doctest::Approx(0.22973132980721820264).epsilon(1e-13));
    CHECK(pmf(law, 1) == doctest::Approx(0.57419007599913984337).epsilon(1e-13));
    CHECK(pmf(law, 10) == doctest::Approx(0.0018157484500224638474).epsilon(1e-13));
    CHECK(mean(law) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(pgf(law, 0.5) == doctest::Approx(0.548405259453342384221142).epsilon(1e-13));
    CHECK_FALSE(second_moment_class(law).finite);
}

TEST_CASE("power tail complement of the criticalized law")
{
    auto const g = criticalize(OffspringLaw::power_tail(0.5, 1.5));
    std::map<double, double> const expected = {
        {0.5, 0.451594740546657615778858},
        {0.1, 0.116264436588705221670828},
        {0.02, 0.0265784369201557685362952},
        {1e-3, 0.00145822688072691902657973},
        {1e-6, 1.49864420102856440647999604598e-6},
        {1e-9, 1.49995709009812820370784865e-9},
        {1e-12, 1.4999986430339540874703825894e-12},
    };
    // values are 1 - f(1 - s) of the base law; g sees its argument scaled by 1/m
    auto const f = OffspringLaw::power_tail(0.5, 1.5);
    for (auto [s, h] : expected)
    {
        auto const c = pgf_complement_certified<double>(f, s);
        CHECK(std::abs(c.value - h) <= 1e-13 * h);
        CHECK(c.error_bound <= 1e-12 * h);
        auto const x = pgf_complement_certified<ExtendedReal>(f, ExtendedReal(s));
        CHECK(std::abs(static_cast<double>(x.value) - h) <= 1e-15 * h);
        CHECK(pgf_complement(g, s * 1.5) == doctest::Approx(h).epsilon(1e-13));
    }
}

TEST_CASE("infeasible power tail mean reports the maximum")
{
    CHECK_THROWS_AS(OffspringLaw::power_tail(0.5, 3.0), DomainError);
    try
    {
        OffspringLaw::power_tail(0.5, 3.0);
    }
    catch (DomainError const& e)
    {
        CHECK(std::string(e.what()).find("1.94737246631") != std::string::npos);
    }
    CHECK_NOTHROW(OffspringLaw::power_tail(0.5, 1.94));
    CHECK_THROWS_AS(OffspringLaw::power_tail(0.0, 1.5), DomainError);
    CHECK_THROWS_AS(OffspringLaw::power_tail(1.0, 1.5), DomainError);
}

TEST_CASE("finite law validation")
{
    CHECK_THROWS_AS(OffspringLaw::finite({0.5, 0.6}), DomainError);
    CHECK_THROWS_AS(OffspringLaw::finite({1.2, -0.2}), DomainError);
    CHECK_THROWS_AS(OffspringLaw::finite({}), DomainError);
    auto const point = OffspringLaw::finite({0, 0, 1});
    CHECK(mean(point) == 2.0);
    CHECK(pgf(point, 0.3) == doctest::Approx(0.09));
    CHECK(second_moment_class(point).finite);
    CHECK(second_moment_class(point).variance == doctest::Approx(0.0));
}

TEST_CASE("thinned pmf is the binomial mixture")
{
    auto const law = thin(OffspringLaw::finite({0.2, 0.3, 0.5}), 0.4);
    CHECK(pmf(law, 0) == doctest::Approx(0.56).epsilon(1e-14));
    CHECK(pmf(law, 1) == doctest::Approx(0.36).epsilon(1e-14));
    CHECK(pmf(law, 2) == doctest::Approx(0.08).epsilon(1e-14));
    CHECK(pmf(law, 3) == 0.0);
}

TEST_CASE("thin rejects retention outside (0,1]")
{
    auto const law = OffspringLaw::geometric(2);
    CHECK_THROWS_AS(thin(law, 0.0), DomainError);
    CHECK_THROWS_AS(thin(law, 1.5), DomainError);
    CHECK_THROWS_AS(thin(law, std::nan("")), DomainError);
    CHECK_THROWS_AS(criticalize(OffspringLaw::geometric(1.0)), DomainError);
    CHECK_THROWS_AS(criticalize(OffspringLaw::finite({0.5, 0.5})), DomainError);
}

TEST_CASE("criticalized geometric is 1/(2-s)")
{
    auto const g = criticalize(OffspringLaw::geometric(2));
    for (double s : fixtures::grid(11))
        CHECK(pgf(g, s) == doctest::Approx(1 / (2 - s)).epsilon(1e-14));
    CHECK(mean(g) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pgf is increasing and convex on a grid")
{
    auto const s = fixtures::grid();
    for (auto const& law : fixtures::laws())
    {
        for (std::size_t i = 1; i + 1 < s.size(); ++i)
        {
            double const a = pgf(law, s[i - 1]);
            double const b = pgf(law, s[i]);
            double const c = pgf(law, s[i + 1]);
            CHECK(b >= a - 1e-15);
            CHECK(a + c - 2 * b >= -1e-13);
        }
        CHECK(pgf(law, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(pgf(law, 0.0) == doctest::Approx(pmf(law, 0)).epsilon(1e-12));
    }
}

TEST_CASE("complement agrees with 1 - pgf")
{
    for (auto const& law : fixtures::laws())
        for (double s : fixtures::grid(21))
            CHECK(std::abs(pgf_complement(law, s) - (1 - pgf(law, 1 - s))) <= 1e-13);
}

TEST_CASE("sampling matches the pmf")
{
    Rng rng(12345);
    constexpr int draws = 1'000'000;
    for (auto const& law : {OffspringLaw::power_tail(0.5, 1.5), OffspringLaw::finite({0.2, 0.3, 0.5}),
                            thin(OffspringLaw::geometric(2), 0.5)})
    {
        std::map<std::uint64_t, int> counts;
        for (int i = 0; i < draws; ++i)
            ++counts[std::min<std::uint64_t>(sample(law, rng), 20)];
        for (std::uint64_t k = 0; k < 8; ++k)
        {
            double const p = pmf(law, k);
            double const sigma = std::sqrt(draws * p * (1 - p));
            CHECK(std::abs(counts[k] - draws * p) <= 4 * sigma + 1e-9);
        }
    }
}

TEST_CASE("sample_total matches the mean of the sum")
{
    Rng rng(7);
    auto const law = OffspringLaw::finite({0.2, 0.3, 0.5});
    double total = 0;
    constexpr int reps = 100'000;
    for (int i = 0; i < reps; ++i)
        total += static_cast<double>(sample_total(law, 10, rng));
    // Var of the sum of 10 = 10 * 0.61
    double const sigma = std::sqrt(10 * 0.61 / reps);
    CHECK(std::abs(total / reps - 13.0) <= 4 * sigma);
    CHECK(sample_total(law, 0, rng) == 0);
}

TEST_CASE("heavy tail sampler follows the tail beyond its table")
{
    Rng rng(99);
    auto const law = OffspringLaw::power_tail(0.5, 1.5);
    constexpr int draws = 2'000'000;
    for (std::uint64_t k : {100u, 5000u})
    {
        double head = 0;
        for (std::uint64_t j = 0; j <= k; ++j)
            head += pmf(law, j);
        double const p = 1 - head;
        int count = 0;
        for (int i = 0; i < draws; ++i)
            count += sample(law, rng) > k ? 1 : 0;
        double const sigma = std::sqrt(draws * p * (1 - p));
        CHECK(std::abs(count - draws * p) <= 4 * sigma + 1);
    }
}

TEST_CASE("spec strings are canonical")
{
    CHECK(OffspringLaw::finite({0, 0, 1}).spec() == "finite:0,0,1");
    CHECK(OffspringLaw::geometric(2).spec() == "geometric:mean=2");
    CHECK(thin(OffspringLaw::power_tail(0.5, 1.5), 0.25).spec() == "powertail:alpha=0.5,mean=1.5|thin=0.25");
}
