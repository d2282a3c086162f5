#include <cmath>

#include "doctest.h"

#include "bpve/offspring.hpp"
#include "fixtures.hpp"

using namespace bpve;

TEST_CASE("thin by one is the identity")
{
    for (auto const& law : fixtures::laws())
        for (double s : fixtures::grid())
            CHECK(std::abs(pgf(thin(law, 1.0), s) - pgf(law, s)) <= 1e-12);
}

TEST_CASE("thinning composes multiplicatively")
{
    for (auto const& law : fixtures::laws())
        for (auto [p, q] : {std::pair{0.3, 0.7}, std::pair{0.9, 0.5}, std::pair{0.125, 0.5}})
        {
            auto const nested = thin(thin(law, p), q);
            auto const direct = thin(law, p * q);
            CHECK(nested.retention() == doctest::Approx(direct.retention()).epsilon(1e-15));
            for (double s : fixtures::grid())
                CHECK(std::abs(pgf(nested, s) - pgf(direct, s)) <= 1e-12);
        }
}

TEST_CASE("thinning reparametrizes the argument")
{
    for (auto const& law : fixtures::laws())
        for (double p : {0.2, 0.6})
            for (double s : fixtures::grid())
                CHECK(std::abs(pgf(thin(law, p), s) - pgf(law, 1 - p + p * s)) <= 1e-12);
}

TEST_CASE("thinning scales the mean")
{
    for (auto const& law : fixtures::laws())
        for (double p : {0.1, 0.5, 0.99})
            CHECK(mean(thin(law, p)) == doctest::Approx(p * mean(law)).epsilon(1e-12));
}

TEST_CASE("criticalize gives mean one")
{
    for (auto const& law : fixtures::laws())
        if (mean(law) > 1)
            CHECK(mean(criticalize(law)) == doctest::Approx(1.0).epsilon(1e-12));
}
