#include "doctest.h"

#include "bpve/errors.hpp"
#include "bpve/law_spec.hpp"
#include "fixtures.hpp"

using namespace bpve;

TEST_CASE("parse examples")
{
    auto const point = parse_law_spec("finite:0,0,1");
    CHECK(pmf(point, 2) == 1.0);
    CHECK(mean(point) == 2.0);
    CHECK_THROWS_AS(parse_law_spec("finite:0.5,0.6"), DomainError);
    CHECK_THROWS_AS(parse_law_spec("powertail:alpha=0.5,mean=3"), DomainError);

    auto const thinned = parse_law_spec("geometric:mean=2|thin=0.5");
    CHECK(thinned.retention() == 0.5);
    CHECK(mean(thinned) == doctest::Approx(1.0));
}

TEST_CASE("near-normalized finite laws are renormalized")
{
    auto const law = parse_law_spec("finite:0.3333333333,0.3333333333,0.3333333333");
    CHECK(pgf(law, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS(parse_law_spec("finite:0.333,0.333,0.333"));
}

TEST_CASE("malformed specs")
{
    for (char const* bad : {"", "finite", "finite:", "finite:a,b", "powertail:alpha=0.5", "powertail:alpha=0.5,mean=1.5,beta=1",
                            "powertail:alpha=0.5,alpha=0.5,mean=1.5", "gamma:mean=2", "geometric:mean=2|thin",
                            "geometric:mean=2|keep=0.5", "geometric:mean=2x"})
        CHECK_THROWS_AS_MESSAGE(parse_law_spec(bad), Error, bad);
    CHECK_THROWS_AS(parse_law_spec("geometric:mean=2|thin=0"), DomainError);
}

TEST_CASE("printed specs re-parse to the same law")
{
    auto const s = fixtures::grid();
    for (auto const& law : fixtures::laws())
    {
        auto const again = parse_law_spec(format_law_spec(law));
        CHECK(again.spec() == law.spec());
        for (double x : s)
            CHECK(std::abs(pgf(again, x) - pgf(law, x)) <= 1e-12);
    }
}
