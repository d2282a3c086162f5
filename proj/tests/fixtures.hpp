#pragma once

#include <vector>

#include "bpve/offspring.hpp"

namespace fixtures {

// A mix of finite, heavy-tailed and geometric laws, some already thinned.
inline std::vector<bpve::OffspringLaw> laws()
{
    using bpve::OffspringLaw;
    return {
        OffspringLaw::finite({0, 0, 1}),
        OffspringLaw::finite({0.2, 0.3, 0.5}),
        OffspringLaw::finite({0.25, 0.5, 0.25}),
        OffspringLaw::finite({0.1, 0.0, 0.3, 0.0, 0.6}),
        OffspringLaw::power_tail(0.5, 1.5),
        OffspringLaw::power_tail(0.8, 1.2),
        OffspringLaw::geometric(2.0),
        bpve::thin(OffspringLaw::geometric(0.7), 0.9),
    };
}

inline std::vector<double> grid(int points = 100)
{
    std::vector<double> s;
    for (int i = 0; i < points; ++i)
        s.push_back(static_cast<double>(i) / (points - 1));
    return s;
}

} // namespace fixtures
