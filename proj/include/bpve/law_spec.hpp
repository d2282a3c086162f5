#pragma once

#include <string>
#include <string_view>

#include "bpve/offspring.hpp"

namespace bpve {

/// Parses `finite:q0,q1,...`, `powertail:alpha=<a>,mean=<m>` or
/// `geometric:mean=<m>`, each with an optional `|thin=<p>` suffix.
/// Finite probabilities may miss 1 by up to 1e-9 and are then renormalized.
OffspringLaw parse_law_spec(std::string_view spec);

/// Same as law.spec().
std::string format_law_spec(OffspringLaw const& law);

} // namespace bpve
