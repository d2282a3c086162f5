#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace bpve {

/// Extended scalar used when double precision cannot meet a tolerance.
/// 50 decimal digits.
using ExtendedReal = boost::multiprecision::cpp_bin_float_50;

/// A value together with a bound on its absolute error.
template<class Real>
struct Certified
{
    Real value{};
    Real error_bound{};
};

} // namespace bpve
