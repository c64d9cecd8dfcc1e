#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace qp {

// Extended-precision scalar for the arithmetic backbone (~50 decimal digits,
// comfortably above the 30 a frequency literal must carry).  Never used inside
// the transfer-matrix hot loops, only to prepare exact orbit data.
using BigFloat = boost::multiprecision::cpp_bin_float_50;

}  // namespace qp
