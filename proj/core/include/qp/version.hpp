#pragma once

namespace qp {

inline constexpr const char* kToolName = "qpspec";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace qp
