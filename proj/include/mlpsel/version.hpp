#pragma once

namespace mlpsel {

inline constexpr const char* kVersion = "mlpsel 0.1.0";

}  // namespace mlpsel
