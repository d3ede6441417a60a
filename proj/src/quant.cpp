#include "sysfi/quant.hpp"

namespace sysfi {

Lut Lut::identity() {
  std::array<i8, 256> t{};
  for (int x = -128; x <= 127; ++x) t[static_cast<std::uint8_t>(x)] = static_cast<i8>(x);
  return Lut(t);
}

Lut Lut::relu() {
  std::array<i8, 256> t{};
  for (int x = -128; x <= 127; ++x) t[static_cast<std::uint8_t>(x)] = static_cast<i8>(x > 0 ? x : 0);
  return Lut(t);
}

}  // namespace sysfi
