#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace sysfi {

using i8 = std::int8_t;
using i32 = std::int32_t;

/// Right-shift amount of the rounding stage. The layer scale is 2^-S.
class Shift {
 public:
  static constexpr int kMax = 31;

  constexpr Shift() = default;
  constexpr explicit Shift(int bits) : bits_(bits) {
    if (bits < 0 || bits > kMax) throw std::out_of_range("shift must lie in [0, 31]");
  }
  constexpr int bits() const { return bits_; }
  friend constexpr bool operator==(Shift, Shift) = default;

 private:
  int bits_ = 0;
};

/// 256-entry activation table, indexed by the unsigned reinterpretation of
/// the int8 input.
class Lut {
 public:
  constexpr Lut() = default;
  constexpr explicit Lut(const std::array<i8, 256>& table) : table_(table) {}

  static Lut identity();
  static Lut relu();

  constexpr i8 operator()(i8 x) const { return table_[static_cast<std::uint8_t>(x)]; }
  constexpr const std::array<i8, 256>& table() const { return table_; }
  friend bool operator==(const Lut&, const Lut&) = default;

 private:
  std::array<i8, 256> table_{};
};

constexpr i32 wrap_add(i32 a, i32 b) {
  return static_cast<i32>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}

constexpr i8 clip8(i32 v) { return static_cast<i8>(v < -128 ? -128 : (v > 127 ? 127 : v)); }

/// acc + a*w modulo 2^32. The product of two int8 always fits in 16 bits.
constexpr i32 mac(i8 a, i8 w, i32 acc) {
  return wrap_add(acc, static_cast<i32>(a) * static_cast<i32>(w));
}

/// clip(round_half_up(acc / 2^S)) realized as (acc + 2^(S-1)) >> S with a
/// wrapping offset add, then saturation to int8.
constexpr i8 requantize(i32 acc, Shift shift) {
  const int s = shift.bits();
  if (s == 0) return clip8(acc);
  const i32 rounded = wrap_add(acc, static_cast<i32>(std::uint32_t{1} << (s - 1)));
  return clip8(rounded >> s);
}

constexpr i8 nlf_apply(const Lut& lut, i8 x) { return lut(x); }

inline Lut make_relu_lut() { return Lut::relu(); }

constexpr i8 max2(i8 a, i8 b) { return a < b ? b : a; }

}  // namespace sysfi
