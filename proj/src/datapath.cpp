#include "sysfi/datapath.hpp"

#include <charconv>

#include <fmt/format.h>

namespace sysfi {

void SaConfig::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument(fmt::format("invalid array size {}x{}", rows, cols));
}

std::string SaConfig::label() const { return fmt::format("{}x{}", rows, cols); }

SaConfig SaConfig::parse(std::string_view text) {
  const auto x = text.find('x');
  auto parse_int = [&](std::string_view part) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty())
      throw std::invalid_argument(fmt::format("array size must look like RxC, got '{}'", text));
    return v;
  };
  if (x == std::string_view::npos) throw std::invalid_argument(fmt::format("array size must look like RxC, got '{}'", text));
  SaConfig sa{parse_int(text.substr(0, x)), parse_int(text.substr(x + 1))};
  sa.validate();
  return sa;
}

namespace {
constexpr std::array<std::string_view, 9> kGroupNames = {
    "w-reg",     "sa-ffchain-h-reg", "sa-h-reg", "sa-v-reg", "sa-ffchain-v-reg",
    "accum-reg", "round-reg",        "nlf-reg",  "pool-reg",
};
}  // namespace

std::string_view group_name(RegisterGroup group) { return kGroupNames[static_cast<std::size_t>(group)]; }

RegisterGroup parse_group(std::string_view name) {
  for (std::size_t i = 0; i < kGroupNames.size(); ++i)
    if (kGroupNames[i] == name) return static_cast<RegisterGroup>(i);
  throw std::invalid_argument(fmt::format("unknown register group '{}'", name));
}

int register_width(RegisterGroup group) {
  switch (group) {
    case RegisterGroup::SaVReg:
    case RegisterGroup::SaFfchainV:
    case RegisterGroup::AccumReg:
      return 32;
    default:
      return 8;
  }
}

int register_count(RegisterGroup group, const SaConfig& sa) {
  const int r = sa.rows, c = sa.cols;
  switch (group) {
    case RegisterGroup::WReg: return r * c;
    case RegisterGroup::SaFfchainH: return r * (r + 1) / 2;
    case RegisterGroup::SaHReg: return r * (c - 1);
    case RegisterGroup::SaVReg: return (r - 1) * c;
    case RegisterGroup::SaFfchainV: return c * (c + 1) / 2;
    case RegisterGroup::AccumReg:
    case RegisterGroup::RoundReg:
    case RegisterGroup::NlfReg:
    case RegisterGroup::PoolReg: return c;
  }
  return 0;
}

PipelineState::PipelineState(SaConfig sa) : sa_(sa) {
  sa_.validate();
  const auto count = [&](RegisterGroup g) { return static_cast<std::size_t>(register_count(g, sa_)); };
  w_.assign(count(RegisterGroup::WReg), 0);
  skew_.assign(count(RegisterGroup::SaFfchainH), 0);
  sa_h_.assign(count(RegisterGroup::SaHReg), 0);
  sa_v_.assign(count(RegisterGroup::SaVReg), 0);
  deskew_.assign(count(RegisterGroup::SaFfchainV), 0);
  deskew_offset_.resize(sa_.cols + 1);
  deskew_offset_[0] = 0;
  for (int c = 0; c < sa_.cols; ++c) deskew_offset_[c + 1] = deskew_offset_[c] + (sa_.cols - c);
  accum_.assign(sa_.cols, 0);
  round_.assign(sa_.cols, 0);
  nlf_.assign(sa_.cols, 0);
  pool_.assign(sa_.cols, 0);
}

void PipelineState::step(const StepControl& ctrl) {
  const int rows = sa_.rows, cols = sa_.cols;
  const auto now = static_cast<std::int64_t>(cycle_);

  // Post-processing runs back to front so every stage sees last edge's value.
  if (ctrl.pool != PoolOp::None) {
    for (int c = 0; c < cols; ++c) pool_[c] = ctrl.pool == PoolOp::Restart ? nlf_[c] : max2(pool_[c], nlf_[c]);
    last_pool_ = now;
  }
  if (ctrl.nlf) {
    if (ctrl.lut == nullptr) throw std::invalid_argument("nlf strobe without a LUT");
    for (int c = 0; c < cols; ++c) nlf_[c] = nlf_apply(*ctrl.lut, round_[c]);
    last_nlf_ = now;
  }
  if (ctrl.round) {
    for (int c = 0; c < cols; ++c) round_[c] = requantize(accum_[c], ctrl.shift);
    last_round_ = now;
  }
  switch (ctrl.accum) {
    case AccumOp::Hold:
      break;
    case AccumOp::LoadBias:
      if (ctrl.bias.size() != static_cast<std::size_t>(cols)) throw std::invalid_argument("bias load needs C values");
      for (int c = 0; c < cols; ++c) accum_[c] = ctrl.bias[c];
      break;
    case AccumOp::Accumulate:
      for (int c = 0; c < cols; ++c) accum_[c] = wrap_add(accum_[c], deskew_[deskew_offset_[c + 1] - 1]);
      last_accum_ = now;
      break;
  }

  // Deskew chains shift towards the accumulators; slot 0 is refilled by the
  // bottom MAC row below.
  for (int c = 0; c < cols; ++c) {
    const std::size_t base = deskew_offset_[c];
    for (std::size_t j = deskew_offset_[c + 1] - 1; j > base; --j) deskew_[j] = deskew_[j - 1];
  }

  // MAC grid, visited bottom-right to top-left so reads hit last edge's values.
  for (int r = rows - 1; r >= 0; --r) {
    for (int c = cols - 1; c >= 0; --c) {
      const i8 a = c == 0 ? skew_[skew_offset(r) + r] : sa_h_[static_cast<std::size_t>(r) * (cols - 1) + c - 1];
      const i32 psum_in = r == 0 ? 0 : sa_v_[static_cast<std::size_t>(r - 1) * cols + c];
      const i32 psum = mac(a, w_[static_cast<std::size_t>(r) * cols + c], psum_in);
      if (c < cols - 1) sa_h_[static_cast<std::size_t>(r) * (cols - 1) + c] = a;
      if (r < rows - 1)
        sa_v_[static_cast<std::size_t>(r) * cols + c] = psum;
      else
        deskew_[deskew_offset_[c]] = psum;
    }
  }

  // Input skew chains.
  if (!ctrl.row_inputs.empty() && ctrl.row_inputs.size() != static_cast<std::size_t>(rows))
    throw std::invalid_argument("row inputs need R values");
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = skew_offset(r);
    for (std::size_t j = base + r; j > base; --j) skew_[j] = skew_[j - 1];
    skew_[base] = ctrl.row_inputs.empty() ? i8{0} : ctrl.row_inputs[r];
  }
  if (!ctrl.row_inputs.empty()) last_issue_ = now;

  if (!ctrl.weights.empty()) {
    if (ctrl.weights.size() != w_.size()) throw std::invalid_argument("weight tile needs R*C values");
    std::copy(ctrl.weights.begin(), ctrl.weights.end(), w_.begin());
  }
  ++cycle_;
}

void PipelineState::load_weights(std::span<const i8> tile) {
  if (tile.size() != w_.size())
    throw std::invalid_argument(fmt::format("weight tile has {} values, array needs {}", tile.size(), w_.size()));
  StepControl ctrl;
  ctrl.weights = tile;
  step(ctrl);
}

std::vector<i8> PipelineState::drain(bool pool_mode) const {
  const std::int64_t latency = sa_.rows + sa_.cols;
  if (last_issue_ >= 0 && last_accum_ < last_issue_ + latency)
    throw IncompletePipelineError("activations still travelling through the array");
  if (last_accum_ >= 0 && last_round_ <= last_accum_) throw IncompletePipelineError("accumulated sum not yet rounded");
  if (last_round_ >= 0 && last_nlf_ <= last_round_) throw IncompletePipelineError("rounded value not yet through NLF");
  if (pool_mode && last_nlf_ >= 0 && last_pool_ <= last_nlf_)
    throw IncompletePipelineError("NLF output not yet pooled");
  return pool_mode ? pool_ : nlf_;
}

std::uint32_t PipelineState::read(RegisterGroup group, int instance) const {
  if (instance < 0 || instance >= register_count(group, sa_))
    throw std::out_of_range(fmt::format("{} instance {} out of range", group_name(group), instance));
  auto u8 = [](i8 v) { return static_cast<std::uint32_t>(static_cast<std::uint8_t>(v)); };
  auto u32 = [](i32 v) { return static_cast<std::uint32_t>(v); };
  switch (group) {
    case RegisterGroup::WReg: return u8(w_[instance]);
    case RegisterGroup::SaFfchainH: return u8(skew_[instance]);
    case RegisterGroup::SaHReg: return u8(sa_h_[instance]);
    case RegisterGroup::SaVReg: return u32(sa_v_[instance]);
    case RegisterGroup::SaFfchainV: return u32(deskew_[instance]);
    case RegisterGroup::AccumReg: return u32(accum_[instance]);
    case RegisterGroup::RoundReg: return u8(round_[instance]);
    case RegisterGroup::NlfReg: return u8(nlf_[instance]);
    case RegisterGroup::PoolReg: return u8(pool_[instance]);
  }
  return 0;
}

void PipelineState::flip(const RegisterAddress& address) {
  const auto group = address.group;
  if (address.instance < 0 || address.instance >= register_count(group, sa_))
    throw std::out_of_range(fmt::format("{} instance {} out of range for {}", group_name(group), address.instance,
                                        sa_.label()));
  if (address.bit < 0 || address.bit >= register_width(group))
    throw std::out_of_range(fmt::format("{} bit {} out of range", group_name(group), address.bit));
  const auto i = static_cast<std::size_t>(address.instance);
  auto flip8 = [&](std::vector<i8>& regs) { regs[i] = static_cast<i8>(regs[i] ^ static_cast<i8>(1u << address.bit)); };
  auto flip32 = [&](std::vector<i32>& regs) {
    regs[i] = static_cast<i32>(static_cast<std::uint32_t>(regs[i]) ^ (std::uint32_t{1} << address.bit));
  };
  switch (group) {
    case RegisterGroup::WReg: flip8(w_); break;
    case RegisterGroup::SaFfchainH: flip8(skew_); break;
    case RegisterGroup::SaHReg: flip8(sa_h_); break;
    case RegisterGroup::SaVReg: flip32(sa_v_); break;
    case RegisterGroup::SaFfchainV: flip32(deskew_); break;
    case RegisterGroup::AccumReg: flip32(accum_); break;
    case RegisterGroup::RoundReg: flip8(round_); break;
    case RegisterGroup::NlfReg: flip8(nlf_); break;
    case RegisterGroup::PoolReg: flip8(pool_); break;
  }
}

void PipelineState::for_each_register(const std::function<void(RegisterGroup, int, std::uint32_t)>& fn) const {
  for (auto group : kAllGroups) {
    const int n = register_count(group, sa_);
    for (int i = 0; i < n; ++i) fn(group, i, read(group, i));
  }
}

bool PipelineState::same_registers(const PipelineState& o) const {
  return sa_ == o.sa_ && cycle_ == o.cycle_ && w_ == o.w_ && skew_ == o.skew_ && sa_h_ == o.sa_h_ &&
         sa_v_ == o.sa_v_ && deskew_ == o.deskew_ && accum_ == o.accum_ && round_ == o.round_ && nlf_ == o.nlf_ &&
         pool_ == o.pool_;
}

std::string trace_line(const PipelineState& state) {
  std::string line = fmt::format("{}", state.cycle() - 1);
  state.for_each_register([&](RegisterGroup g, int i, std::uint32_t v) {
    line += register_width(g) == 8 ? fmt::format(" {}:{}={:02x}", group_name(g), i, v)
                                   : fmt::format(" {}:{}={:08x}", group_name(g), i, v);
  });
  return line;
}

}  // namespace sysfi
