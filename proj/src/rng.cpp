#include "latticefringe/rng.hpp"

#include "latticefringe/core_model.hpp"

namespace latticefringe {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = std::uint64_t{a} * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhaseStream::PhaseStream(std::uint64_t seed, std::uint64_t stream_index)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream_index) {}

std::uint64_t PhaseStream::next_u64() {
  if (used_ >= 4) {
    buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                         key_);
    ++block_;
    used_ = 0;
  }
  const std::uint64_t value = (std::uint64_t{buffer_[used_]} << 32) | buffer_[used_ + 1];
  used_ += 2;
  return value;
}

double PhaseStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

Eigen::VectorXd sample_phases(int site_count, PhaseStream& stream) {
  Eigen::VectorXd phases(site_count);
  for (int i = 0; i < site_count; ++i) phases[i] = kTwoPi * stream.next_unit();
  // 2π·u can round to 2π for u just below 1.
  for (int i = 0; i < site_count; ++i)
    if (phases[i] >= kTwoPi) phases[i] = 0.0;
  return phases;
}

}  // namespace latticefringe
