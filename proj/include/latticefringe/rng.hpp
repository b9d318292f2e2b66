#pragma once

// Counter-based random streams. Every Monte-Carlo trial draws from its own
// stream keyed by (seed, trial_index), so results do not depend on how
// trials are distributed over workers.

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace latticefringe {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Sequential view of a Philox stream: key = seed, counter high words =
/// stream index, counter low words = block number.
class PhaseStream {
 public:
  PhaseStream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_unit();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// N independent phases uniform on [0, 2π).
Eigen::VectorXd sample_phases(int site_count, PhaseStream& stream);

}  // namespace latticefringe
