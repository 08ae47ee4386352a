// SPDX-License-Identifier: Apache-2.0
//
// misac - multistatic asynchronous ISAC sensing toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <complex>
#include <cstdint>

namespace misac {

// Deterministic, platform-independent random stream. std::normal_distribution
// is implementation-defined, which would break the bit-identical-output
// contract across standard libraries, so the generator and the Gaussian
// transform are pinned here. Streams are keyed by (seed, rx, k, stream id):
// frames can be synthesized in any order without changing the output.
class KeyedRng {
  public:
    enum Stream : std::uint64_t { clock_stream = 1, noise_stream = 2 };

    KeyedRng(std::uint64_t seed, std::uint64_t rx_id, std::uint64_t k, std::uint64_t stream);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double next_uniform();

    /// Standard normal via Box-Muller (consumes two uniforms per pair).
    double next_normal();

    /// Circularly-symmetric complex normal with total variance 1.
    std::complex<double> next_complex_normal();

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace misac
