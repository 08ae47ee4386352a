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

#include "misac/rng.hpp"

#include <cmath>

namespace misac {

namespace {

// splitmix64 (Steele, Lea, Flood 2014); also used here as a mixing function.
std::uint64_t splitmix64(std::uint64_t &x)
{
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_key(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t s = a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2));
    return splitmix64(s);
}

} // namespace

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t rx_id, std::uint64_t k, std::uint64_t stream)
{
    std::uint64_t s = mix_key(seed, 0x5349414d43ULL); // domain separation tag
    s = mix_key(s, rx_id);
    s = mix_key(s, k);
    s = mix_key(s, stream);
    state_ = s;
}

std::uint64_t KeyedRng::next_u64()
{
    return splitmix64(state_);
}

double KeyedRng::next_uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double KeyedRng::next_normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 shifted away from zero so log() stays finite.
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::complex<double> KeyedRng::next_complex_normal()
{
    const double u1 = 1.0 - next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    return {M_SQRT1_2 * r * std::cos(a), M_SQRT1_2 * r * std::sin(a)};
}

} // namespace misac
