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
#include <vector>

#include <Eigen/Dense>

namespace misac {

using Complex = std::complex<double>;

// Row-major so that the in-memory layout matches the frame stream file
// (beam-major, then tap).
using GainMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One channel estimate: complex gains indexed by beam pattern (row) and
/// tap (column).
struct CirFrame {
    std::uint32_t k = 0;
    std::uint32_t rx_id = 0;
    GainMatrix gains;

    int beams() const { return static_cast<int>(gains.rows()); }
    int taps() const { return static_cast<int>(gains.cols()); }
};

/// Per-tap aggregate magnitude m(l) = max over beams of |gains(b, l)|.
Eigen::VectorXd tap_peak_magnitude(const CirFrame &frame);

/// True when every gain is finite (no NaN/Inf in either component).
bool all_finite(const CirFrame &frame);

using CirStream = std::vector<CirFrame>;

} // namespace misac
