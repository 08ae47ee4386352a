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

#include "misac/cir.hpp"

#include <cmath>

namespace misac {

Eigen::VectorXd tap_peak_magnitude(const CirFrame &frame)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(frame.taps());
    for (int l = 0; l < frame.taps(); ++l) {
        double best = 0.0;
        for (int b = 0; b < frame.beams(); ++b)
            best = std::max(best, std::abs(frame.gains(b, l)));
        m[l] = best;
    }
    return m;
}

bool all_finite(const CirFrame &frame)
{
    for (int b = 0; b < frame.beams(); ++b)
        for (int l = 0; l < frame.taps(); ++l) {
            const Complex &g = frame.gains(b, l);
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
                return false;
        }
    return true;
}

} // namespace misac
