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

#include "misac/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace misac {

double wrap_angle(double a)
{
    a = std::fmod(a, 2.0 * M_PI);
    if (a > M_PI)
        a -= 2.0 * M_PI;
    else if (a <= -M_PI)
        a += 2.0 * M_PI;
    return a;
}

double angle_of(const Vec2 &v)
{
    return std::atan2(v.y(), v.x());
}

Vec2 unit_vector(double angle)
{
    return {std::cos(angle), std::sin(angle)};
}

Vec2 localize_bistatic(double excess_range, double theta, const Vec2 &tx, const Vec2 &rx)
{
    const double L = (rx - tx).norm();
    if (L <= 0.0)
        throw std::domain_error("localize_bistatic: TX and RX coincide");
    if (excess_range <= 0.0)
        throw std::domain_error("localize_bistatic: target on the LOS segment (zero excess range)");

    const double r_sum = L + excess_range;
    const double denom = r_sum - L * std::cos(theta);
    // denom -> 0 only as excess -> 0 with theta -> 0; guarded above, but keep
    // a numeric floor for near-degenerate inputs.
    if (denom <= 1e-12 * r_sum)
        throw std::domain_error("localize_bistatic: degenerate geometry on the baseline");

    // Law of cosines at the TX vertex between the baseline and the departure
    // direction gives d_rx^2 = d_tx^2 + L^2 - 2 d_tx L cos(theta); substituting
    // d_rx = r_sum - d_tx solves to:
    const double d_tx = (r_sum * r_sum - L * L) / (2.0 * denom);

    const double world_angle = angle_of(rx - tx) + theta;
    return tx + d_tx * unit_vector(world_angle);
}

BistaticGeometrySample bistatic_factor(const Vec2 &tx, const Vec2 &rx, const Vec2 &p)
{
    const Vec2 to_tx = tx - p;
    const Vec2 to_rx = rx - p;
    const double n1 = to_tx.norm();
    const double n2 = to_rx.norm();
    if (n1 <= 0.0 || n2 <= 0.0)
        throw std::domain_error("bistatic_factor: target coincides with TX or RX");

    double c = to_tx.dot(to_rx) / (n1 * n2);
    c = std::clamp(c, -1.0, 1.0);
    const double beta = std::acos(c);

    return {tx, rx, p, beta, std::cos(0.5 * beta)};
}

double bistatic_doppler(const Vec2 &p, const Vec2 &v, const Vec2 &tx, const Vec2 &rx,
                        double wavelength)
{
    const Vec2 u_tx = (p - tx).normalized();
    const Vec2 u_rx = (p - rx).normalized();
    // d/dt (|p-tx| + |p-rx|) = v . (u_tx + u_rx)
    return -v.dot(u_tx + u_rx) / wavelength;
}

} // namespace misac
