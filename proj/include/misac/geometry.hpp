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

#include <Eigen/Dense>

namespace misac {

using Vec2 = Eigen::Vector2d;

inline constexpr double speed_of_light = 299792458.0;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// World-frame angle of a vector, atan2 convention.
double angle_of(const Vec2 &v);

/// Unit vector at a world-frame angle.
Vec2 unit_vector(double angle);

// Angle conventions used throughout:
//  - "world" angles are absolute, measured counterclockwise from the +x axis.
//    Beam centers and scatterer angles of departure are world angles, since
//    the beam fan is a property of the TX alone.
//  - "baseline" angles are measured at the TX from the TX->RX direction,
//    counterclockwise. Bistatic localization operates in this frame; a
//    receiver-specific conversion is theta_baseline = wrap(theta_world -
//    angle_of(rx - tx)).

/// Fixed TX/RX pair. Caches nothing; all members are cheap.
struct BistaticPair {
    Vec2 tx;
    Vec2 rx;

    double baseline() const { return (rx - tx).norm(); }
    double baseline_angle() const { return angle_of(rx - tx); }

    /// Total bistatic path length |p-tx| + |p-rx|.
    double sum_range(const Vec2 &p) const { return (p - tx).norm() + (p - rx).norm(); }

    /// sum_range minus the LOS baseline; nonnegative by the triangle inequality.
    double excess_range(const Vec2 &p) const { return sum_range(p) - baseline(); }

    double aod_world(const Vec2 &p) const { return angle_of(p - tx); }
    double aod_baseline(const Vec2 &p) const { return wrap_angle(aod_world(p) - baseline_angle()); }
};

/// Inverts the bistatic ellipse: given the excess bistatic range and the
/// angle of departure theta (baseline frame), returns the target position in
/// world coordinates. Throws std::domain_error when the geometry degenerates
/// (zero excess range, or target on the baseline toward the RX).
Vec2 localize_bistatic(double excess_range, double theta, const Vec2 &tx, const Vec2 &rx);

/// Bistatic angle geometry at one target position.
struct BistaticGeometrySample {
    Vec2 tx;
    Vec2 rx;
    Vec2 target;
    double beta; ///< angle between (tx - target) and (rx - target), in [0, pi]
    double xi;   ///< cos(beta / 2), in [0, 1]
};

/// Computes the bistatic angle beta and the Doppler scaling factor
/// xi = cos(beta/2) for a target position. Throws std::domain_error if the
/// target coincides with the TX or the RX.
BistaticGeometrySample bistatic_factor(const Vec2 &tx, const Vec2 &rx, const Vec2 &p);

/// Analytic bistatic Doppler frequency of a point scatterer,
/// f_D = -(1/lambda) * d/dt (|p-tx| + |p-rx|). Positive when approaching.
double bistatic_doppler(const Vec2 &p, const Vec2 &v, const Vec2 &tx, const Vec2 &rx,
                        double wavelength);

} // namespace misac
