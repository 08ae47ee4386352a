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

#include <optional>
#include <utility>
#include <vector>

#include "misac/cir.hpp"

namespace misac {

enum class SyncStatus { ok, los_missing, reused_previous };

/// Per-frame sync diagnostics.
struct SyncRecord {
    std::uint32_t k = 0;
    int los_tap = -1;        ///< detected pre-shift LOS tap, -1 when missing
    int shift_taps = 0;      ///< shift actually applied
    double fo_phase_rad = 0; ///< LOS phase used for correction, wrapped to (-pi, pi]
    double los_magnitude = 0;
    double threshold = 0;
    SyncStatus status = SyncStatus::ok;
};

using SyncReport = std::vector<SyncRecord>;

struct SyncPolicy {
    double threshold_kappa = 6.0; ///< dynamic threshold = median + kappa * MAD
    bool drop_on_missing = false; ///< false: reuse previous shift/phase; true: drop frame
};

struct LosDetection {
    std::optional<int> tap; ///< empty when no peak clears the threshold
    double threshold = 0.0;
};

/// Finds the LOS tap: the first local maximum of the per-tap aggregate
/// magnitude m(l) = max_b |h_b(l)| that clears the dynamic threshold
/// median(m) + kappa * MAD(m). First, not largest: the LOS is always the
/// shortest path.
LosDetection detect_los(const CirFrame &frame, double threshold_kappa = 6.0);

/// Shifts every beam row left by los_tap, zero-filling the vacated tail.
/// Linear, not circular: taps before the LOS carry no physical path.
CirFrame align_to(const CirFrame &frame, int los_tap);

/// Phase of the LOS reference on an aligned frame (strongest beam at tap 0),
/// wrapped to (-pi, pi]. Throws stage_error when the LOS magnitude is at or
/// below min_magnitude (unreliable phase).
double estimate_fo_phase(const CirFrame &aligned, double min_magnitude = 0.0);

/// Multiplies every gain by e^{-j phi}; magnitudes are untouched.
CirFrame correct_fo(const CirFrame &frame, double fo_phase_rad);

/// Stateful per-stream TO + FO compensation: detect -> align -> estimate ->
/// correct, with the reuse/drop fallback when the LOS is missing. Frames must
/// arrive in k order; one instance per receiver stream.
class Synchronizer {
  public:
    explicit Synchronizer(SyncPolicy policy = {}) : policy_(policy) {}

    /// Returns the corrected frame, or nullopt when the frame is dropped.
    /// Appends one record per input frame to the report. Throws stage_error
    /// if the very first frame has no LOS under the reuse policy.
    std::optional<CirFrame> process(const CirFrame &frame);

    const SyncReport &report() const { return report_; }
    SyncReport take_report() { return std::move(report_); }

  private:
    SyncPolicy policy_;
    SyncReport report_;
    bool have_previous_ = false;
    int previous_shift_ = 0;
    double previous_phase_ = 0.0;
};

/// Whole-stream convenience wrapper around Synchronizer.
std::pair<CirStream, SyncReport> sync_pipeline(const CirStream &stream, SyncPolicy policy = {});

} // namespace misac
