#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace volcast {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0;
};

/// Central-difference verification of every differentiable operator and every
/// composite network block (LSTM step, both sequence poolings, word- and
/// headline-level attention, zero-imputed temporal context, the stacked price
/// encoder, both classification heads, and the full forward pass) at tiny
/// sizes. Inputs that would sit on a kink (ReLU, absolute difference, max)
/// are kept away from it. Deterministic for a given seed; the error measure
/// is |analytic - numeric| / max(1, |analytic| + |numeric|).
std::vector<GradCheckEntry> gradient_battery(std::uint64_t seed);

}  // namespace volcast
