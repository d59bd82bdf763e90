// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "mvoc/tensor.hpp"

namespace mvoc {

/// base*(1-m) + overlay*m, the mask broadcast over channels.
VideoTensor hadamard_blend(const VideoTensor& base, const VideoTensor& overlay, const Mask& mask);

/// Resamples a mask to (target_h, target_w). Shrinking averages the covered
/// area and binarizes at `threshold`; growing in both axes uses nearest
/// neighbour. Same dims return the mask unchanged.
Mask mask_resample(const Mask& mask, std::size_t target_h, std::size_t target_w, double threshold = 0.5);

}  // namespace mvoc
