#pragma once

#include "cfcal/types.hpp"

#include <functional>

namespace cfcal {

// Anything that turns a camera-frame observation and a commanded orientation
// into a base-frame command.
using Predictor = std::function<BasePosition(const CameraPosition&, const Orientation&)>;

}  // namespace cfcal
