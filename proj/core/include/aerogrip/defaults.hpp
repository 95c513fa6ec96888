#pragma once

#include "aerogrip/density.hpp"

namespace aerogrip::defaults {

// Sample counts (kept constant across all experiments).
inline constexpr int kObjectFeatures = 500;   // N_O
inline constexpr int kTaskFeatures = 50;      // N_T
inline constexpr int kContactKernels = 500;   // N_C
inline constexpr int kQueryFeatures = 500;    // N_i
inline constexpr int kQueryTaskFeatures = 5;  // N_j
inline constexpr int kQueryKernels = 1000;    // N_Q

// Bandwidths (user-definable; these are the library defaults).
inline constexpr Bandwidths kSurfaceBandwidths{0.01, 100.0, 10.0};
inline constexpr Bandwidths kTaskBandwidths{0.05, 100.0, 10.0};
inline constexpr Bandwidths kContactBandwidths{0.01, 100.0, 10.0};

inline constexpr double kAlpha = 10.0;        // configuration gate, 1/m^2
inline constexpr double kConfigSigmaP = 0.1;  // configuration link bandwidth
inline constexpr double kConfigSigmaQ = 100.0;
inline constexpr double kRotWeight = 1.0;  // meters per radian

inline constexpr double kContactRadius = 0.05;  // meters
inline constexpr int kNeighbors = 30;
inline constexpr double kRegionRadius = 0.1;    // meters
inline constexpr double kMinSeparation = 0.05;  // candidate dedup
inline constexpr double kMaxTiltDeg = 90.0;

}  // namespace aerogrip::defaults
