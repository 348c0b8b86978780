#pragma once

#include <string_view>

namespace ttsprep {

inline constexpr std::string_view kToolName = "ttsprep";
inline constexpr std::string_view kVersion = "0.1.0";

// Canonical sample rate of every prepared corpus artifact.
inline constexpr int kCanonicalSampleRate = 22050;

}  // namespace ttsprep
