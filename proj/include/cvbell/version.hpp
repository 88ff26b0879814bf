#pragma once

#ifndef CVBELL_VERSION
#define CVBELL_VERSION "0.1.0"
#endif

namespace cvbell {

inline constexpr const char* kVersion = CVBELL_VERSION;

}  // namespace cvbell
