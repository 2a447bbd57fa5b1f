#ifndef CHAOSCAST_VERSION_HPP
#define CHAOSCAST_VERSION_HPP

namespace chaoscast {

inline constexpr const char* kVersion = "0.1.0";

} // namespace chaoscast

#endif
