#ifndef CAUSALNET_VERSION_HPP
#define CAUSALNET_VERSION_HPP

namespace causalnet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace causalnet

#endif  // CAUSALNET_VERSION_HPP
