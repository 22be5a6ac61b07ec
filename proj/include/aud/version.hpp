#pragma once

namespace aud {

constexpr const char* kToolkitVersion = "1.0.0";

}  // namespace aud
