#pragma once

#include <string>

namespace mflab {

/// Library version, e.g. "0.1.0".
std::string version();
/// Version string reported by the linked FFTW.
std::string fftw_version();
/// Eigen version the library was compiled against.
std::string eigen_version();

}  // namespace mflab
