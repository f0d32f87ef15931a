#include "mflab/version.hpp"

#include <Eigen/Core>
#include <fftw3.h>

namespace mflab {

std::string version() { return MFLAB_VERSION_STRING; }

std::string fftw_version() { return ::fftw_version; }

std::string eigen_version() {
  return std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
         std::to_string(EIGEN_MINOR_VERSION);
}

}  // namespace mflab
