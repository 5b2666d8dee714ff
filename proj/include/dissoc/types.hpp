#pragma once

#include <Eigen/Dense>
#include <complex>

namespace dissoc {

using Real = double;
using Complex = std::complex<Real>;

// Position- or momentum-space field on the 1D lattice, one value per grid point.
using Field1D = Eigen::Array<Complex, Eigen::Dynamic, 1>;
// Two-point function G(x, x'); row index is x, column index is x'.
using Field2D = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

using RealArray = Eigen::Array<Real, Eigen::Dynamic, 1>;

}  // namespace dissoc
