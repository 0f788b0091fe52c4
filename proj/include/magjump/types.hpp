#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace magjump {

using Real = double;
using Complex = std::complex<double>;

using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Dense vertex index. Vertex ids are strings; every graph maps them to
/// contiguous indices in insertion order.
using Index = std::int32_t;

} // namespace magjump
