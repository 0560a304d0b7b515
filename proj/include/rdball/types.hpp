#pragma once

#include <Eigen/Core>
#include <complex>
#include <utility>

namespace rdball {

using Index = Eigen::Index;

/// Harmonic mode key (degree l, order m).
using ModeKey = std::pair<Index, Index>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using ComplexVector = Vector<std::complex<Scalar>>;

}  // namespace rdball
