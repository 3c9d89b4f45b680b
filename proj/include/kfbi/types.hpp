#ifndef KFBI_TYPES_HPP
#define KFBI_TYPES_HPP

#include <numbers>

#include <Eigen/Dense>

namespace kfbi {

inline constexpr double kPi = std::numbers::pi;

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseArray2 = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Real = double;
using Vector = DenseVector<Real>;
using Matrix = DenseMatrix<Real>;
using GridArray = DenseArray2<Real>;
using IntArray = DenseArray2<int>;
using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;
using Index = Eigen::Index;

} // namespace kfbi

#endif
