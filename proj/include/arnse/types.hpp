// Copyright 2026 The arnse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ARNSE_TYPES_HPP_
#define ARNSE_TYPES_HPP_

#include <map>
#include <string>

#include <Eigen/Dense>

namespace arnse {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

// Named dense arrays; used both for model parameters and their gradients.
template <typename Scalar>
using ParamSet = std::map<std::string, MatrixX<Scalar>>;

template <typename Scalar>
using GradSet = ParamSet<Scalar>;

}  // namespace arnse

#endif  // ARNSE_TYPES_HPP_
