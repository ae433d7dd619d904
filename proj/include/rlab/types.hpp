#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rlab {

// Row-major double storage so weight snapshots serialize without transposes.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Vector2 = Eigen::Vector2d;
using Index = Eigen::Index;

using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

} // namespace rlab
