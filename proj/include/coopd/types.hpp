#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace coopd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;  // column-major
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::int64_t>;

using VecRef = Eigen::Ref<Vector>;
using ConstVecRef = Eigen::Ref<const Vector>;

}  // namespace coopd
