#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace kronsolve {

// Column-major throughout, so vec() is a reinterpretation of the storage.
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;  // compressed column storage
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace kronsolve
