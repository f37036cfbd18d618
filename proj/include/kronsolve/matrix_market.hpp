#pragma once

#include <string>
#include <variant>

#include "kronsolve/types.hpp"

namespace kronsolve {

/// Result of reading a MatrixMarket file: coordinate files load as sparse,
/// array files as dense.
using MatrixMarketMatrix = std::variant<DenseMatrix, SparseMatrix>;

MatrixMarketMatrix read_matrix_market(const std::string& path);

/// Convenience readers that convert to the requested representation.
DenseMatrix read_matrix_market_dense(const std::string& path);
SparseMatrix read_matrix_market_sparse(const std::string& path);

/// Writers emit 1-based indices and 17 significant digits.
void write_matrix_market(const std::string& path, const DenseMatrix& A);
void write_matrix_market(const std::string& path, const SparseMatrix& A);

}  // namespace kronsolve
