#pragma once

#include <Eigen/Core>

#include "uniedge/tensor.hpp"

namespace uniedge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);  // rank-2 tensors only

// Eigenvalues of a symmetric matrix in ascending order.
Vector symmetric_eigenvalues(const Matrix& m);

}  // namespace uniedge
