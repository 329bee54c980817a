#include "uniedge/linalg.hpp"

#include <Eigen/Eigenvalues>

#include "uniedge/errors.hpp"

namespace uniedge {

Tensor to_tensor(const Matrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return t;
}

Matrix to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw ShapeMismatch("to_matrix needs a rank-2 tensor, got " + to_string(t.shape()));
  const auto rows = static_cast<Eigen::Index>(t.dim(0)), cols = static_cast<Eigen::Index>(t.dim(1));
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t[static_cast<std::size_t>(r * cols + c)];
  return m;
}

Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

}  // namespace uniedge
