#include "hinet/reference.hpp"

#include <cmath>

namespace hinet {

DenseFactorization::DenseFactorization(const Eigen::MatrixXd& g) {
  if (g.rows() > 5000)
    throw std::invalid_argument("DenseFactorization: dimension " +
                                std::to_string(g.rows()) +
                                " exceeds the 5000 guard");
  factors_ = dense::lu_factor(g);

  std::uint64_t nnz_l = 0, nnz_u = 0;
  const int n = dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (factors_.lu(i, j) == 0.0) continue;
      (i > j ? nnz_l : nnz_u) += 1;
    }
  sparse_substitute_flops_ = 2 * (nnz_l + nnz_u);
}

Eigen::VectorXd DenseFactorization::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  dense::lu_solve_inplace(factors_, x, solve_flops_);
  return x;
}

std::uint64_t DenseFactorization::solve_flops_per_call() const {
  const auto n = static_cast<std::uint64_t>(dim());
  return n * (n - 1) / 2 * 2 + n * (n + 1) / 2 + n * (n - 1) / 2;
}

Eigen::MatrixXd DenseFactorization::inverse() const {
  std::uint64_t scratch = 0;
  return dense::lu_invert(factors_, scratch);
}

DenseFactorization factor(const ConductanceMatrix& g) {
  return DenseFactorization(g);
}

ErrorReport inverse_error(const HInverse& hinv, const ConductanceMatrix& g) {
  const DenseFactorization f(g);
  const Eigen::MatrixXd exact = f.inverse();
  const Eigen::MatrixXd approx = hinv.materialize();
  ErrorReport r;
  r.metric = "relative_inverse_error";
  r.norm = "frobenius";
  r.operands = "materialize(hinv) vs direct inverse, N=" + std::to_string(g.dim());
  r.value = (approx - exact).norm() / exact.norm();
  return r;
}

ErrorReport voltage_error(const Eigen::VectorXd& v_test,
                          const Eigen::VectorXd& v_ref) {
  if (v_test.size() != v_ref.size())
    throw std::invalid_argument("voltage_error: length mismatch");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < v_ref.size(); ++i) {
    const double denom = std::max(std::abs(v_ref[i]), kVoltageErrorFloor);
    worst = std::max(worst, std::abs(v_test[i] - v_ref[i]) / denom);
  }
  ErrorReport r;
  r.metric = "max_relative_voltage_error";
  r.norm = "max-relative-entry";
  r.operands = "v_test vs v_ref, N=" + std::to_string(v_ref.size());
  r.value = worst;
  return r;
}

}  // namespace hinet
