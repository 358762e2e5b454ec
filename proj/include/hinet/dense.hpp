#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hinet::dense {

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& msg, double cond_estimate)
      : std::runtime_error(msg), condition_estimate(cond_estimate) {}
  double condition_estimate;
};

/// LU factorization with partial pivoting, L\U packed in one matrix
/// (unit lower triangle implicit). `pivots[k]` is the row swapped with
/// row k at elimination step k.
struct LuFactors {
  Eigen::MatrixXd lu;
  std::vector<int> pivots;
  std::uint64_t flops = 0;      // adds + multiplies spent factoring
  double pivot_ratio = 1.0;     // max|u_kk| / min|u_kk|, crude cond proxy
};

/// Throws SingularMatrixError when a pivot falls below n*eps*max|a|.
LuFactors lu_factor(Eigen::MatrixXd a);

/// In-place forward/backward substitution. Adds the exact substitute
/// operation count to `flops`: n(n-1)/2 each of mult/add for the unit-L
/// sweep, n(n+1)/2 mult (incl. n divides) and n(n-1)/2 add for U.
void lu_solve_inplace(const LuFactors& f, Eigen::VectorXd& b,
                      std::uint64_t& flops);

/// Explicit inverse via column solves against the identity. Forward
/// sweeps skip the leading zeros of each unit column.
Eigen::MatrixXd lu_invert(const LuFactors& f, std::uint64_t& flops);

/// y = a*x for a dense m-by-n block: m*n multiplies, m*(n-1) additions.
inline void counted_matvec(const Eigen::MatrixXd& a,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           Eigen::Ref<Eigen::VectorXd> y,
                           std::uint64_t& flops) {
  y.noalias() = a * x;
  const auto m = static_cast<std::uint64_t>(a.rows());
  const auto n = static_cast<std::uint64_t>(a.cols());
  flops += m * n + (n > 0 ? m * (n - 1) : 0);
}

/// Closed-form count of counted_matvec for an m-by-n block.
inline std::uint64_t matvec_flops(std::uint64_t m, std::uint64_t n) {
  return m * n + (n > 0 ? m * (n - 1) : 0);
}

}  // namespace hinet::dense
