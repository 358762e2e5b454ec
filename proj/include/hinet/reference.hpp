#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "hinet/conductance.hpp"
#include "hinet/dense.hpp"
#include "hinet/hinv.hpp"

namespace hinet {

/// Direct-factorization baseline. Dense at desk scale (N <= 5000); to keep
/// the comparison fair it also reports an idealized sparse substitute count
/// based on the nonzeros of the factors.
class DenseFactorization {
 public:
  explicit DenseFactorization(const Eigen::MatrixXd& g);
  explicit DenseFactorization(const ConductanceMatrix& g)
      : DenseFactorization(g.dense()) {}

  int dim() const { return static_cast<int>(factors_.lu.rows()); }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd inverse() const;

  std::uint64_t factor_flops() const { return factors_.flops; }
  std::uint64_t solve_flops() const { return solve_flops_; }
  /// Exact substitute count of one dense solve at this dimension.
  std::uint64_t solve_flops_per_call() const;
  /// 2*(nnz(L)+nnz(U)): what a sparse substitute with this fill would cost.
  std::uint64_t sparse_substitute_flops() const { return sparse_substitute_flops_; }

 private:
  dense::LuFactors factors_;
  std::uint64_t sparse_substitute_flops_ = 0;
  mutable std::uint64_t solve_flops_ = 0;
};

DenseFactorization factor(const ConductanceMatrix& g);

struct ErrorReport {
  std::string metric;
  double value = 0.0;
  std::string norm;
  std::string operands;
};

/// ||materialize(hinv) - G^{-1}||_F / ||G^{-1}||_F with G^{-1} from the
/// direct factorization.
ErrorReport inverse_error(const HInverse& hinv, const ConductanceMatrix& g);

/// max over nodes of |dv| / max(|v_ref|, 1e-9 V); the floor keeps zero
/// crossings from blowing up the quotient.
ErrorReport voltage_error(const Eigen::VectorXd& v_test,
                          const Eigen::VectorXd& v_ref);

inline constexpr double kVoltageErrorFloor = 1e-9;

}  // namespace hinet
