#include "hinet/dense.hpp"

#include <cmath>
#include <limits>

namespace hinet::dense {

LuFactors lu_factor(Eigen::MatrixXd a) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n) throw std::invalid_argument("lu_factor: matrix not square");

  LuFactors f;
  f.pivots.resize(n);
  std::uint64_t mults = 0, adds = 0;

  const double scale = n > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
  const double tiny =
      std::max(scale, 1.0) * n * std::numeric_limits<double>::epsilon();

  double piv_max = 0.0, piv_min = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    f.pivots[k] = p;
    if (p != k) a.row(k).swap(a.row(p));

    const double piv = a(k, k);
    piv_max = std::max(piv_max, std::abs(piv));
    piv_min = std::min(piv_min, std::abs(piv));
    if (std::abs(piv) <= tiny) {
      const double cond =
          piv_min > 0 ? piv_max / piv_min : std::numeric_limits<double>::infinity();
      throw SingularMatrixError(
          "lu_factor: singular matrix (pivot " + std::to_string(piv) +
              " at step " + std::to_string(k) + ", condition estimate " +
              std::to_string(cond) + ")",
          cond);
    }

    const int m = n - k - 1;
    if (m > 0) {
      a.col(k).tail(m) /= piv;
      a.bottomRightCorner(m, m).noalias() -=
          a.col(k).tail(m) * a.row(k).tail(m);
      mults += static_cast<std::uint64_t>(m);          // the divides
      mults += static_cast<std::uint64_t>(m) * m;      // rank-1 update
      adds += static_cast<std::uint64_t>(m) * m;
    }
  }

  f.lu = std::move(a);
  f.flops = mults + adds;
  f.pivot_ratio = piv_min > 0 ? piv_max / piv_min
                              : std::numeric_limits<double>::infinity();
  return f;
}

void lu_solve_inplace(const LuFactors& f, Eigen::VectorXd& b,
                      std::uint64_t& flops) {
  const int n = static_cast<int>(f.lu.rows());
  if (b.size() != n) throw std::invalid_argument("lu_solve: size mismatch");

  for (int k = 0; k < n; ++k)
    if (f.pivots[k] != k) std::swap(b[k], b[f.pivots[k]]);

  // L y = Pb, unit diagonal
  for (int i = 1; i < n; ++i)
    b[i] -= f.lu.row(i).head(i).dot(b.head(i));
  // U x = y
  for (int i = n - 1; i >= 0; --i) {
    const int m = n - 1 - i;
    if (m > 0) b[i] -= f.lu.row(i).tail(m).dot(b.tail(m));
    b[i] /= f.lu(i, i);
  }

  const auto un = static_cast<std::uint64_t>(n);
  flops += un * (un - 1) / 2 + un * (un - 1) / 2;      // forward
  flops += un * (un + 1) / 2 + un * (un - 1) / 2;      // backward (incl. divides)
}

Eigen::MatrixXd lu_invert(const LuFactors& f, std::uint64_t& flops) {
  const int n = static_cast<int>(f.lu.rows());
  Eigen::MatrixXd x(n, n);
  Eigen::VectorXd b(n);
  std::uint64_t mults = 0, adds = 0;

  for (int j = 0; j < n; ++j) {
    b.setZero();
    b[j] = 1.0;
    for (int k = 0; k < n; ++k)
      if (f.pivots[k] != k) std::swap(b[k], b[f.pivots[k]]);

    int first = 0;
    while (first < n && b[first] == 0.0) ++first;

    for (int i = first + 1; i < n; ++i) {
      const int len = i - first;
      b[i] -= f.lu.row(i).segment(first, len).dot(b.segment(first, len));
      mults += static_cast<std::uint64_t>(len);
      adds += static_cast<std::uint64_t>(len);
    }
    for (int i = n - 1; i >= 0; --i) {
      const int m = n - 1 - i;
      if (m > 0) {
        b[i] -= f.lu.row(i).tail(m).dot(b.tail(m));
        mults += static_cast<std::uint64_t>(m);
        adds += static_cast<std::uint64_t>(m);
      }
      b[i] /= f.lu(i, i);
      mults += 1;
    }
    x.col(j) = b;
  }

  flops += mults + adds;
  return x;
}

}  // namespace hinet::dense
