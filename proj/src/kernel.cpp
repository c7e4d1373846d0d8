#include "ctx/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctx::kernel {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kRankTol = 1e-12;
constexpr double kRhsTol = 1e-9;

double off_diagonal_norm(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace

EighResult eigh(const Matrix& a_in) {
  if (a_in.rows() != a_in.cols())
    throw std::invalid_argument("eigh: matrix is not square");
  const int n = static_cast<int>(a_in.rows());
  if (n == 0) throw std::invalid_argument("eigh: empty matrix");
  const double scale = std::max(1.0, a_in.cwiseAbs().maxCoeff());
  const double asym = (a_in - a_in.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol * scale)
    throw std::invalid_argument("eigh: matrix is not symmetric (deviation " +
                                std::to_string(asym) + ")");

  Matrix a = 0.5 * (a_in + a_in.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double norm = std::max(a.norm(), 1e-300);
  const double target = 1e-13 * norm;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (off_diagonal_norm(a) <= target) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0)
                             ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                             : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double app = a(p, p);
        const double aqq = a(q, q);
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a(i, i) < a(j, j); });

  EighResult result;
  result.eigenvalues = Vector(n);
  result.eigenvectors = Matrix(n, n);
  for (int k = 0; k < n; ++k) {
    result.eigenvalues(k) = a(order[k], order[k]);
    result.eigenvectors.col(k) = v.col(order[k]);
  }

  const Matrix sym = 0.5 * (a_in + a_in.transpose());
  const double residual = (sym * result.eigenvectors -
                           result.eigenvectors * result.eigenvalues.asDiagonal())
                              .norm();
  if (residual > 1e-10 * std::max(1e-300, sym.norm()))
    throw std::runtime_error("eigh: Jacobi sweeps did not converge (residual " +
                             std::to_string(residual) + ")");
  return result;
}

Matrix project_psd(const Matrix& a) {
  const EighResult eig = eigh(a);
  if (eig.eigenvalues(0) >= 0.0) return 0.5 * (a + a.transpose());
  Vector clipped = eig.eigenvalues.cwiseMax(0.0);
  Matrix out = eig.eigenvectors * clipped.asDiagonal() * eig.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

int svec_dim(int n) { return n * (n + 1) / 2; }

int svec_index(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  if (j >= n || i < 0) throw std::out_of_range("svec_index: bad entry index");
  return j * (j + 1) / 2 + i;
}

Vector svec(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  Vector v(svec_dim(n));
  const double root2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i)
      v(svec_index(i, j, n)) = (i == j) ? a(i, j) : root2 * a(i, j);
  return v;
}

Matrix smat(const Vector& v, int n) {
  if (v.size() != svec_dim(n))
    throw std::invalid_argument("smat: vector length does not match dimension");
  Matrix a(n, n);
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double x = v(svec_index(i, j, n));
      a(i, j) = (i == j) ? x : inv_root2 * x;
      a(j, i) = a(i, j);
    }
  }
  return a;
}

AffineConstraintSet::AffineConstraintSet(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("AffineConstraintSet: dimension must be positive");
}

void AffineConstraintSet::add(const Matrix& a, double b) {
  if (a.rows() != n_ || a.cols() != n_)
    throw std::invalid_argument("AffineConstraintSet::add: shape mismatch");
  raw_rows_.push_back(svec(0.5 * (a + a.transpose())));
  raw_rhs_.push_back(b);
  finalized_ = false;
}

void AffineConstraintSet::add_entry(int i, int j, double value) {
  Vector row = Vector::Zero(svec_dim(n_));
  const double root2 = std::sqrt(2.0);
  row(svec_index(i, j, n_)) = 1.0;
  raw_rows_.push_back(row);
  raw_rhs_.push_back((i == j) ? value : root2 * value);
  finalized_ = false;
}

void AffineConstraintSet::add_row_sum(const std::vector<int>& rows, int col,
                                      double value) {
  Vector row = Vector::Zero(svec_dim(n_));
  const double inv_root2 = 1.0 / std::sqrt(2.0);
  for (int i : rows) {
    // <A, X> with A = (E_ic + E_ci)/2 contributes svec coefficient 1/sqrt(2)
    // off the diagonal and 1 on it.
    if (i == col)
      row(svec_index(i, col, n_)) += 1.0;
    else
      row(svec_index(i, col, n_)) += inv_root2;
  }
  raw_rows_.push_back(row);
  raw_rhs_.push_back(value);
  finalized_ = false;
}

void AffineConstraintSet::finalize() {
  basis_.clear();
  offsets_.clear();
  inconsistent_ = false;
  inconsistency_ = 0.0;
  for (size_t r = 0; r < raw_rows_.size(); ++r) {
    Vector row = raw_rows_[r];
    double rhs = raw_rhs_[r];
    const double original_norm = std::max(1.0, row.norm());
    for (int pass = 0; pass < 2; ++pass) {
      for (size_t k = 0; k < basis_.size(); ++k) {
        const double coeff = basis_[k].dot(row);
        row -= coeff * basis_[k];
        rhs -= coeff * offsets_[k];
      }
    }
    const double norm = row.norm();
    if (norm <= kRankTol * original_norm) {
      const double residual = std::abs(rhs);
      if (residual > kRhsTol * std::max(1.0, std::abs(raw_rhs_[r]))) {
        inconsistent_ = true;
        inconsistency_ = std::max(inconsistency_, residual);
      }
      continue;
    }
    basis_.push_back(row / norm);
    offsets_.push_back(rhs / norm);
  }
  finalized_ = true;
}

bool AffineConstraintSet::fully_determined() const {
  return finalized_ && !inconsistent_ && rank() == svec_dim(n_);
}

Vector AffineConstraintSet::project(const Vector& v) const {
  if (!finalized_)
    throw std::logic_error("AffineConstraintSet: finalize() before project()");
  Vector out = v;
  for (size_t k = 0; k < basis_.size(); ++k) {
    const double coeff = basis_[k].dot(out) - offsets_[k];
    out -= coeff * basis_[k];
  }
  return out;
}

Matrix AffineConstraintSet::project(const Matrix& x) const {
  return smat(project(svec(x)), n_);
}

Matrix AffineConstraintSet::determined_point() const {
  if (!fully_determined())
    throw std::logic_error("AffineConstraintSet: set is not fully determined");
  return project(Matrix(Matrix::Zero(n_, n_)));
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

FeasibilityResult sdp_feasibility(const AffineConstraintSet& constraints,
                                  const SolveOptions& options) {
  if (!constraints.finalized())
    throw std::logic_error("sdp_feasibility: constraints not finalized");
  const int n = constraints.dim();
  FeasibilityResult result;
  if (constraints.structurally_infeasible()) {
    result.status = SolveStatus::infeasible;
    result.structural = true;
    result.distance = constraints.inconsistency();
    result.iterate = Matrix::Zero(n, n);
    return result;
  }

  Matrix x = constraints.project(Matrix(Matrix::Zero(n, n)));
  Matrix correction = Matrix::Zero(n, n);
  std::vector<double> window;

  for (long it = 1; it <= options.max_iterations; ++it) {
    const Matrix y = project_psd(x + correction);
    correction = x + correction - y;
    const Matrix x_next = constraints.project(y);
    const double distance = (x_next - y).norm();
    x = x_next;
    result.iterations = it;
    if (options.keep_log) result.log.push_back(distance);
    result.distance = distance;

    if (distance < options.eps_feasible) {
      result.status = SolveStatus::feasible;
      result.iterate = x;
      return result;
    }

    window.push_back(distance);
    if (static_cast<int>(window.size()) > options.plateau_window)
      window.erase(window.begin());
    if (static_cast<int>(window.size()) == options.plateau_window) {
      const double oldest = window.front();
      const double change = std::abs(oldest - distance);
      if (change <= options.plateau_rel_change * std::max(oldest, 1e-300)) {
        result.status = (distance > options.eps_infeasible)
                            ? SolveStatus::infeasible
                            : SolveStatus::inconclusive;
        result.iterate = x;
        return result;
      }
    }
  }

  result.status = SolveStatus::inconclusive;
  result.iterate = x;
  return result;
}

LpResult lp_phase1(const Matrix& a, const Vector& b, double tol) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != m) throw std::invalid_argument("lp_phase1: shape mismatch");
  LpResult result;
  if (m == 0) {
    result.feasible = true;
    result.x = Vector::Zero(n);
    return result;
  }

  // Variables: x (n), then one artificial per row carrying the violation.
  // Rows are sign-flipped so every right-hand side is nonnegative and the
  // artificial basis is feasible with value |b_i|.
  const int total = n + m;
  Matrix t(m, total + 1);
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    const double sign = (b(i) >= 0.0) ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) t(i, j) = sign * a(i, j);
    for (int j = 0; j < m; ++j) t(i, n + j) = (i == j) ? 1.0 : 0.0;
    t(i, total) = sign * b(i);
    basis[i] = n + i;
  }

  // Reduced-cost row for minimizing the sum of artificials.
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(total + 1);
  for (int j = 0; j < total; ++j) {
    double z = 0.0;
    for (int i = 0; i < m; ++i) z += t(i, j);  // artificial costs are all 1
    cost(j) = (j >= n ? 1.0 : 0.0) - z;
  }
  double objective = 0.0;
  for (int i = 0; i < m; ++i) objective += t(i, total);

  const double pivot_tol = 1e-11;
  const long max_pivots = 200000;
  while (result.pivots < max_pivots) {
    int entering = -1;
    for (int j = 0; j < total; ++j) {
      if (cost(j) < -pivot_tol) {  // Bland: first (lowest-index) improving column
        entering = j;
        break;
      }
    }
    if (entering < 0) break;

    int leaving = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t(i, entering) > pivot_tol) {
        const double ratio = t(i, total) / t(i, entering);
        if (leaving < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leaving])) {
          leaving = i;
          best_ratio = ratio;
        }
      }
    }
    if (leaving < 0)
      throw std::runtime_error("lp_phase1: unbounded phase-1 objective");

    const double pivot = t(leaving, entering);
    t.row(leaving) /= pivot;
    for (int i = 0; i < m; ++i) {
      if (i == leaving) continue;
      const double factor = t(i, entering);
      if (factor != 0.0) t.row(i) -= factor * t.row(leaving);
    }
    const double cost_factor = cost(entering);
    cost -= cost_factor * t.row(leaving);
    objective -= cost_factor * t(leaving, total);
    basis[leaving] = entering;
    ++result.pivots;
  }

  double value = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) value += t(i, total);
  result.margin = std::max(0.0, value);
  result.feasible = result.margin <= tol * std::max(1.0, b.cwiseAbs().sum());
  result.x = Vector::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) result.x(basis[i]) = t(i, total);
  if (result.feasible)
    result.x = result.x.cwiseMax(0.0);
  return result;
}

}  // namespace ctx::kernel
