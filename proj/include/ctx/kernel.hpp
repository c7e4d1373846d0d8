#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

// Dense symmetric linear algebra and feasibility solvers used across the
// toolkit: a cyclic Jacobi eigensolver, projections onto the PSD cone and
// onto affine constraint sets, Dykstra-corrected alternating projections
// for SDP feasibility, and a phase-1 simplex for LP feasibility.
namespace ctx::kernel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct EighResult {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // column k pairs with eigenvalues[k]
};

// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
// Throws std::invalid_argument if the input is not square or deviates from
// symmetry by more than 1e-12 relative to its magnitude, and
// std::runtime_error if the residual ||A V - V diag(w)||_F exceeds
// 1e-10 * ||A||_F after the sweep budget.
EighResult eigh(const Matrix& a);

// Nearest (Frobenius) PSD matrix: eigenvalues clipped at zero.
Matrix project_psd(const Matrix& a);

// Isometric vectorization of symmetric matrices: upper triangle, packed
// column-major, off-diagonal entries scaled by sqrt(2), so that
// dot(svec(A), svec(B)) equals the Frobenius inner product <A, B>.
int svec_dim(int n);
int svec_index(int i, int j, int n);
Vector svec(const Matrix& a);
Matrix smat(const Vector& v, int n);

// Affine set {X = X^T : <A_k, X> = b_k}.  Rows are orthonormalized with
// modified Gram-Schmidt (two passes, rank tolerance 1e-12); near-zero rows
// with an incompatible right-hand side mark the set structurally infeasible.
class AffineConstraintSet {
 public:
  explicit AffineConstraintSet(int n);

  // <A, X> = b for symmetric A.
  void add(const Matrix& a, double b);
  // X(i, j) = value (and X(j, i) by symmetry).
  void add_entry(int i, int j, double value);
  // sum over i in rows of X(i, col) = value.
  void add_row_sum(const std::vector<int>& rows, int col, double value);

  // Orthonormalizes all rows added so far.  Must be called before project();
  // adding more constraints afterwards requires another finalize().
  void finalize();

  bool finalized() const { return finalized_; }
  int dim() const { return n_; }
  int rank() const { return static_cast<int>(basis_.size()); }
  // True when the affine set is empty because some constraints contradict
  // each other.
  bool structurally_infeasible() const { return inconsistent_; }
  // Largest right-hand-side residual seen on a dependent row.
  double inconsistency() const { return inconsistency_; }
  // True when the (consistent) constraints pin every entry of X.
  bool fully_determined() const;

  Vector project(const Vector& v) const;
  Matrix project(const Matrix& x) const;
  // The unique member of a fully determined set.
  Matrix determined_point() const;

 private:
  int n_;
  bool finalized_ = false;
  bool inconsistent_ = false;
  double inconsistency_ = 0.0;
  std::vector<Vector> raw_rows_;
  std::vector<double> raw_rhs_;
  std::vector<Vector> basis_;    // orthonormal
  std::vector<double> offsets_;  // rhs in the orthonormal frame
};

enum class SolveStatus { feasible, infeasible, inconclusive };

std::string to_string(SolveStatus status);

struct SolveOptions {
  long max_iterations = 50000;
  double eps_feasible = 1e-8;    // inter-set distance below which we accept
  double eps_infeasible = 1e-6;  // plateaued distance above which we reject
  int plateau_window = 100;
  double plateau_rel_change = 1e-10;
  bool keep_log = true;
};

struct FeasibilityResult {
  SolveStatus status = SolveStatus::inconclusive;
  Matrix iterate;       // affine-projected PSD iterate at termination
  double distance = 0;  // final inter-set Frobenius distance
  long iterations = 0;
  bool structural = false;  // infeasibility detected from the constraints alone
  std::vector<double> log;  // inter-set distance per iteration
};

// Feasibility of {X >= 0} intersected with an affine set, by alternating
// projections with Dykstra's correction on the cone side.  Feasible when the
// inter-set distance falls below eps_feasible; infeasible when the distance
// plateaus above eps_infeasible; inconclusive otherwise (never claims
// infeasibility on budget exhaustion alone).
FeasibilityResult sdp_feasibility(const AffineConstraintSet& constraints,
                                  const SolveOptions& options = {});

struct LpResult {
  bool feasible = false;
  Vector x;           // nonnegative solution when feasible
  double margin = 0;  // optimal phase-1 objective (total residual mass);
                      // zero exactly when the system is feasible
  long pivots = 0;
};

// Phase-1 simplex with Bland's rule for {x >= 0 : A x = b}.  Each equality
// is relaxed to a band of +-tol; margin reports the optimal phase-1
// objective (total violation), which is positive iff the system is
// infeasible.
LpResult lp_phase1(const Matrix& a, const Vector& b, double tol = 1e-9);

}  // namespace ctx::kernel
