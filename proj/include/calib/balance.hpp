#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calib/simplex.hpp"

namespace calib {

struct LossKind {
  enum class Kind { ce, focal, l2 };
  Kind kind = Kind::ce;
  double gamma = 0.0;  // focal only

  static LossKind ce() { return {Kind::ce, 0.0}; }
  static LossKind focal(double gamma);
  static LossKind l2() { return {Kind::l2, 0.0}; }

  std::string name() const;
  static LossKind parse(std::string_view name, double gamma = 1.0);
};

// Per-sample losses between prediction p and soft target q:
//   CE    -sum q_k ln p_k
//   Focal -sum q_k (1 - p_k)^gamma ln p_k
//   L2    (1/K) ||p - q||^2
// Logarithms use the clamped safe_log.
double loss_value(const LossKind& loss, std::span<const double> p, std::span<const double> q);
inline double loss_value(const LossKind& loss, const ProbVector& p, const ProbVector& q) {
  return loss_value(loss, p.span(), q.span());
}

// d loss / d p_k and the (diagonal) second derivative, with p clamped at the
// log floor so the solvers see finite values.
void loss_gradient(const LossKind& loss, std::span<const double> p, std::span<const double> q,
                   std::span<double> out);
void loss_hessian_diag(const LossKind& loss, std::span<const double> p, std::span<const double> q,
                       std::span<double> out);

// ||p1 - q1||^2 - ||p2 - q2||^2, plain squared norms.
double beta_score(std::span<const double> p1, std::span<const double> p2, std::span<const double> q1,
                  std::span<const double> q2);
inline double beta_score(const ProbVector& p1, const ProbVector& p2, const ProbVector& q1,
                         const ProbVector& q2) {
  return beta_score(p1.span(), p2.span(), q1.span(), q2.span());
}

// Two soft labels on classes (s, t), the sharper with alpha1 and the softer
// with alpha2, and a bound delta on the squared distance of the predictions.
struct MixPairProblem {
  std::size_t k = 2;
  std::size_t class_s = 0;
  std::size_t class_t = 1;
  double alpha1 = 0.9;
  double alpha2 = 0.6;
  double delta = 0.0;
  LossKind loss = LossKind::ce();

  void validate() const;
  ProbVector q1() const;
  ProbVector q2() const;
  // ||q1 - q2||^2 = 2 (alpha1 - alpha2)^2
  double gap() const noexcept { return 2.0 * (alpha1 - alpha2) * (alpha1 - alpha2); }
  double objective(std::span<const double> p1, std::span<const double> p2) const;
};

enum class SolverKind { closed_form, root_find, grid_refine, projected_gradient };
std::string_view to_string(SolverKind s) noexcept;

struct BalanceReport {
  ProbVector p1_star = ProbVector::uniform(2);
  ProbVector p2_star = ProbVector::uniform(2);
  double beta = 0.0;
  bool constraint_active = false;
  SolverKind solver = SolverKind::closed_form;
  double objective_value = 0.0;

  // Diagnostics. For the numeric solver `restarts` counts the starts run at
  // the final multiplier and `restarts_agreeing` those within 1e-8 of the best.
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  std::size_t restarts_agreeing = 0;
  double multiplier = 0.0;
  bool converged = true;

  double separation() const;  // ||p1* - p2*||^2
};

// Builds a report and fills beta / objective from the stored points.
BalanceReport make_report(const MixPairProblem& prob, Eigen::VectorXd p1, Eigen::VectorXd p2,
                          SolverKind solver, bool active);

// L2 only: interpolations p1 = l q1 + (1-l) q2, p2 = l q2 + (1-l) q1 with
// l = (1 + sqrt(delta / D)) / 2 when delta < D.
BalanceReport solve_l2_closed(const MixPairProblem& prob);

// CE and Focal(gamma = 1): one-dimensional reduction onto classes {s, t} with
// the bisection roots of h (CE) or g (Focal). Other losses are forwarded to
// solve_pair_numeric.
BalanceReport solve_pair_2class(const MixPairProblem& prob);

struct NumericOptions {
  std::size_t max_iterations = 10000;  // per inner solve
  std::size_t random_starts = 3;       // in addition to the 6 structured starts
  std::uint64_t seed = 0;
  double tolerance = 1e-13;            // projected-gradient residual
};

// General solver over the product of simplices: multiplier search on
// ||p1 - p2||^2 <= delta with a projected-gradient / projected-Newton inner
// loop and multi-start. Throws SolverFailure when no start converges.
BalanceReport solve_pair_numeric(const MixPairProblem& prob, const NumericOptions& options = {});

// Euclidean projection onto the probability simplex (sort-based).
void project_to_simplex(std::span<double> v);

// Stationarity functions of the reduced problem, x = p2^s, p1^s = x + eps.
double h_ce(double x, double alpha1, double alpha2, double eps);
double g_fl(double x, double alpha1, double alpha2, double eps);

// Sign witnesses: h and g evaluated at x = (alpha1 + alpha2 - eps) / 2.
// Require 0.5 <= alpha2 < alpha1 < 1 and 0 <= eps < alpha1 - alpha2.
double t_ce(double alpha1, double alpha2, double eps);
double t_fl(double alpha1, double alpha2, double eps);
// mu(w, x) from the factorization t_fl = mu(alpha2, x) + mu(alpha1, -x).
double mu_fl(double w, double x);

// Per-sample Focal(gamma = 1) optimum on two classes with target alpha.
double focal1_unconstrained(double alpha);

// Reduced-problem objective over squared separation levels A in [0, delta]
// (points evenly spaced, endpoints included). Used to confirm the optimum
// sits on the constraint boundary.
struct ConstraintSweep {
  std::vector<double> levels;
  std::vector<double> objectives;
  std::size_t argmin = 0;
};
ConstraintSweep sweep_constraint_level(const MixPairProblem& prob, std::size_t points = 32);

struct PropositionSummary {
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  std::size_t ce_active = 0;            // instances with delta < D
  std::size_t ce_negative = 0;          // ... beta < -1e-10 from both solvers
  std::size_t ce_inactive = 0;
  std::size_t ce_inactive_at_label = 0; // p* = q within 1e-6, |beta| <= 1e-8, both solvers
  std::size_t fl_active = 0;
  std::size_t fl_positive = 0;          // beta > 1e-10 from both solvers
  double l2_max_abs_beta = 0.0;         // closed form
  double l2_max_objective_gap = 0.0;    // |numeric - closed|
  double max_objective_gap_2class = 0.0;  // |numeric - root-find| for CE/Focal
  std::size_t witness_agree = 0;        // sign(beta) == sign(T) on active CE/Focal
  std::size_t witness_checked = 0;
  double max_violation = 0.0;           // max(||p1-p2||^2 - delta) over all reports
  double max_off_support = 0.0;         // numeric CE/Focal mass outside {s, t}
  double seconds = 0.0;

  double ce_negative_fraction() const;
  double fl_positive_fraction() const;
  bool passed() const;
};

// Random instances: alpha2 ~ U[0.5, 0.95], alpha1 ~ U(alpha2 + 0.02, 0.99],
// delta ~ U[0, 2D], K in {2..8}; each trial uses its own RNG stream.
PropositionSummary verify_propositions(std::size_t trials, std::uint64_t seed);

// T_CE and T_FL over an n1 x n2 x n3 grid strictly inside the valid region:
// alpha2 in [0.5, 0.99), alpha1 in (alpha2, 1), eps in (0, alpha1 - alpha2).
struct WitnessGrid {
  std::size_t points = 0;
  std::size_t ce_negative = 0;
  std::size_t fl_positive = 0;
  double max_t_ce = 0.0;
  double min_t_fl = 0.0;
  double seconds = 0.0;

  bool passed() const noexcept { return ce_negative == points && fl_positive == points; }
};
WitnessGrid check_witness_grid(std::size_t n_alpha2 = 20, std::size_t n_alpha1 = 20, std::size_t n_eps = 10);

// The instance a verification trial draws, exposed for tests and the CLI.
MixPairProblem sample_problem(std::uint64_t seed, std::size_t trial, LossKind loss);

}  // namespace calib
