#include "calib/balance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "calib/errors.hpp"

namespace calib {

LossKind LossKind::focal(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("focal gamma must be positive");
  return {Kind::focal, gamma};
}

std::string LossKind::name() const {
  switch (kind) {
    case Kind::ce:
      return "ce";
    case Kind::l2:
      return "l2";
    case Kind::focal: {
      std::ostringstream os;
      os << "focal(" << gamma << ")";
      return os.str();
    }
  }
  return "?";
}

LossKind LossKind::parse(std::string_view name, double gamma) {
  if (name == "ce") return ce();
  if (name == "l2") return l2();
  if (name == "focal" || name == "fl") return focal(gamma);
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

namespace {

void check_sizes(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw InvalidArgument("prediction and target sizes differ");
}

// Focal item terms with 1 - p floored away from zero so that
// (1 - p)^(gamma - 1) stays finite when gamma < 1.
struct FocalTerms {
  double value, d1, d2;
};

FocalTerms focal_terms(double p, double gamma) {
  const double pc = std::max(p, kLogFloor);
  const double om = std::max(1.0 - pc, 1e-300);
  const double lp = std::log(std::min(pc, 1.0));
  const double om_g = std::pow(om, gamma);
  const double om_g1 = std::pow(om, gamma - 1.0);
  const double value = -om_g * lp;
  const double d1 = gamma * om_g1 * lp - om_g / pc;
  const double second = gamma == 1.0 ? 0.0 : -gamma * (gamma - 1.0) * std::pow(om, gamma - 2.0) * lp;
  const double d2 = second + 2.0 * gamma * om_g1 / pc + om_g / (pc * pc);
  return {value, d1, d2};
}

}  // namespace

double loss_value(const LossKind& loss, std::span<const double> p, std::span<const double> q) {
  check_sizes(p, q);
  double total = 0.0;
  switch (loss.kind) {
    case LossKind::Kind::ce:
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (q[k] != 0.0) total -= q[k] * safe_log(p[k]);
      }
      return total;
    case LossKind::Kind::focal:
      for (std::size_t k = 0; k < p.size(); ++k) {
        if (q[k] != 0.0) total += q[k] * focal_terms(p[k], loss.gamma).value;
      }
      return total;
    case LossKind::Kind::l2:
      for (std::size_t k = 0; k < p.size(); ++k) total += (p[k] - q[k]) * (p[k] - q[k]);
      return total / static_cast<double>(p.size());
  }
  return total;
}

void loss_gradient(const LossKind& loss, std::span<const double> p, std::span<const double> q,
                   std::span<double> out) {
  check_sizes(p, q);
  for (std::size_t k = 0; k < p.size(); ++k) {
    switch (loss.kind) {
      case LossKind::Kind::ce:
        out[k] = q[k] == 0.0 ? 0.0 : -q[k] / std::max(p[k], kLogFloor);
        break;
      case LossKind::Kind::focal:
        out[k] = q[k] == 0.0 ? 0.0 : q[k] * focal_terms(p[k], loss.gamma).d1;
        break;
      case LossKind::Kind::l2:
        out[k] = 2.0 * (p[k] - q[k]) / static_cast<double>(p.size());
        break;
    }
  }
}

void loss_hessian_diag(const LossKind& loss, std::span<const double> p, std::span<const double> q,
                       std::span<double> out) {
  check_sizes(p, q);
  for (std::size_t k = 0; k < p.size(); ++k) {
    switch (loss.kind) {
      case LossKind::Kind::ce: {
        const double pc = std::max(p[k], kLogFloor);
        out[k] = q[k] / (pc * pc);
        break;
      }
      case LossKind::Kind::focal:
        out[k] = q[k] == 0.0 ? 0.0 : q[k] * focal_terms(p[k], loss.gamma).d2;
        break;
      case LossKind::Kind::l2:
        out[k] = 2.0 / static_cast<double>(p.size());
        break;
    }
  }
}

double beta_score(std::span<const double> p1, std::span<const double> p2, std::span<const double> q1,
                  std::span<const double> q2) {
  check_sizes(p1, q1);
  check_sizes(p2, q2);
  check_sizes(p1, p2);
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < p1.size(); ++k) {
    a += (p1[k] - q1[k]) * (p1[k] - q1[k]);
    b += (p2[k] - q2[k]) * (p2[k] - q2[k]);
  }
  return a - b;
}

void MixPairProblem::validate() const {
  if (k < 2) throw InvalidArgument("pair problem needs K >= 2");
  if (class_s == class_t || class_s >= k || class_t >= k) throw InvalidArgument("bad class pair");
  if (!(alpha2 >= 0.5 && alpha2 < alpha1 && alpha1 < 1.0)) {
    throw InvalidArgument("pair problem needs 0.5 <= alpha2 < alpha1 < 1");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be >= 0");
  if (loss.kind == LossKind::Kind::focal && !(loss.gamma > 0.0)) throw InvalidArgument("focal gamma must be positive");
}

ProbVector MixPairProblem::q1() const {
  return SoftLabel{class_s, class_t, alpha1, k}.expand();
}

ProbVector MixPairProblem::q2() const {
  return SoftLabel{class_s, class_t, alpha2, k}.expand();
}

double MixPairProblem::objective(std::span<const double> p1, std::span<const double> p2) const {
  const ProbVector a = q1(), b = q2();
  return loss_value(loss, p1, a.span()) + loss_value(loss, p2, b.span());
}

std::string_view to_string(SolverKind s) noexcept {
  switch (s) {
    case SolverKind::closed_form:
      return "closed_form";
    case SolverKind::root_find:
      return "root_find";
    case SolverKind::grid_refine:
      return "grid_refine";
    case SolverKind::projected_gradient:
      return "projected_gradient";
  }
  return "?";
}

double BalanceReport::separation() const { return (p1_star.values() - p2_star.values()).squaredNorm(); }

BalanceReport make_report(const MixPairProblem& prob, Eigen::VectorXd p1, Eigen::VectorXd p2,
                          SolverKind solver, bool active) {
  BalanceReport r;
  r.p1_star = ProbVector::normalized(std::move(p1));
  r.p2_star = ProbVector::normalized(std::move(p2));
  const ProbVector q1 = prob.q1(), q2 = prob.q2();
  r.beta = beta_score(r.p1_star, r.p2_star, q1, q2);
  r.objective_value = prob.objective(r.p1_star.span(), r.p2_star.span());
  r.solver = solver;
  r.constraint_active = active;
  return r;
}

BalanceReport solve_l2_closed(const MixPairProblem& prob) {
  prob.validate();
  if (prob.loss.kind != LossKind::Kind::l2) throw InvalidArgument("closed form applies to the L2 loss only");
  const Eigen::VectorXd q1 = prob.q1().values(), q2 = prob.q2().values();
  const double d = prob.gap();
  if (prob.delta >= d) return make_report(prob, q1, q2, SolverKind::closed_form, false);
  const double r = std::sqrt(prob.delta / d);
  const double l = 0.5 * (1.0 + r);
  return make_report(prob, l * q1 + (1.0 - l) * q2, l * q2 + (1.0 - l) * q1, SolverKind::closed_form, true);
}

double h_ce(double x, double a1, double a2, double eps) {
  return -a1 / (x + eps) + (1.0 - a1) / (1.0 - x - eps) - a2 / x + (1.0 - a2) / (1.0 - x);
}

double g_fl(double x, double a1, double a2, double eps) {
  const double y = x + eps;
  return (1.0 - a1) * (y / (1.0 - y) - std::log(1.0 - y)) - a1 * ((1.0 - y) / y - std::log(y)) +
         (1.0 - a2) * (x / (1.0 - x) - std::log(1.0 - x)) - a2 * ((1.0 - x) / x - std::log(x));
}

namespace {

void check_witness_region(double a1, double a2, double eps) {
  if (!(a2 >= 0.5 && a2 < a1 && a1 < 1.0)) throw InvalidArgument("need 0.5 <= alpha2 < alpha1 < 1");
  if (!(eps >= 0.0 && eps < a1 - a2)) throw InvalidArgument("need 0 <= eps < alpha1 - alpha2");
}

// Bisection for the unique root of an increasing function on (lo, hi),
// continued until the bracket stops shrinking (or drops below tol).
double bisect_increasing(const std::function<double(double)>& f, double lo, double hi, double tol,
                         const char* what) {
  const double flo = f(lo + (hi - lo) * 1e-12), fhi = f(hi - (hi - lo) * 1e-12);
  if (!(flo < 0.0 && fhi > 0.0)) {
    std::ostringstream os;
    os << what << ": no sign change on (" << lo << ", " << hi << "), f(lo+)=" << flo << " f(hi-)=" << fhi;
    throw SolverFailure("bracketing failure", os.str());
  }
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = f(mid);
    if (std::isnan(v)) throw SolverFailure("bisection produced NaN", what);
    if (v < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

constexpr double kBisectTol = 1e-15;

bool uses_focal1(const LossKind& l) { return l.kind == LossKind::Kind::focal && l.gamma == 1.0; }

// x = p2^s for a given separation eps = p1^s - p2^s.
double reduced_root(const MixPairProblem& prob, double eps) {
  const double a1 = prob.alpha1, a2 = prob.alpha2;
  if (prob.loss.kind == LossKind::Kind::ce) {
    return bisect_increasing([&](double x) { return h_ce(x, a1, a2, eps); }, 0.0, 1.0 - eps, kBisectTol, "h");
  }
  return bisect_increasing([&](double x) { return g_fl(x, a1, a2, eps); }, 0.0, 1.0 - eps, kBisectTol, "g");
}

Eigen::VectorXd two_class_point(const MixPairProblem& prob, double ps) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.k));
  p[static_cast<Eigen::Index>(prob.class_s)] = ps;
  p[static_cast<Eigen::Index>(prob.class_t)] = 1.0 - ps;
  return p;
}

}  // namespace

double t_ce(double a1, double a2, double eps) {
  check_witness_region(a1, a2, eps);
  const double d1 = 2.0 - a1 - a2 - eps;
  const double d2 = a1 + a2 + eps;
  const double d3 = 2.0 - a1 - a2 + eps;
  const double d4 = a1 + a2 - eps;
  return 2.0 * ((1.0 - a1) / d1 - a1 / d2 + (1.0 - a2) / d3 - a2 / d4);
}

double t_fl(double a1, double a2, double eps) {
  check_witness_region(a1, a2, eps);
  const double e = 0.5 * (a1 + a2 + eps);
  const double f = 0.5 * (a1 + a2 - eps);
  return (1.0 - a1) * (e / (1.0 - e) - std::log(1.0 - e)) - a1 * ((1.0 - e) / e - std::log(e)) +
         (1.0 - a2) * (f / (1.0 - f) - std::log(1.0 - f)) - a2 * ((1.0 - f) / f - std::log(f));
}

double mu_fl(double w, double x) {
  const double u = w + x;
  return (1.0 - w) * (u / (1.0 - u) - std::log(1.0 - u)) - w * ((1.0 - u) / u - std::log(u));
}

double focal1_unconstrained(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("focal target must lie in (0,1)");
  // Derivative of alpha f(p) + (1 - alpha) f(1 - p), f(p) = -(1 - p) ln p.
  auto d = [alpha](double p) {
    return -alpha * ((1.0 - p) / p - std::log(p)) + (1.0 - alpha) * (p / (1.0 - p) - std::log(1.0 - p));
  };
  return bisect_increasing(d, 0.0, 1.0, kBisectTol, "focal per-sample optimum");
}

BalanceReport solve_pair_2class(const MixPairProblem& prob) {
  prob.validate();
  if (prob.loss.kind == LossKind::Kind::l2) throw InvalidArgument("use solve_l2_closed for the L2 loss");
  if (prob.loss.kind == LossKind::Kind::focal && !uses_focal1(prob.loss)) return solve_pair_numeric(prob);

  const bool ce = prob.loss.kind == LossKind::Kind::ce;
  if (ce && prob.delta >= prob.gap()) {
    return make_report(prob, prob.q1().values(), prob.q2().values(), SolverKind::root_find, false);
  }
  const double u1 = ce ? prob.alpha1 : focal1_unconstrained(prob.alpha1);
  const double u2 = ce ? prob.alpha2 : focal1_unconstrained(prob.alpha2);
  // The per-sample optima are also jointly optimal when they are close enough.
  if (2.0 * (u1 - u2) * (u1 - u2) <= prob.delta) {
    return make_report(prob, two_class_point(prob, u1), two_class_point(prob, u2), SolverKind::root_find, false);
  }
  // Convex problem with an infeasible free optimum: the bound is active.
  const double eps = std::sqrt(prob.delta / 2.0);
  const double x = reduced_root(prob, eps);
  return make_report(prob, two_class_point(prob, x + eps), two_class_point(prob, x), SolverKind::root_find, true);
}

ConstraintSweep sweep_constraint_level(const MixPairProblem& prob, std::size_t points) {
  prob.validate();
  if (prob.loss.kind == LossKind::Kind::l2 || (prob.loss.kind == LossKind::Kind::focal && !uses_focal1(prob.loss))) {
    throw InvalidArgument("constraint sweep supports CE and Focal(1)");
  }
  if (points < 2) throw InvalidArgument("sweep needs at least 2 points");
  ConstraintSweep sw;
  for (std::size_t i = 0; i < points; ++i) {
    const double a = prob.delta * static_cast<double>(i) / static_cast<double>(points - 1);
    const double eps = std::sqrt(a / 2.0);
    const double x = reduced_root(prob, eps);
    const Eigen::VectorXd p1 = two_class_point(prob, x + eps), p2 = two_class_point(prob, x);
    sw.levels.push_back(a);
    sw.objectives.push_back(prob.objective({p1.data(), prob.k}, {p2.data(), prob.k}));
  }
  sw.argmin = static_cast<std::size_t>(
      std::min_element(sw.objectives.begin(), sw.objectives.end()) - sw.objectives.begin());
  return sw;
}

void project_to_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cumsum += u[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

}  // namespace calib
