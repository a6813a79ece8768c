#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "calib/balance.hpp"
#include "calib/errors.hpp"
#include "calib/rng.hpp"

namespace calib {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// sum_b loss(x_b, q_b) + mu ||x_1 - x_2||^2 over one or two simplex blocks.
// In merged mode a single block stands for p1 = p2.
class PairObjective {
 public:
  PairObjective(const MixPairProblem& prob, bool merged)
      : loss_(prob.loss), k_(prob.k), merged_(merged), q1_(prob.q1().values()), q2_(prob.q2().values()) {}

  void set_mu(double mu) { mu_ = mu; }
  double mu() const { return mu_; }
  std::size_t k() const { return k_; }
  std::size_t blocks() const { return merged_ ? 1 : 2; }
  std::size_t size() const { return k_ * blocks(); }

  double value(const VectorXd& x) const {
    if (merged_) return loss_value(loss_, block(x, 0), span(q1_)) + loss_value(loss_, block(x, 0), span(q2_));
    const double sep = (x.head(kk()) - x.tail(kk())).squaredNorm();
    return loss_value(loss_, block(x, 0), span(q1_)) + loss_value(loss_, block(x, 1), span(q2_)) + mu_ * sep;
  }

  void gradient(const VectorXd& x, VectorXd& g) const {
    g.resize(x.size());
    std::vector<double> tmp(k_);
    if (merged_) {
      loss_gradient(loss_, block(x, 0), span(q1_), tmp);
      for (std::size_t c = 0; c < k_; ++c) g[ix(c)] = tmp[c];
      loss_gradient(loss_, block(x, 0), span(q2_), tmp);
      for (std::size_t c = 0; c < k_; ++c) g[ix(c)] += tmp[c];
      return;
    }
    loss_gradient(loss_, block(x, 0), span(q1_), tmp);
    for (std::size_t c = 0; c < k_; ++c) g[ix(c)] = tmp[c];
    loss_gradient(loss_, block(x, 1), span(q2_), tmp);
    for (std::size_t c = 0; c < k_; ++c) g[ix(k_ + c)] = tmp[c];
    const VectorXd d = x.head(kk()) - x.tail(kk());
    g.head(kk()) += 2.0 * mu_ * d;
    g.tail(kk()) -= 2.0 * mu_ * d;
  }

  MatrixXd hessian(const VectorXd& x) const {
    const auto n = static_cast<Index>(size());
    MatrixXd h = MatrixXd::Zero(n, n);
    std::vector<double> tmp(k_);
    if (merged_) {
      loss_hessian_diag(loss_, block(x, 0), span(q1_), tmp);
      for (std::size_t c = 0; c < k_; ++c) h(ix(c), ix(c)) = tmp[c];
      loss_hessian_diag(loss_, block(x, 0), span(q2_), tmp);
      for (std::size_t c = 0; c < k_; ++c) h(ix(c), ix(c)) += tmp[c];
      return h;
    }
    loss_hessian_diag(loss_, block(x, 0), span(q1_), tmp);
    for (std::size_t c = 0; c < k_; ++c) h(ix(c), ix(c)) = tmp[c] + 2.0 * mu_;
    loss_hessian_diag(loss_, block(x, 1), span(q2_), tmp);
    for (std::size_t c = 0; c < k_; ++c) h(ix(k_ + c), ix(k_ + c)) = tmp[c] + 2.0 * mu_;
    for (std::size_t c = 0; c < k_; ++c) {
      h(ix(c), ix(k_ + c)) = -2.0 * mu_;
      h(ix(k_ + c), ix(c)) = -2.0 * mu_;
    }
    return h;
  }

  std::span<const double> block(const VectorXd& x, std::size_t b) const { return {x.data() + b * k_, k_}; }

 private:
  static Index ix(std::size_t i) { return static_cast<Index>(i); }
  Index kk() const { return static_cast<Index>(k_); }
  static std::span<const double> span(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

  LossKind loss_;
  std::size_t k_;
  bool merged_;
  VectorXd q1_, q2_;
  double mu_ = 0.0;
};

struct InnerResult {
  VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

void project_blocks(VectorXd& x, std::size_t k, std::size_t blocks) {
  for (std::size_t b = 0; b < blocks; ++b) project_to_simplex({x.data() + b * k, k});
}

// max |P(x - g) - x|, zero exactly at KKT points.
double pg_residual(const VectorXd& x, const VectorXd& g, std::size_t k, std::size_t blocks) {
  VectorXd y = x - g;
  project_blocks(y, k, blocks);
  return (y - x).lpNorm<Eigen::Infinity>();
}

class InnerSolver {
 public:
  InnerSolver(const PairObjective& obj, const NumericOptions& opts) : obj_(obj), opts_(opts) {}

  InnerResult solve(VectorXd x) {
    const std::size_t k = obj_.k(), nb = obj_.blocks();
    project_blocks(x, k, nb);
    InnerResult res;
    double f = obj_.value(x);
    VectorXd g;
    std::size_t stalls = 0;
    for (std::size_t it = 0; it < opts_.max_iterations; ++it) {
      obj_.gradient(x, g);
      const double r = pg_residual(x, g, k, nb);
      const double floor = 1e-15 * (1.0 + g.lpNorm<Eigen::Infinity>());
      if (r <= std::max(opts_.tolerance, floor)) {
        res.converged = true;
        res.iterations = it;
        break;
      }
      const double f_old = f;
      if (!newton_step(x, g, f)) pg_step(x, g, f);
      // Progress below rounding with a tiny residual: we are at the floor.
      if (f_old - f <= 1e-16 * (1.0 + std::abs(f))) {
        if (++stalls >= 8 && r < 1e-9) {
          res.converged = true;
          res.iterations = it + 1;
          break;
        }
      } else {
        stalls = 0;
      }
      res.iterations = it + 1;
    }
    res.x = std::move(x);
    res.value = f;
    return res;
  }

 private:
  void pg_step(VectorXd& x, const VectorXd& g, double& f) {
    const std::size_t k = obj_.k(), nb = obj_.blocks();
    double t = std::min(step_ * 2.0, 1e6);
    for (int bt = 0; bt < 200; ++bt) {
      VectorXd y = x - t * g;
      project_blocks(y, k, nb);
      const VectorXd d = y - x;
      const double fy = obj_.value(y);
      if (fy <= f + g.dot(d) + d.squaredNorm() / (2.0 * t)) {
        x = std::move(y);
        f = fy;
        step_ = t;
        return;
      }
      t *= 0.5;
    }
    step_ = t;
  }

  // Newton step on the free coordinates with the block sums held fixed;
  // a coordinate that reaches zero is clamped there.
  bool newton_step(VectorXd& x, const VectorXd& g, double& f) {
    const std::size_t k = obj_.k(), nb = obj_.blocks();
    std::vector<std::size_t> free;
    std::vector<std::size_t> owner;
    for (std::size_t b = 0; b < nb; ++b) {
      double mean = 0.0;
      std::size_t nfree = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (x[idx(b * k + c)] > 0.0) {
          mean += g[idx(b * k + c)];
          ++nfree;
        }
      }
      if (nfree == 0) return false;
      mean /= static_cast<double>(nfree);
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t i = b * k + c;
        if (x[idx(i)] > 0.0 || g[idx(i)] < mean - 1e-12 * (1.0 + std::abs(mean))) {
          free.push_back(i);
          owner.push_back(b);
        }
      }
    }
    const auto nf = static_cast<Index>(free.size());
    const auto nk = nf + static_cast<Index>(nb);
    const MatrixXd h = obj_.hessian(x);
    MatrixXd kkt = MatrixXd::Zero(nk, nk);
    VectorXd rhs = VectorXd::Zero(nk);
    double hmax = 1.0;
    for (Index a = 0; a < nf; ++a) hmax = std::max(hmax, std::abs(h(idx(free[a]), idx(free[a]))));
    for (Index a = 0; a < nf; ++a) {
      for (Index b = 0; b < nf; ++b) kkt(a, b) = h(idx(free[a]), idx(free[b]));
      kkt(a, a) += 1e-12 * hmax;
      kkt(a, nf + static_cast<Index>(owner[a])) = 1.0;
      kkt(nf + static_cast<Index>(owner[a]), a) = 1.0;
      rhs[a] = -g[idx(free[a])];
    }
    const VectorXd sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite()) return false;
    VectorXd d = VectorXd::Zero(x.size());
    for (Index a = 0; a < nf; ++a) d[idx(free[a])] = sol[a];
    const double slope = g.dot(d);
    if (!(slope < 0.0)) return false;

    double amax = 1.0;
    Index blocking = -1;
    for (Index a = 0; a < nf; ++a) {
      const Index i = idx(free[a]);
      if (d[i] < 0.0) {
        const double lim = x[i] / -d[i];
        if (lim < amax) {
          amax = lim;
          blocking = i;
        }
      }
    }
    if (!(amax > 0.0)) return false;
    double alpha = amax;
    for (int bt = 0; bt < 60; ++bt) {
      VectorXd y = x + alpha * d;
      if (alpha == amax && blocking >= 0) y[blocking] = 0.0;
      y = y.cwiseMax(0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        auto seg = y.segment(idx(b * k), idx(k));
        seg /= seg.sum();
      }
      const double fy = obj_.value(y);
      if (fy <= f + 1e-4 * alpha * slope) {
        x = std::move(y);
        f = fy;
        return true;
      }
      alpha *= 0.5;
    }
    return false;
  }

  static Index idx(std::size_t i) { return static_cast<Index>(i); }

  const PairObjective& obj_;
  const NumericOptions& opts_;
  double step_ = 1e-2;
};

VectorXd stack(const VectorXd& a, const VectorXd& b) {
  VectorXd x(a.size() + b.size());
  x << a, b;
  return x;
}

VectorXd dirichlet1(std::size_t k, Rng& rng) {
  VectorXd v(static_cast<Index>(k));
  for (Index i = 0; i < v.size(); ++i) {
    double u = uniform(rng);
    while (u <= 0.0) u = uniform(rng);
    v[i] = -std::log(u);
  }
  return v / v.sum();
}

std::vector<std::pair<VectorXd, VectorXd>> make_starts(const MixPairProblem& prob, const NumericOptions& opts) {
  const VectorXd q1 = prob.q1().values(), q2 = prob.q2().values();
  const VectorXd u = ProbVector::uniform(prob.k).values();
  const VectorXd m = 0.5 * (q1 + q2);
  std::vector<std::pair<VectorXd, VectorXd>> starts = {
      {q1, q2}, {q2, q1}, {m, m}, {u, u}, {0.5 * (q1 + u), 0.5 * (q2 + u)}, {m, u},
  };
  Rng rng = make_stream(opts.seed, "pair-solver-start");
  for (std::size_t r = 0; r < opts.random_starts; ++r) {
    VectorXd a = dirichlet1(prob.k, rng);
    VectorXd b = dirichlet1(prob.k, rng);
    starts.emplace_back(std::move(a), std::move(b));
  }
  return starts;
}

double separation(const VectorXd& x, std::size_t k) {
  const auto kk = static_cast<Index>(k);
  return (x.head(kk) - x.tail(kk)).squaredNorm();
}

// Pull the pair toward its midpoint until the bound holds; convex
// combinations of p1 and p2 stay on the simplex.
void repair(VectorXd& x, std::size_t k, double delta) {
  const double sep = separation(x, k);
  if (sep <= delta) return;
  const auto kk = static_cast<Index>(k);
  const VectorXd mid = 0.5 * (x.head(kk) + x.tail(kk));
  const double t = delta > 0.0 ? std::sqrt(delta / sep) * (1.0 - 1e-15) : 0.0;
  const VectorXd h1 = mid + t * (x.head(kk) - mid);
  const VectorXd h2 = mid + t * (x.tail(kk) - mid);
  x << h1, h2;
}

struct MultiStart {
  VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  std::size_t restarts = 0;
  std::size_t agreeing = 0;
  std::size_t iterations = 0;
  bool any_converged = false;
};

// One solve per start; values are the true pair objective after repair.
MultiStart run_starts(const MixPairProblem& prob, const PairObjective& obj, const NumericOptions& opts,
                      const std::vector<VectorXd>& starts, bool merged) {
  MultiStart ms;
  std::vector<double> values;
  InnerSolver solver(obj, opts);
  for (const VectorXd& s : starts) {
    InnerResult r = solver.solve(s);
    ms.iterations += r.iterations;
    ++ms.restarts;
    if (!r.converged) {
      values.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    ms.any_converged = true;
    VectorXd x = merged ? stack(r.x, r.x) : r.x;
    repair(x, prob.k, prob.delta);
    const double v = prob.objective({x.data(), prob.k}, {x.data() + prob.k, prob.k});
    values.push_back(v);
    if (v < ms.best_value) {
      ms.best_value = v;
      ms.best = std::move(x);
    }
  }
  for (double v : values) {
    if (std::abs(v - ms.best_value) <= 1e-8) ++ms.agreeing;
  }
  return ms;
}

BalanceReport finish(const MixPairProblem& prob, const MultiStart& ms, bool active, double mu, std::size_t extra_iters) {
  if (!ms.any_converged) {
    std::ostringstream os;
    os << "no start converged; loss=" << prob.loss.name() << " alpha1=" << prob.alpha1 << " alpha2=" << prob.alpha2
       << " delta=" << prob.delta << " K=" << prob.k;
    throw SolverFailure("numeric pair solver did not converge", os.str());
  }
  const auto kk = static_cast<Index>(prob.k);
  BalanceReport r = make_report(prob, ms.best.head(kk), ms.best.tail(kk), SolverKind::projected_gradient, active);
  r.iterations = ms.iterations + extra_iters;
  r.restarts = ms.restarts;
  r.restarts_agreeing = ms.agreeing;
  r.multiplier = mu;
  r.converged = ms.agreeing == ms.restarts;
  return r;
}

}  // namespace

BalanceReport solve_pair_numeric(const MixPairProblem& prob, const NumericOptions& opts) {
  prob.validate();
  if (prob.k > 16) throw InvalidArgument("numeric pair solver supports K <= 16");
  const auto starts = make_starts(prob, opts);
  const std::size_t k = prob.k;

  if (prob.delta <= 0.0) {
    PairObjective merged(prob, true);
    std::vector<VectorXd> xs;
    for (const auto& [a, b] : starts) xs.push_back(0.5 * (a + b));
    const MultiStart ms = run_starts(prob, merged, opts, xs, true);
    return finish(prob, ms, true, std::numeric_limits<double>::infinity(), 0);
  }

  PairObjective obj(prob, false);
  std::vector<VectorXd> xs;
  for (const auto& [a, b] : starts) xs.push_back(stack(a, b));

  obj.set_mu(0.0);
  const MultiStart free_ms = run_starts(prob, obj, opts, xs, false);
  // run_starts repairs, so compare the raw free optimum separately.
  InnerSolver solver(obj, opts);
  InnerResult free_opt = solver.solve(free_ms.any_converged ? free_ms.best : xs.front());
  if (free_opt.converged && separation(free_opt.x, k) <= prob.delta) {
    MultiStart ms = free_ms;
    const double v = prob.objective({free_opt.x.data(), k}, {free_opt.x.data() + k, k});
    if (v <= ms.best_value) {
      ms.best = free_opt.x;
      ms.best_value = v;
    }
    return finish(prob, ms, false, 0.0, free_opt.iterations);
  }

  // sep(mu) - delta decreases in mu; bracket, then Illinois regula falsi on log mu.
  std::size_t iters = free_opt.iterations;
  VectorXd warm = free_opt.x;
  auto excess = [&](double mu, VectorXd& x) {
    obj.set_mu(mu);
    InnerResult r = solver.solve(x);
    iters += r.iterations;
    x = r.x;
    return separation(x, k) - prob.delta;
  };
  double lo = 0.0, hi = 1.0;
  VectorXd x_hi = warm;
  double f_hi = excess(hi, x_hi);
  double f_lo = separation(warm, k) - prob.delta;
  while (f_hi > 0.0) {
    lo = hi;
    f_lo = f_hi;
    warm = x_hi;
    hi *= 4.0;
    if (hi > 1e18) {
      throw SolverFailure("multiplier search diverged", "delta=" + std::to_string(prob.delta));
    }
    f_hi = excess(hi, x_hi);
  }
  if (lo == 0.0) {
    // Tighten the lower end so the log-space update is defined.
    lo = hi / 4.0;
    VectorXd x_lo = warm;
    f_lo = excess(lo, x_lo);
    while (f_lo <= 0.0 && lo > 1e-12) {
      hi = lo;
      f_hi = f_lo;
      x_hi = x_lo;
      lo /= 4.0;
      f_lo = excess(lo, x_lo);
    }
  }
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(f_hi) <= 1e-14 * prob.delta || hi - lo <= 1e-15 * hi) break;
    const double llo = std::log(lo), lhi = std::log(hi);
    double lm = lhi - f_hi * (lhi - llo) / (f_hi - f_lo);
    if (!(lm > llo && lm < lhi)) lm = 0.5 * (llo + lhi);
    const double mid = std::exp(lm);
    VectorXd x_mid = x_hi;
    const double f_mid = excess(mid, x_mid);
    if (f_mid > 0.0) {
      lo = mid;
      f_lo = f_mid;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      f_hi = f_mid;
      x_hi = x_mid;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }

  obj.set_mu(hi);
  std::vector<VectorXd> final_starts = xs;
  final_starts.insert(final_starts.begin(), x_hi);
  const MultiStart ms = run_starts(prob, obj, opts, final_starts, false);
  return finish(prob, ms, true, hi, iters);
}

}  // namespace calib
