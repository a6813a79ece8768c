#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "calib/balance.hpp"
#include "calib/errors.hpp"
#include "calib/rng.hpp"

namespace calib {

double PropositionSummary::ce_negative_fraction() const {
  return ce_active == 0 ? 1.0 : static_cast<double>(ce_negative) / static_cast<double>(ce_active);
}

double PropositionSummary::fl_positive_fraction() const {
  return fl_active == 0 ? 1.0 : static_cast<double>(fl_positive) / static_cast<double>(fl_active);
}

bool PropositionSummary::passed() const {
  return ce_negative == ce_active && ce_inactive_at_label == ce_inactive && fl_positive == fl_active &&
         l2_max_abs_beta <= 1e-10 && l2_max_objective_gap <= 1e-6 && max_objective_gap_2class <= 1e-6 &&
         witness_agree == witness_checked && max_violation <= 1e-9 && max_off_support < 1e-6;
}

MixPairProblem sample_problem(std::uint64_t seed, std::size_t trial, LossKind loss) {
  Rng rng = make_stream(seed, "balance-trial", trial);
  MixPairProblem p;
  p.alpha2 = uniform(rng, 0.5, 0.95);
  // (alpha2 + 0.02, 0.99]: flip the half-open draw to exclude the lower end.
  p.alpha1 = 0.99 - uniform(rng) * (0.99 - (p.alpha2 + 0.02));
  p.delta = uniform(rng, 0.0, 2.0 * p.gap());
  p.k = 2 + uniform_index(rng, 7);
  p.class_s = uniform_index(rng, p.k);
  p.class_t = (p.class_s + 1 + uniform_index(rng, p.k - 1)) % p.k;
  p.loss = loss;
  return p;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

double max_abs_diff(const ProbVector& a, const ProbVector& b) {
  return (a.values() - b.values()).lpNorm<Eigen::Infinity>();
}

double off_support(const BalanceReport& r, const MixPairProblem& p) {
  double m = 0.0;
  for (std::size_t c = 0; c < p.k; ++c) {
    if (c == p.class_s || c == p.class_t) continue;
    m += r.p1_star[c] + r.p2_star[c];
  }
  return m;
}

NumericOptions trial_options(std::uint64_t seed, std::size_t trial) {
  NumericOptions o;
  o.seed = stream_seed(seed, "balance-numeric", trial);
  return o;
}

}  // namespace

PropositionSummary verify_propositions(std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("trials must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  PropositionSummary s;
  s.trials = trials;
  s.seed = seed;

  auto feasible = [&](const BalanceReport& r, const MixPairProblem& p) {
    s.max_violation = std::max(s.max_violation, r.separation() - p.delta);
  };

  for (std::size_t t = 0; t < trials; ++t) {
    const NumericOptions opts = trial_options(seed, t);

    const MixPairProblem ce = sample_problem(seed, t, LossKind::ce());
    const bool active = ce.delta < ce.gap();
    const double eps = std::sqrt(ce.delta / 2.0);
    {
      const BalanceReport a = solve_pair_2class(ce);
      const BalanceReport b = solve_pair_numeric(ce, opts);
      feasible(a, ce);
      feasible(b, ce);
      s.max_objective_gap_2class = std::max(s.max_objective_gap_2class, std::abs(a.objective_value - b.objective_value));
      s.max_off_support = std::max(s.max_off_support, off_support(b, ce));
      if (active) {
        ++s.ce_active;
        if (a.beta < -1e-10 && b.beta < -1e-10) ++s.ce_negative;
        ++s.witness_checked;
        if (sign(a.beta) == sign(t_ce(ce.alpha1, ce.alpha2, eps))) ++s.witness_agree;
      } else {
        ++s.ce_inactive;
        const ProbVector q1 = ce.q1(), q2 = ce.q2();
        bool ok = true;
        for (const BalanceReport* r : {&a, &b}) {
          ok = ok && max_abs_diff(r->p1_star, q1) <= 1e-6 && max_abs_diff(r->p2_star, q2) <= 1e-6 &&
               std::abs(r->beta) <= 1e-8;
        }
        if (ok) ++s.ce_inactive_at_label;
      }
    }

    MixPairProblem fl = ce;
    fl.loss = LossKind::focal(1.0);
    {
      const BalanceReport a = solve_pair_2class(fl);
      const BalanceReport b = solve_pair_numeric(fl, opts);
      feasible(a, fl);
      feasible(b, fl);
      s.max_objective_gap_2class = std::max(s.max_objective_gap_2class, std::abs(a.objective_value - b.objective_value));
      s.max_off_support = std::max(s.max_off_support, off_support(b, fl));
      if (active) {
        ++s.fl_active;
        if (a.beta > 1e-10 && b.beta > 1e-10) ++s.fl_positive;
      }
      // The focal optimum can be wider than the labels, so the bound may bind
      // with delta >= D; the witness is only defined below D.
      if (a.constraint_active && active) {
        ++s.witness_checked;
        if (sign(a.beta) == sign(t_fl(fl.alpha1, fl.alpha2, eps))) ++s.witness_agree;
      }
    }

    MixPairProblem l2 = ce;
    l2.loss = LossKind::l2();
    {
      const BalanceReport a = solve_l2_closed(l2);
      const BalanceReport b = solve_pair_numeric(l2, opts);
      feasible(a, l2);
      feasible(b, l2);
      s.l2_max_abs_beta = std::max(s.l2_max_abs_beta, std::abs(a.beta));
      s.l2_max_objective_gap = std::max(s.l2_max_objective_gap, std::abs(a.objective_value - b.objective_value));
    }
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

WitnessGrid check_witness_grid(std::size_t n_alpha2, std::size_t n_alpha1, std::size_t n_eps) {
  if (n_alpha2 == 0 || n_alpha1 == 0 || n_eps == 0) throw InvalidArgument("grid sizes must be positive");
  const auto start = std::chrono::steady_clock::now();
  WitnessGrid g;
  g.max_t_ce = -std::numeric_limits<double>::infinity();
  g.min_t_fl = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_alpha2; ++i) {
    const double a2 = 0.5 + 0.49 * static_cast<double>(i) / static_cast<double>(n_alpha2);
    for (std::size_t j = 0; j < n_alpha1; ++j) {
      const double a1 = a2 + (1.0 - a2) * static_cast<double>(j + 1) / static_cast<double>(n_alpha1 + 1);
      for (std::size_t k = 0; k < n_eps; ++k) {
        const double eps = (a1 - a2) * static_cast<double>(k + 1) / static_cast<double>(n_eps + 1);
        const double tc = t_ce(a1, a2, eps), tf = t_fl(a1, a2, eps);
        ++g.points;
        if (tc < 0.0) ++g.ce_negative;
        if (tf > 0.0) ++g.fl_positive;
        g.max_t_ce = std::max(g.max_t_ce, tc);
        g.min_t_fl = std::min(g.min_t_fl, tf);
      }
    }
  }
  g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return g;
}

}  // namespace calib
