#include "calib/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "calib/balance.hpp"
#include "calib/errors.hpp"
#include "calib/experiment.hpp"
#include "calib/io.hpp"
#include "calib/metrics.hpp"
#include "calib/mixsim.hpp"
#include "calib/reannotate.hpp"
#include "calib/temperature.hpp"
#include "calib/trainer.hpp"

namespace calib {

namespace {

using json = nlohmann::ordered_json;

// Reports carry 12 significant digits so they are stable across platforms.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v[i]));
  return a;
}

void emit(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

bool use_color(const std::ostream& err) {
  return &err == &std::cerr && std::getenv("NO_COLOR") == nullptr && ::isatty(2) == 1;
}

TemperatureGrid parse_grid(const std::string& s) {
  TemperatureGrid g;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.step) || c1 != ':' || c2 != ':' || !(in >> std::ws).eof()) {
    throw InvalidArgument("grid must be lo:hi:step, got '" + s + "'");
  }
  g.validate();
  return g;
}

std::vector<double> parse_list(const std::string& s, std::size_t expected, const std::string& what) {
  std::vector<double> v;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw InvalidArgument(what + ": cannot parse '" + part + "'");
    }
  }
  if (v.size() != expected) throw InvalidArgument(what + " needs " + std::to_string(expected) + " values");
  return v;
}

json metrics_json(const MetricsReport& m) {
  return json{{"accuracy", num(m.accuracy)}, {"ece", num(m.ece)}, {"aece", num(m.aece)}, {"oe", num(m.oe)},
              {"ue", num(m.ue)}, {"nll", num(m.nll)}, {"mean_entropy", num(m.mean_entropy)}};
}

// ---- metrics ---------------------------------------------------------------

struct MetricsArgs {
  std::string input;
  int bins = kDefaultBins;
  std::string labels_col = "label";
  std::string report = "summary";
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
  const io::PredictionFile f = io::load_predictions(a.input, a.labels_col);
  const PredictionSet ps = f.predictions();
  const MetricsReport m = evaluate(ps, a.bins);
  json r{{"record", "metrics"}, {"n", ps.size()}, {"classes", ps.classes()}, {"bins", a.bins},
         {"input_kind", f.logits ? "logits" : "probabilities"}};
  r.update(metrics_json(m));
  emit(out, r);
  if (a.report == "bins") {
    for (std::size_t b = 0; b < m.bins.size(); ++b) {
      const BinStats& s = m.bins[b];
      emit(out, json{{"record", "bin"}, {"index", b}, {"lower", num(s.lower)}, {"upper", num(s.upper)},
                     {"count", s.count}, {"accuracy", num(s.accuracy)}, {"mean_confidence", num(s.mean_confidence)}});
    }
  }
  return kExitOk;
}

// ---- temp-scale ------------------------------------------------------------

struct TempArgs {
  std::string input;
  std::string objective = "nll";
  std::string grid = "0.5:5:0.01";
  int bins = kDefaultBins;
  std::string labels_col = "label";
};

int cmd_temp_scale(const TempArgs& a, std::ostream& out) {
  const io::PredictionFile f = io::load_predictions(a.input, a.labels_col);
  const TemperatureGrid grid = parse_grid(a.grid);
  const Eigen::MatrixXd z = f.as_logits();
  const TemperatureFit fit = fit_temperature(z, f.labels, parse_objective(a.objective), grid, a.bins);
  const PredictionSet before(apply_temperature(z, 1.0), f.labels);
  const PredictionSet after(apply_temperature(z, fit.temperature), f.labels);
  emit(out, json{{"record", "temperature"},
                 {"objective", to_string(fit.objective)},
                 {"temperature", num(fit.temperature)},
                 {"value", num(fit.objective_value)},
                 {"value_at_one", num(fit.objective_at_one)},
                 {"grid", {num(grid.lo), num(grid.hi), num(grid.step)}},
                 {"ece_before", num(ece(before, a.bins))},
                 {"ece_after", num(ece(after, a.bins))},
                 {"nll_before", num(nll(before))},
                 {"nll_after", num(nll(after))}});
  return kExitOk;
}

// ---- reannotate ------------------------------------------------------------

struct ReannotateArgs {
  std::string embeddings;
  std::string pairs;
  double scale_s = 4.0;
  std::string prototype_mode = "mean";
  bool normalize = false;
};

int cmd_reannotate(const ReannotateArgs& a, std::ostream& out) {
  EmbeddingSet pool = io::load_embeddings(a.embeddings);
  std::vector<MixedSample> pairs = io::load_pairs(a.pairs);
  if (a.normalize) {
    normalize_rows(pool.vectors);
    for (MixedSample& m : pairs) m.embedding = normalized(m.embedding);
  }
  const PrototypeMode mode = parse_prototype_mode(a.prototype_mode);
  const PrototypeSet protos = class_prototypes(pool, mode);
  const auto items = reannotate_batch(pairs, protos, a.scale_s);
  std::size_t failed = 0;
  for (const ReannotationItem& it : items) {
    json r{{"record", "soft-label"}, {"index", it.index}, {"class_i", pairs[it.index].class_i},
           {"class_j", pairs[it.index].class_j}};
    if (it.ok()) {
      r["lambda_e"] = num(it.value->lambda_e);
      r["lambda"] = num(it.value->lambda);
    } else {
      ++failed;
      r["error"] = it.error;
    }
    emit(out, r);
  }
  emit(out, json{{"record", "reannotate"}, {"samples", items.size()}, {"failed", failed},
                 {"prototype_mode", to_string(mode)}, {"scale_s", num(a.scale_s)}, {"normalized", a.normalize}});
  return kExitOk;
}

// ---- balance ---------------------------------------------------------------

struct BalanceArgs {
  std::string loss = "ce";
  double gamma = 1.0;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::string instance;
  std::string solver = "auto";
};

BalanceReport solve_with(const MixPairProblem& p, const std::string& solver, std::uint64_t seed) {
  NumericOptions opts;
  opts.seed = seed;
  if (solver == "numeric") return solve_pair_numeric(p, opts);
  if (solver == "closed") return solve_l2_closed(p);
  if (solver == "root") return solve_pair_2class(p);
  if (solver != "auto") throw InvalidArgument("unknown solver '" + solver + "'");
  if (p.loss.kind == LossKind::Kind::l2) return solve_l2_closed(p);
  return solve_pair_2class(p);
}

// |beta| <= 1e-10 reads as balanced.
const char* sign_word(double beta) {
  return beta > 1e-10 ? "positive" : (beta < -1e-10 ? "negative" : "balanced");
}

int cmd_balance(const BalanceArgs& a, std::ostream& out) {
  const LossKind loss = LossKind::parse(a.loss, a.gamma);
  if (!a.instance.empty()) {
    const auto v = parse_list(a.instance, 4, "--instance a1,a2,delta,k");
    if (!(v[3] >= 2.0) || v[3] != std::floor(v[3])) throw InvalidArgument("k must be an integer >= 2");
    MixPairProblem p;
    p.alpha1 = v[0];
    p.alpha2 = v[1];
    p.delta = v[2];
    p.k = static_cast<std::size_t>(v[3]);
    p.loss = loss;
    p.validate();
    const BalanceReport r = solve_with(p, a.solver, a.seed);
    json rec{{"record", "balance"}, {"loss", loss.name()}, {"alpha1", num(p.alpha1)}, {"alpha2", num(p.alpha2)},
             {"delta", num(p.delta)}, {"k", p.k}, {"gap", num(p.gap())}, {"solver", to_string(r.solver)},
             {"constraint_active", r.constraint_active}, {"beta", num(r.beta)}, {"sign", sign_word(r.beta)},
             {"objective", num(r.objective_value)}, {"separation", num(r.separation())},
             {"p1", vec(r.p1_star.values())}, {"p2", vec(r.p2_star.values())}};
    emit(out, rec);
    return kExitOk;
  }
  if (a.trials < 1) throw InvalidArgument("trials must be at least 1");
  std::size_t active = 0, neg = 0, pos = 0, zero = 0;
  double max_abs = 0.0, max_violation = 0.0;
  for (std::size_t t = 0; t < a.trials; ++t) {
    const MixPairProblem p = sample_problem(a.seed, t, loss);
    const BalanceReport r = solve_with(p, a.solver, stream_seed(a.seed, "balance-numeric", t));
    if (p.delta < p.gap()) ++active;
    ++(r.beta < -1e-10 ? neg : (r.beta > 1e-10 ? pos : zero));
    max_abs = std::max(max_abs, std::abs(r.beta));
    max_violation = std::max(max_violation, r.separation() - p.delta);
  }
  emit(out, json{{"record", "balance-trials"}, {"loss", loss.name()}, {"trials", a.trials}, {"seed", a.seed},
                 {"below_gap", active}, {"negative", neg}, {"positive", pos}, {"near_zero", zero},
                 {"max_abs_beta", num(max_abs)}, {"max_violation", num(max_violation)}});
  return kExitOk;
}

// ---- simulate / train ------------------------------------------------------

struct WorldArgs {
  WorldConfig cfg;
  std::optional<double> sigma;
  std::optional<double> scale_s;

  void add(CLI::App* sub) {
    sub->add_option("--classes", cfg.classes, "number of classes")->check(CLI::Range(2, 4096));
    sub->add_option("--dim", cfg.dim, "embedding dimension (>= classes)")->check(CLI::PositiveNumber);
    sub->add_option("--separation", cfg.separation, "distance between class means")->check(CLI::PositiveNumber);
    sub->add_option("--sigma", sigma, "noise scale (default 0.4 * separation)")->check(CLI::PositiveNumber);
    sub->add_option("--warp", cfg.warp_gamma, "transition warp exponent")->check(CLI::PositiveNumber);
    sub->add_option("--sets", cfg.sets, "number of mixed sets")->check(CLI::PositiveNumber);
    sub->add_option("--lambdas", cfg.lambdas, "coefficients per set")->check(CLI::Range(2, 1000));
    sub->add_option("--onehot-per-class", cfg.onehot_per_class, "one-hot samples per class")->check(CLI::PositiveNumber);
    sub->add_option("--validation-per-class", cfg.validation_per_class, "validation samples per class");
    sub->add_option("--scale-s", scale_s, "debias slope s (default: matched to the world)")->check(CLI::PositiveNumber);
  }

  WorldConfig resolved() const {
    WorldConfig c = cfg;
    c.sigma = sigma.value_or(0.4 * c.separation);
    return c;
  }
};

struct SimulateArgs {
  WorldArgs world;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const WorldConfig cfg = a.world.resolved();
  const Benchmark b = cfg.benchmark(a.seed);
  const double s = a.world.scale_s.value_or(matched_scale(cfg.world(a.seed)));
  const ReannotationScore sc = score_reannotation(b, s);
  std::vector<double> hat, truth;
  for (const BenchmarkSample& m : b.mixed) {
    hat.push_back(m.lambda_hat);
    truth.push_back(m.lambda_true);
  }
  if (!a.out_dir.empty()) io::save_benchmark(a.out_dir, b);
  emit(out, json{{"record", "simulate"}, {"seed", a.seed}, {"classes", cfg.classes}, {"dim", cfg.dim},
                 {"separation", num(cfg.separation)}, {"sigma", num(cfg.sigma)}, {"warp", num(cfg.warp_gamma)},
                 {"sets", cfg.sets}, {"samples", b.mixed.size()}, {"onehot", b.onehot.size()},
                 {"validation", b.validation.size()}, {"scale_s", num(s)},
                 {"mean_abs_lambda_hat", num(sc.mean_abs_lambda_hat)}, {"mean_abs_lambda", num(sc.mean_abs_lambda)},
                 {"spearman_lambda_hat", num(spearman(hat, truth))}, {"max_residual_dot", num(sc.max_residual_dot)},
                 {"out", a.out_dir}});
  return kExitOk;
}

struct TrainArgs {
  WorldArgs world;
  std::string data_dir;
  std::string soft_loss = "l2";
  double gamma = 3.0;
  std::string soft_labels = "reannotated";
  TrainConfig cfg;
};

int cmd_train(TrainArgs a, std::ostream& out) {
  Benchmark b;
  double s = 0.0;
  if (a.data_dir.empty()) {
    const WorldConfig wc = a.world.resolved();
    b = wc.benchmark(a.cfg.seed);
    s = a.world.scale_s.value_or(matched_scale(wc.world(a.cfg.seed)));
  } else {
    b = io::load_benchmark(a.data_dir);
    s = a.world.scale_s.value_or(4.0);
  }
  if (a.soft_loss == "none") {
    a.cfg.soft_ratio = 0.0;
  } else {
    a.cfg.soft_loss = LossKind::parse(a.soft_loss, a.gamma);
  }
  if (a.soft_labels != "reannotated" && a.soft_labels != "generated") {
    throw InvalidArgument("--soft-labels must be reannotated or generated");
  }
  const TrainData data = training_data(b, s, PrototypeMode::mean, a.soft_labels == "generated");
  const auto [model, report] = train(data, a.cfg);
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const EpochStats& st = report.epochs[e];
    emit(out, json{{"record", "epoch"}, {"epoch", e}, {"train_loss", num(st.train_loss)}, {"val_nll", num(st.val_nll)},
                   {"val_ece", num(st.val_ece)}, {"val_oe", num(st.val_oe)}});
  }
  json r{{"record", "train"}, {"soft_loss", a.soft_loss == "none" ? std::string("none") : a.cfg.soft_loss.name()},
         {"soft_labels", a.soft_labels}, {"seed", a.cfg.seed}, {"epochs", a.cfg.epochs},
         {"train_size", report.train_size}, {"soft_size", report.soft_size},
         {"validation_size", report.validation_size}, {"scale_s", num(s)}};
  r.update(metrics_json(report.final_metrics));
  r["temperature"] = num(report.temperature.temperature);
  r["ece_after_ts"] = num(report.calibrated_metrics.ece);
  r["nll_after_ts"] = num(report.calibrated_metrics.nll);
  emit(out, r);
  return kExitOk;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::size_t trials = 200;
  std::uint64_t seed = 7;
};

PredictionSet worked_example() {
  // Confidences 0.6, 0.8, 0.9, 0.3 with the first two correct.
  Eigen::MatrixXd p(4, 4);
  const double c[4] = {0.6, 0.8, 0.9, 0.3};
  for (int i = 0; i < 4; ++i) {
    p.row(i).setConstant((1.0 - c[i]) / 3.0);
    p(i, 0) = c[i];
  }
  return PredictionSet(p, {0, 0, 1, 2});
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const bool color = use_color(err);
  std::size_t passed = 0, failed = 0;
  auto check = [&](const std::string& name, bool ok, json detail) {
    json r{{"record", "check"}, {"name", name}, {"pass", ok}};
    r.update(detail);
    emit(out, r);
    (ok ? passed : failed) += 1;
    const char* word = ok ? "PASS" : "FAIL";
    if (color) {
      err << (ok ? "\x1b[32m" : "\x1b[31m") << word << "\x1b[0m " << name << '\n';
    } else {
      err << word << ' ' << name << '\n';
    }
  };

  const PropositionSummary s = verify_propositions(a.trials, a.seed);
  check("l2-balanced", s.l2_max_abs_beta <= 1e-10 && s.l2_max_objective_gap <= 1e-6,
        {{"max_abs_beta", num(s.l2_max_abs_beta)}, {"max_objective_gap", num(s.l2_max_objective_gap)}});
  check("ce-negative", s.ce_negative == s.ce_active && s.ce_inactive_at_label == s.ce_inactive,
        {{"below_gap", s.ce_active}, {"negative", s.ce_negative}, {"at_or_above_gap", s.ce_inactive},
         {"at_label", s.ce_inactive_at_label}});
  check("focal-positive", s.fl_positive == s.fl_active, {{"below_gap", s.fl_active}, {"positive", s.fl_positive}});
  check("sign-witness", s.witness_agree == s.witness_checked,
        {{"checked", s.witness_checked}, {"agree", s.witness_agree}});
  check("solver-agreement", s.max_objective_gap_2class <= 1e-6, {{"max_objective_gap", num(s.max_objective_gap_2class)}});
  check("feasibility", s.max_violation <= 1e-9, {{"max_violation", num(s.max_violation)}});
  check("support", s.max_off_support < 1e-6, {{"max_off_support", num(s.max_off_support)}});

  const WitnessGrid g = check_witness_grid();
  check("witness-grid", g.passed(),
        {{"points", g.points}, {"max_t_ce", num(g.max_t_ce)}, {"min_t_fl", num(g.min_t_fl)}});

  const PredictionSet ex = worked_example();
  const double e = ece(ex, 2), ae = aece(ex, 2), o = oe(ex, 2), u = ue(ex, 2);
  check("metrics-example",
        std::abs(e - 0.15) <= 1e-12 && std::abs(ae - 0.2) <= 1e-12 && std::abs(o - 0.15) <= 1e-12 && u == 0.0,
        {{"ece", num(e)}, {"aece", num(ae)}, {"oe", num(o)}, {"ue", num(u)}});

  MixPairProblem l2;
  l2.alpha1 = 0.9;
  l2.alpha2 = 0.6;
  l2.delta = 0.045;
  l2.loss = LossKind::l2();
  const BalanceReport lr = solve_l2_closed(l2);
  check("l2-closed-form",
        std::abs(lr.p1_star[0] - 0.825) <= 1e-12 && std::abs(lr.p2_star[0] - 0.675) <= 1e-12 &&
            std::abs(lr.separation() - 0.045) <= 1e-12,
        {{"p1", vec(lr.p1_star.values())}, {"p2", vec(lr.p2_star.values())}});

  emit(out, json{{"record", "verify"}, {"trials", a.trials}, {"seed", a.seed}, {"passed", passed},
                 {"failed", failed}});
  return failed == 0 ? kExitOk : kExitVerify;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibration toolkit: metrics, temperature scaling, soft-label reannotation, balance analysis."};
  app.name("calibkit");
  app.require_subcommand(1);

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "ECE, AECE, OE, UE and NLL of a prediction file");
  metrics->add_option("--input", ma.input, "CSV: label,p0.. or label,z0..")->required();
  metrics->add_option("--bins", ma.bins, "number of bins")->check(CLI::PositiveNumber);
  metrics->add_option("--labels-col", ma.labels_col, "name of the label column");
  metrics->add_option("--report", ma.report, "summary or bins")->check(CLI::IsMember({"summary", "bins"}));

  TempArgs ta;
  auto* temp = app.add_subcommand("temp-scale", "fit a temperature on a validation file");
  temp->add_option("--input", ta.input, "CSV with logits (z0..) or probabilities (p0..)")->required();
  temp->add_option("--objective", ta.objective, "nll or ece")->check(CLI::IsMember({"nll", "ece"}));
  temp->add_option("--grid", ta.grid, "lo:hi:step");
  temp->add_option("--bins", ta.bins, "bins for the ece objective")->check(CLI::PositiveNumber);
  temp->add_option("--labels-col", ta.labels_col, "name of the label column");

  ReannotateArgs ra;
  auto* rean = app.add_subcommand("reannotate", "soft labels for mixed samples from class prototypes");
  rean->add_option("--embeddings", ra.embeddings, "CSV: label,e0.. (one-hot pool)")->required();
  rean->add_option("--pairs", ra.pairs, "CSV: class_i,class_j,e0..")->required();
  rean->add_option("--scale-s", ra.scale_s, "debias slope s")->check(CLI::PositiveNumber);
  rean->add_option("--prototype-mode", ra.prototype_mode, "mean or sum")->check(CLI::IsMember({"mean", "sum"}));
  rean->add_flag("--normalize", ra.normalize, "scale embeddings to unit norm first");

  BalanceArgs ba;
  auto* bal = app.add_subcommand("balance", "solve the proximity-constrained pair problem");
  bal->add_option("--loss", ba.loss, "ce, focal or l2")->check(CLI::IsMember({"ce", "focal", "l2"}));
  bal->add_option("--gamma", ba.gamma, "focal exponent")->check(CLI::PositiveNumber);
  bal->add_option("--trials", ba.trials, "random instances when no --instance is given");
  bal->add_option("--seed", ba.seed, "root seed");
  bal->add_option("--instance", ba.instance, "a1,a2,delta,k");
  bal->add_option("--solver", ba.solver, "auto, closed, root or numeric")
      ->check(CLI::IsMember({"auto", "closed", "root", "numeric"}));

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "generate a mixed-label benchmark");
  sa.world.add(sim);
  sim->add_option("--seed", sa.seed, "root seed");
  sim->add_option("--out", sa.out_dir, "directory for mixed.csv, onehot.csv, validation.csv");

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "train a linear softmax model on one-hot plus soft pools");
  tr.world.add(trn);
  trn->add_option("--data", tr.data_dir, "benchmark directory written by simulate");
  trn->add_option("--soft-loss", tr.soft_loss, "none, ce, focal or l2")
      ->check(CLI::IsMember({"none", "ce", "focal", "l2"}));
  trn->add_option("--gamma", tr.gamma, "focal exponent")->check(CLI::PositiveNumber);
  trn->add_option("--soft-labels", tr.soft_labels, "reannotated or generated");
  trn->add_option("--epochs", tr.cfg.epochs, "epochs")->check(CLI::PositiveNumber);
  trn->add_option("--lr", tr.cfg.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  trn->add_option("--soft-ratio", tr.cfg.soft_ratio, "soft samples per one-hot sample")->check(CLI::NonNegativeNumber);
  trn->add_option("--batch-size", tr.cfg.batch_size, "one-hot samples per batch")->check(CLI::PositiveNumber);
  trn->add_option("--momentum", tr.cfg.momentum, "SGD momentum");
  trn->add_option("--weight-decay", tr.cfg.weight_decay, "L2 penalty on weights");
  trn->add_option("--seed", tr.cfg.seed, "root seed");

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "run the proposition and invariant suite");
  ver->add_option("--trials", va.trials, "random instances")->check(CLI::PositiveNumber);
  ver->add_option("--seed", va.seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    app.exit(e, err, err);
    return kExitInput;
  }

  try {
    if (*metrics) return cmd_metrics(ma, out);
    if (*temp) return cmd_temp_scale(ta, out);
    if (*rean) return cmd_reannotate(ra, out);
    if (*bal) return cmd_balance(ba, out);
    if (*sim) return cmd_simulate(sa, out);
    if (*trn) {
      tr.cfg.lr_schedule = {{tr.cfg.epochs / 2, 0.1}, {tr.cfg.epochs * 3 / 4, 0.1}};
      return cmd_train(tr, out);
    }
    if (*ver) return cmd_verify(va, out, err);
  } catch (const SolverFailure& e) {
    err << "error: " << e.what() << " [" << e.diagnostics() << "]\n";
    return kExitSolver;
  } catch (const TrainingFailure& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"calibkit"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace calib
