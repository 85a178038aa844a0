// pmor: command-line driver for polynomial-manifold reduced-order models.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pmor/experiments.hpp"

namespace fs = std::filesystem;
using namespace pmor;

namespace {

#ifndef PMOR_RECIPE_DIR
#define PMOR_RECIPE_DIR "recipes"
#endif

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kUnstable = 3 };

fs::path output_root() {
  const char* env = std::getenv("PMOR_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

// A recipe argument is either a file or the name of a bundled recipe.
fs::path resolve_recipe(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  for (const fs::path& dir : {fs::path(PMOR_RECIPE_DIR), fs::path("recipes")}) {
    const fs::path p = dir / (arg + ".json");
    if (fs::exists(p)) return p;
  }
  throw Error("recipe not found: " + arg);
}

CenterMode parse_center(const std::string& name) {
  if (name == "mean") return ColumnMean{};
  if (name == "ic-mean") return InitialConditionMean{};
  throw Error("unknown centering: " + name);
}

RomMethod require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw Error("unknown method: " + name);
  return *m;
}

fs::path default_coords_path(const fs::path& model) {
  fs::path p = model;
  p.replace_extension(".coords.smat");
  return p;
}

void emit(const Json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(j, out);
  }
}

// ------------------------------------------------------------------ options

struct GenerateOpts {
  std::string problem;
  std::string out;
  std::vector<double> mu{0.5};
  double kappa = 0.01;
  double alpha = 4.0;
  double beta = 1.0;
  int n = 0;
  double t_final = 0.0;
  double t_record = 0.0;
  double internal_dt = 0.0;
  bool lift = false;
};

struct LearnOpts {
  std::string data;
  std::string out;
  std::string coords;
  std::string center = "mean";
  std::string method = "pod";
  LearnConfig cfg;
};

struct TrainOpts {
  std::string data;
  std::string manifold;
  std::string coords;
  std::string out;
  std::string method = "mpod";
  Lambdas lambdas;
};

struct PredictOpts {
  std::string model;
  std::string data;
  std::string out;
  std::string encoding = "";
  int substeps = 10;
  double blowup = 1e6;
};

struct EvaluateOpts {
  std::string prediction;
  std::string reference;
  std::string model;
  std::string manifold;
  std::string out;
  std::string pointwise;
};

struct TuneOpts {
  std::string data;
  std::string out;
  std::string grid;
  std::string center = "mean";
  std::string method = "mpod";
  LearnConfig cfg;
  int substeps = 10;
  double tie_tolerance = 0.0;
  Index horizon = 0;
};

struct ExportOpts {
  std::string run;
  std::vector<double> times{0.2, 1.0};
  std::string out;
};

struct ReproduceOpts {
  std::string recipe;
  std::string out;
};

// ---------------------------------------------------------------- commands

int cmd_generate(const GenerateOpts& o) {
  SnapshotSet set;
  Json config{{"problem", o.problem}};
  if (o.problem == "toy") {
    const Matrix data = toy_manifold_data();
    std::vector<double> times(static_cast<std::size_t>(data.cols()));
    for (std::size_t j = 0; j < times.size(); ++j) times[j] = static_cast<double>(j);
    set = SnapshotSet::make(data, times);
  } else if (o.problem == "allen-cahn") {
    AllenCahnConfig cfg;
    cfg.kappa = o.kappa;
    if (o.n > 0) cfg.n = o.n;
    if (o.t_final > 0) cfg.t_final = o.t_final;
    if (o.t_record > 0) cfg.t_record = o.t_record;
    if (o.internal_dt > 0) cfg.internal_dt = o.internal_dt;
    cfg.validate();
    std::vector<SnapshotSet> parts(o.mu.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < o.mu.size(); ++i) {
      AllenCahnConfig c = cfg;
      c.mu = o.mu[i];
      SnapshotSet raw = allen_cahn_simulate(c);
      parts[i] = o.lift ? SnapshotSet::make(lift(raw.data), raw.times, {}, raw.param_labels) : raw;
    }
    set = concatenate(parts);
    config.update({{"kappa", cfg.kappa}, {"mu", o.mu}, {"n", cfg.n}, {"t_final", cfg.t_final},
                   {"t_record", cfg.t_record}, {"internal_dt", cfg.internal_dt}, {"lifted", o.lift}});
  } else if (o.problem == "kdv") {
    KdvConfig cfg;
    cfg.alpha = o.alpha;
    cfg.beta = o.beta;
    if (o.n > 0) cfg.n = o.n;
    if (o.t_final > 0) cfg.t_final = o.t_final;
    if (o.t_record > 0) cfg.t_record = o.t_record;
    if (o.internal_dt > 0) cfg.internal_dt = o.internal_dt;
    cfg.validate();
    set = kdv_simulate(cfg);
    config.update({{"alpha", cfg.alpha}, {"beta", cfg.beta}, {"n", cfg.n}, {"t_final", cfg.t_final},
                   {"t_record", cfg.t_record}, {"internal_dt", cfg.internal_dt}});
  } else {
    throw Error("unknown problem: " + o.problem);
  }
  write_snapshot_set(set, o.out, config);
  std::cout << "wrote " << set.n() << "x" << set.k() << " snapshots to " << o.out << '\n';
  return kOk;
}

int cmd_learn(const LearnOpts& o) {
  o.cfg.validate();
  const SnapshotSet set = read_snapshot_set(o.data);
  const CenteredSnapshots cs = center(set, parse_center(o.center));
  LearnedManifold lm;
  LearnReport rep;
  if (o.method == "pod") {
    lm = learn_pod(cs, o.cfg);
  } else if (o.method == "am") {
    lm = learn_am(cs, o.cfg, std::nullopt, &rep);
  } else {
    throw Error("unknown learner: " + o.method);
  }
  save_model(lm.manifold, o.out);
  const fs::path coords = o.coords.empty() ? default_coords_path(o.out) : fs::path(o.coords);
  save_matrix(lm.s_hat, coords);
  Json report{{"model", o.out},
              {"coordinates", coords.string()},
              {"relative_state_error", relative_state_error(lm.manifold, lm.s_hat, set.data, cs.s_ref)},
              {"energy", representation_energy(lm.manifold, lm.s_hat, cs.centered)}};
  if (o.method == "am") {
    report["iterations"] = rep.iterations;
    report["converged"] = rep.converged;
    report["objective_history"] = rep.objective_history;
  }
  std::cout << report.dump(2) << '\n';
  return kOk;
}

int cmd_train(const TrainOpts& o) {
  const RomMethod method = require_method(o.method);
  const SnapshotSet set = read_snapshot_set(o.data);
  LearnedManifold lm{load_model(o.manifold), Matrix()};
  require(lm.manifold.n() == set.n(), "manifold and data dimensions differ");
  const CenteredSnapshots cs = center(set, CustomReference{lm.manifold.s_ref});
  fs::path coords = o.coords;
  if (coords.empty() && fs::exists(default_coords_path(o.manifold))) coords = default_coords_path(o.manifold);
  if (!coords.empty()) {
    lm.s_hat = load_matrix(coords);
    require(lm.s_hat.rows() == lm.manifold.r() && lm.s_hat.cols() == set.k(),
            "coordinate file does not match manifold and data");
  } else if (default_encoding(method) == InitialEncoding::Nls) {
    lm.s_hat = encode_nls_columns(lm.manifold, cs.centered, lm.manifold.V.transpose() * cs.centered, {});
  } else {
    lm.s_hat = lm.manifold.V.transpose() * cs.centered;
  }
  const ReducedModel model = train_rom(lm, cs, method, o.lambdas);
  save_reduced_model(model, o.out);
  std::cout << "wrote reduced model (r=" << model.r() << ", features=" << model.feature_length()
            << ") to " << o.out << '\n';
  return kOk;
}

int cmd_predict(const PredictOpts& o) {
  const ReducedModel model = load_reduced_model(o.model);
  const SnapshotSet set = read_snapshot_set(o.data);
  InitialEncoding ic = model.ops().has_higher_order() ? InitialEncoding::Nls : InitialEncoding::Linear;
  if (o.encoding == "linear") ic = InitialEncoding::Linear;
  else if (o.encoding == "nls") ic = InitialEncoding::Nls;
  else if (!o.encoding.empty()) throw Error("unknown encoding: " + o.encoding);
  IntegrationConfig cfg;
  cfg.substeps = o.substeps;
  cfg.blowup_threshold = o.blowup;
  const Matrix pred = predict_trajectories(model, set, ic, cfg);
  write_snapshot_set(SnapshotSet::make(pred, set.times, set.trajectory_breaks, set.param_labels), o.out,
                     {{"model", o.model}, {"initial_conditions", o.data}});
  std::cout << "wrote prediction to " << o.out << '\n';
  return kOk;
}

int cmd_evaluate(const EvaluateOpts& o) {
  const SnapshotSet ref = read_snapshot_set(o.reference);
  const Matrix pred = load_matrix(o.prediction);
  if (pred.rows() != ref.n() || pred.cols() != ref.k()) {
    throw Error("dimension mismatch: prediction " + std::to_string(pred.rows()) + "x" +
                std::to_string(pred.cols()) + " vs reference " + std::to_string(ref.n()) + "x" +
                std::to_string(ref.k()));
  }
  std::optional<PolynomialManifold> manifold;
  if (!o.model.empty()) manifold = load_reduced_model(o.model).manifold();
  if (!o.manifold.empty()) manifold = load_model(o.manifold);
  const Vector s_ref = manifold ? manifold->s_ref : Vector::Zero(ref.n());
  require(s_ref.size() == ref.n(), "manifold dimension differs from the data");

  auto rel = [&](Index begin, Index len) {
    const double denom = (ref.data.middleCols(begin, len).colwise() - s_ref).norm();
    const double num = (ref.data.middleCols(begin, len) - pred.middleCols(begin, len)).norm();
    if (denom > 0.0) return num / denom;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  Json metrics{{"relative_state_error", rel(0, ref.k())}};
  Json per = Json::array();
  for (const auto& [b, e] : ref.trajectory_ranges()) per.push_back(rel(b, e - b));
  metrics["per_trajectory"] = per;
  if (manifold) {
    const Matrix s_hat = encode_linear_columns(*manifold, ref.data);
    metrics["energy"] = energy_metric(*manifold, s_hat, ref.data, s_ref);
  }
  if (!o.pointwise.empty()) {
    save_matrix((pred - ref.data).cwiseAbs(), o.pointwise);
    metrics["pointwise_error"] = o.pointwise;
  }
  emit(metrics, o.out);
  return kOk;
}

int cmd_tune(const TuneOpts& o) {
  const SnapshotSet set = read_snapshot_set(o.data);
  TuneSettings ts;
  ts.method = require_method(o.method);
  ts.learn = o.cfg;
  ts.centering = parse_center(o.center);
  ts.substeps = o.substeps;
  ts.tie_tolerance = o.tie_tolerance;
  ts.stability_horizon = o.horizon;
  const Grid grid = o.grid.empty() ? Grid::default_grid() : grid_from_json(read_json(o.grid), Grid::default_grid());
  const TuneResult res = grid_search(set, ts, grid);
  if (o.out.empty()) {
    write_tune_table(res, std::cout);
  } else {
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write " + o.out);
    write_tune_table(res, f);
  }
  std::cerr << Json{{"gamma", res.best.gamma},
                    {"lambda1", res.best.lambda1},
                    {"lambda2", res.best.lambda2},
                    {"lambda3", res.best.lambda3},
                    {"error", res.score}}
                   .dump()
            << '\n';
  return kOk;
}

int cmd_export(const ExportOpts& o) {
  if (o.out.empty()) {
    export_kdv_slices(o.run, o.times, std::cout);
  } else {
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write " + o.out);
    export_kdv_slices(o.run, o.times, f);
  }
  return kOk;
}

int cmd_reproduce(const ReproduceOpts& o) {
  const fs::path recipe_path = resolve_recipe(o.recipe);
  const Json recipe = read_json(recipe_path);
  const std::string name = recipe.value("name", recipe_path.stem().string());
  const fs::path out = o.out.empty() ? output_root() / recipe_path.stem() : fs::path(o.out);
  const Json summary = reproduce(recipe, out);
  Json brief = summary;
  brief.erase("x");
  brief.erase("recipe");
  std::cout << brief.dump(2) << '\n';
  return kOk;
}

void add_learn_flags(CLI::App* sub, LearnConfig& cfg) {
  sub->add_option("--r", cfg.r, "Reduced dimension")->required();
  sub->add_option("--q", cfg.q, "Number of complementary modes");
  sub->add_option("--p", cfg.p, "Polynomial degree");
  sub->add_option("--gamma", cfg.gamma, "Ridge weight for Xi");
  sub->add_option("--am-tol", cfg.am_energy_tolerance, "AM stopping tolerance on the energy change");
  sub->add_option("--max-iter", cfg.am_max_outer_iterations, "AM outer iteration cap");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial-manifold reduced-order modeling"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)");

  GenerateOpts gen;
  auto* sg = app.add_subcommand("generate", "Simulate a full-order model and write snapshots");
  sg->add_option("--problem", gen.problem)->required()->check(CLI::IsMember({"toy", "allen-cahn", "kdv"}));
  sg->add_option("--out", gen.out)->required();
  sg->add_option("--mu", gen.mu, "Allen-Cahn initial-condition parameters");
  sg->add_option("--kappa", gen.kappa, "Allen-Cahn interface parameter");
  sg->add_option("--alpha", gen.alpha);
  sg->add_option("--beta", gen.beta);
  sg->add_option("--n", gen.n, "Grid points");
  sg->add_option("--t-final", gen.t_final);
  sg->add_option("--t-record", gen.t_record);
  sg->add_option("--internal-dt", gen.internal_dt);
  sg->add_flag("--lift", gen.lift, "Store the quadratic lifting (s, s^2)");

  LearnOpts learn;
  auto* sl = app.add_subcommand("learn-manifold", "Fit a polynomial manifold to snapshots");
  sl->add_option("--data", learn.data)->required()->check(CLI::ExistingFile);
  sl->add_option("--out", learn.out)->required();
  sl->add_option("--coords", learn.coords, "Where to write training coordinates");
  sl->add_option("--center", learn.center)->check(CLI::IsMember({"mean", "ic-mean"}));
  sl->add_option("--method", learn.method)->check(CLI::IsMember({"pod", "am"}));
  add_learn_flags(sl, learn.cfg);

  TrainOpts train;
  auto* st = app.add_subcommand("train-rom", "Infer reduced operators");
  st->add_option("--data", train.data)->required()->check(CLI::ExistingFile);
  st->add_option("--manifold", train.manifold)->required()->check(CLI::ExistingFile);
  st->add_option("--coords", train.coords)->check(CLI::ExistingFile);
  st->add_option("--out", train.out)->required();
  st->add_option("--method", train.method)->check(CLI::IsMember({"opinf", "mpod", "mam"}));
  st->add_option("--lambda1", train.lambdas.lambda1);
  st->add_option("--lambda2", train.lambdas.lambda2);
  st->add_option("--lambda3", train.lambdas.lambda3);

  PredictOpts pred;
  auto* sp = app.add_subcommand("predict", "Integrate a reduced model from the initial states of a snapshot file");
  sp->add_option("--model", pred.model)->required()->check(CLI::ExistingFile);
  sp->add_option("--data", pred.data, "Snapshot file giving initial states and output times")
      ->required()
      ->check(CLI::ExistingFile);
  sp->add_option("--out", pred.out)->required();
  sp->add_option("--encoding", pred.encoding)->check(CLI::IsMember({"linear", "nls"}));
  sp->add_option("--substeps", pred.substeps);
  sp->add_option("--blowup", pred.blowup);

  EvaluateOpts ev;
  auto* se = app.add_subcommand("evaluate", "Relative state error of a prediction");
  se->add_option("--prediction", ev.prediction)->required()->check(CLI::ExistingFile);
  se->add_option("--reference", ev.reference)->required()->check(CLI::ExistingFile);
  se->add_option("--model", ev.model, "Reduced model supplying the reference state")->check(CLI::ExistingFile);
  se->add_option("--manifold", ev.manifold)->check(CLI::ExistingFile);
  se->add_option("--out", ev.out, "Metrics JSON (stdout when omitted)");
  se->add_option("--pointwise", ev.pointwise, "Write |prediction - reference| to this matrix file");

  TuneOpts tune;
  auto* su = app.add_subcommand("tune", "Grid search over gamma and the regularization weights");
  su->add_option("--data", tune.data)->required()->check(CLI::ExistingFile);
  su->add_option("--out", tune.out, "CSV table (stdout when omitted)");
  su->add_option("--grid", tune.grid, "JSON grid document")->check(CLI::ExistingFile);
  su->add_option("--center", tune.center)->check(CLI::IsMember({"mean", "ic-mean"}));
  su->add_option("--method", tune.method)->check(CLI::IsMember({"opinf", "mpod", "mam"}));
  su->add_option("--substeps", tune.substeps);
  su->add_option("--tie-tolerance", tune.tie_tolerance);
  su->add_option("--horizon", tune.horizon, "Extra output steps checked for stability");
  add_learn_flags(su, tune.cfg);

  ExportOpts ex;
  auto* sx = app.add_subcommand("export-plot", "CSV solution slices of a KdV run");
  sx->add_option("--run", ex.run)->required()->check(CLI::ExistingDirectory);
  sx->add_option("--times", ex.times)->delimiter(',');
  sx->add_option("--out", ex.out);

  ReproduceOpts rep;
  auto* sr = app.add_subcommand("reproduce", "Run a bundled or user recipe end to end");
  sr->add_option("recipe", rep.recipe, "toy3d | allen-cahn | kdv | kdv-r16 | path")->required();
  sr->add_option("--out", rep.out, "Output directory (default $PMOR_OUTPUT_ROOT/<recipe>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*sg) return cmd_generate(gen);
    if (*sl) return cmd_learn(learn);
    if (*st) return cmd_train(train);
    if (*sp) return cmd_predict(pred);
    if (*se) return cmd_evaluate(ev);
    if (*su) return cmd_tune(tune);
    if (*sx) return cmd_export(ex);
    if (*sr) return cmd_reproduce(rep);
  } catch (const UnstableRomError& e) {
    std::cerr << Json{{"error", {{"stage", stage}, {"kind", "unstable_rom"}, {"message", e.what()},
                                 {"last_valid_time", e.last_valid_time()}}}}
                     .dump()
              << '\n';
    return kUnstable;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", {{"stage", stage}, {"kind", "failure"}, {"message", e.what()}}}}.dump() << '\n';
    return kFailure;
  }
  return kUsage;
}
