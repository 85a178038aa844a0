#include "pmor/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>

namespace pmor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  require(!v.empty(), "median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double relative_error(const Matrix& reference, const Matrix& prediction, const Vector& s_ref) {
  const double denom = (reference.colwise() - s_ref).norm();
  if (!(denom > 0.0)) throw Error("degenerate data");
  return (reference - prediction).norm() / denom;
}

// Per-trajectory relative errors of a model on a pooled snapshot set.
std::vector<double> trajectory_errors(const ReducedModel& model, const SnapshotSet& set,
                                      InitialEncoding ic, const IntegrationConfig& base) {
  const auto ranges = set.trajectory_ranges();
  std::vector<double> out(ranges.size(), kInf);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto [begin, end] = ranges[i];
    IntegrationConfig cfg = base;
    cfg.t0 = set.times[static_cast<std::size_t>(begin)];
    cfg.dt_output = set.times[static_cast<std::size_t>(begin + 1)] - cfg.t0;
    try {
      const Matrix pred = predict_full(model, set.data.col(begin), end - begin - 1, cfg, ic);
      out[i] = relative_error(set.data.middleCols(begin, end - begin), pred, model.manifold().s_ref);
    } catch (const UnstableRomError&) {
      // Stays +inf.
    }
  }
  return out;
}

Grid fixed_gamma(Grid g, double gamma) {
  g.gamma_values = {gamma};
  return g;
}

}  // namespace

// ---------------------------------------------------------- snapshot files

std::filesystem::path sidecar_path(const std::filesystem::path& matrix_path) {
  std::filesystem::path p = matrix_path;
  p += ".json";
  return p;
}

void write_snapshot_set(const SnapshotSet& set, const std::filesystem::path& path, const Json& config) {
  save_matrix(set.data, path);
  Json side{{"rows", set.n()},
            {"cols", set.k()},
            {"times", set.times},
            {"trajectory_breaks", set.trajectory_breaks},
            {"param_labels", set.param_labels},
            {"config", config}};
  write_json(side, sidecar_path(path));
}

SnapshotSet read_snapshot_set(const std::filesystem::path& path) {
  Matrix data = load_matrix(path);
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) {
    std::vector<double> times(static_cast<std::size_t>(data.cols()));
    for (std::size_t j = 0; j < times.size(); ++j) times[j] = static_cast<double>(j);
    return SnapshotSet::make(std::move(data), std::move(times));
  }
  const Json j = read_json(side);
  try {
    return SnapshotSet::make(std::move(data), j.at("times").get<std::vector<double>>(),
                             j.value("trajectory_breaks", std::vector<Index>{}),
                             j.value("param_labels", std::vector<double>{}));
  } catch (const Json::exception& ex) {
    throw Error("malformed sidecar " + side.string() + ": " + ex.what());
  }
}

// ------------------------------------------------------------------ toy 3D

ToyExperiment::ToyExperiment() {
  learn.r = 2;
  learn.q = 1;
  learn.p = 3;
}

ToyResult run_toy(const ToyExperiment& exp) {
  const Matrix data = toy_manifold_data();
  std::vector<double> times(static_cast<std::size_t>(data.cols()));
  for (std::size_t j = 0; j < times.size(); ++j) times[j] = static_cast<double>(j);
  const CenteredSnapshots cs = center(SnapshotSet::make(data, times), ColumnMean{});

  ToyResult res;
  LearnConfig linear = exp.learn;
  linear.q = 0;
  const LearnedManifold pod = learn_pod(cs, linear);
  res.pod_error = relative_state_error(pod.manifold, pod.s_hat, data, cs.s_ref);
  const LearnedManifold mpod = learn_pod(cs, exp.learn);
  res.mpod_error = relative_state_error(mpod.manifold, mpod.s_hat, data, cs.s_ref);
  LearnReport rep;
  const LearnedManifold mam = learn_am(cs, exp.learn, mpod, &rep);
  res.mam_error = relative_state_error(mam.manifold, mam.s_hat, data, cs.s_ref);
  res.am_iterations = rep.iterations;
  res.am_converged = rep.converged;
  return res;
}

// ------------------------------------------------------------- shared bits

Json outcome_to_json(const MethodOutcome& o) {
  Json per_train = Json::array();
  for (double v : o.per_trajectory_train) per_train.push_back(finite_or_null(v));
  Json per_test = Json::array();
  for (double v : o.per_trajectory_test) per_test.push_back(finite_or_null(v));
  Json j{{"label", o.label},
         {"method", std::string(method_name(o.method))},
         {"p", o.p},
         {"gamma", o.params.gamma},
         {"lambda1", o.params.lambda1},
         {"lambda2", o.params.lambda2},
         {"lambda3", o.params.lambda3},
         {"tune_score", finite_or_null(o.tune_score)},
         {"training_error", finite_or_null(o.training_error)},
         {"prediction_error", finite_or_null(o.prediction_error)},
         {"prediction_stable", o.prediction_stable},
         {"energy", o.energy},
         {"am_iterations", o.am_iterations},
         {"horizon_check_passed", o.horizon_check_passed},
         {"tuned", o.tuned}};
  if (!o.prediction_stable && o.tuned) j["last_valid_time"] = o.last_valid_time;
  if (!per_train.empty()) j["per_trajectory_train"] = per_train;
  if (!per_test.empty()) j["per_trajectory_test"] = per_test;
  return j;
}

std::vector<double> grid_axis_from_json(const Json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object() && j.contains("log")) {
    const Json& l = j.at("log");
    require(l.is_array() && l.size() == 3, "log axis needs [lo, hi, count]");
    return Grid::log_points(l[0].get<double>(), l[1].get<double>(), l[2].get<int>());
  }
  throw Error("grid axis must be a list or {\"log\": [lo, hi, count]}");
}

Grid grid_from_json(const Json& j, const Grid& defaults) {
  Grid g = defaults;
  if (j.contains("gamma")) g.gamma_values = grid_axis_from_json(j.at("gamma"));
  if (j.contains("lambda1")) g.lambda1_values = grid_axis_from_json(j.at("lambda1"));
  if (j.contains("lambda2")) g.lambda2_values = grid_axis_from_json(j.at("lambda2"));
  if (j.contains("lambda3")) g.lambda3_values = grid_axis_from_json(j.at("lambda3"));
  g.validate();
  return g;
}

// -------------------------------------------------------------- Allen-Cahn

AllenCahnResult run_allen_cahn(const AllenCahnExperiment& exp) {
  AllenCahnResult res;
  res.test_mu = draw_uniform(exp.seed, exp.n_test, exp.test_mu_lo, exp.test_mu_hi);

  auto simulate_all = [&](const std::vector<double>& mus) {
    std::vector<SnapshotSet> sets(mus.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < mus.size(); ++i) {
      AllenCahnConfig cfg = exp.fom;
      cfg.mu = mus[i];
      SnapshotSet raw = allen_cahn_simulate(cfg);
      sets[i] = SnapshotSet::make(lift(raw.data), raw.times, {}, {mus[i]});
    }
    return concatenate(sets);
  };
  const SnapshotSet train = simulate_all(exp.train_mu);
  const SnapshotSet test = simulate_all(res.test_mu);

  // Reference state: mean lifted initial condition of the training runs.
  Vector s_ref = Vector::Zero(train.n());
  const auto ranges = train.trajectory_ranges();
  for (const auto& [begin, end] : ranges) s_ref += train.data.col(begin);
  s_ref /= static_cast<double>(ranges.size());
  const CenterMode centering = CustomReference{s_ref};
  const CenteredSnapshots cs = center(train, centering);

  const SvdSpectrum spec = svd_spectrum(cs);
  res.energy_r = spec.energy(exp.r);
  res.projection_error_rq = std::sqrt(std::max(0.0, 1.0 - spec.energy(exp.r + exp.q)));

  struct Variant {
    RomMethod method;
    int p;
    std::string label;
  };
  std::vector<Variant> variants{{RomMethod::OpInf, 2, "opinf"}};
  for (int p : exp.p_values) variants.push_back({RomMethod::Mpod, p, "mpod_p" + std::to_string(p)});

  IntegrationConfig icfg;
  icfg.substeps = exp.substeps;
  for (const Variant& v : variants) {
    TuneSettings ts;
    ts.method = v.method;
    ts.learn.r = exp.r;
    ts.learn.q = exp.q;
    ts.learn.p = v.p;
    ts.centering = centering;
    ts.substeps = exp.substeps;
    ts.tie_tolerance = exp.tie_tolerance;
    const TuneResult tuned = grid_search(train, ts, fixed_gamma(exp.grid, exp.gamma));

    LearnConfig lc = ts.learn;
    lc.gamma = tuned.best.gamma;
    const LearnedManifold lm = fit_manifold(cs, v.method, lc);
    const ReducedModel model = train_rom(lm, cs, v.method,
                                         {tuned.best.lambda1, tuned.best.lambda2, tuned.best.lambda3});
    MethodOutcome o;
    o.label = v.label;
    o.method = v.method;
    o.p = v.p;
    o.params = tuned.best;
    o.tune_score = tuned.score;
    o.energy = representation_energy(lm.manifold, lm.s_hat, cs.centered);
    const InitialEncoding ic = default_encoding(v.method);
    o.per_trajectory_train = trajectory_errors(model, train, ic, icfg);
    o.per_trajectory_test = trajectory_errors(model, test, ic, icfg);
    o.training_error = median(o.per_trajectory_train);
    o.prediction_error = median(o.per_trajectory_test);
    o.prediction_stable = std::all_of(o.per_trajectory_test.begin(), o.per_trajectory_test.end(),
                                      [](double e) { return std::isfinite(e); });
    res.methods.push_back(std::move(o));
  }
  return res;
}

// --------------------------------------------------------------------- KdV

KdvResult run_kdv(const KdvExperiment& exp) {
  KdvResult res;
  const SnapshotSet full = kdv_simulate(exp.fom);
  res.x = exp.fom.grid();
  res.reference = full.data;
  res.times = full.times;
  const Index n_train = static_cast<Index>(std::llround(exp.t_train / exp.fom.t_record)) + 1;
  require(n_train >= 5 && n_train <= full.k(), "training window out of range");
  const Index n_total = full.k();
  const SnapshotSet train = SnapshotSet::uniform(full.data.leftCols(n_train), exp.fom.t_record);
  const CenteredSnapshots cs = center(train, ColumnMean{});
  res.energy_spectrum = svd_spectrum(cs).energy(exp.spectrum_modes);

  IntegrationConfig icfg;
  icfg.dt_output = exp.fom.t_record;
  icfg.substeps = exp.substeps;
  for (RomMethod method : exp.methods) {
    TuneSettings ts;
    ts.method = method;
    ts.learn.r = exp.r;
    ts.learn.q = exp.q;
    ts.learn.p = exp.p;
    ts.substeps = exp.substeps;
    ts.tie_tolerance = exp.tie_tolerance;
    ts.stability_horizon = exp.stability_check ? n_total - n_train : 0;
    const Grid grid = fixed_gamma(exp.grid, exp.gamma);

    MethodOutcome o;
    o.label = std::string(method_name(method));
    o.method = method;
    o.p = exp.p;
    auto attempt = [&]() -> std::optional<TuneResult> {
      try {
        return grid_search(train, ts, grid);
      } catch (const Error&) {
        return std::nullopt;
      }
    };
    std::optional<TuneResult> tuned = attempt();
    if (!tuned && ts.stability_horizon > 0) {
      // Nothing survives the full horizon: fall back to training-window
      // stability and let the prediction report its own blowup.
      o.horizon_check_passed = false;
      ts.stability_horizon = 0;
      tuned = attempt();
    }
    LearnConfig lc = ts.learn;
    lc.gamma = tuned ? tuned->best.gamma : exp.gamma;
    LearnReport rep;
    const LearnedManifold lm = fit_manifold(cs, method, lc, &rep);
    o.energy = representation_energy(lm.manifold, lm.s_hat, cs.centered);
    o.am_iterations = rep.iterations;
    if (!tuned) {
      o.tuned = false;
      o.params.gamma = lc.gamma;
      o.tune_score = kInf;
      o.training_error = kInf;
      o.prediction_error = kInf;
      o.prediction_stable = false;
      res.methods.push_back(std::move(o));
      res.predictions.emplace_back();
      continue;
    }
    const ReducedModel model =
        train_rom(lm, cs, method, {tuned->best.lambda1, tuned->best.lambda2, tuned->best.lambda3});
    o.params = tuned->best;
    o.tune_score = tuned->score;

    Matrix pred;
    try {
      pred = predict_full(model, full.data.col(0), n_total - 1, icfg, default_encoding(method));
    } catch (const UnstableRomError& e) {
      o.prediction_stable = false;
      o.last_valid_time = e.last_valid_time();
    }
    if (o.prediction_stable) {
      o.training_error = relative_error(full.data.leftCols(n_train), pred.leftCols(n_train), cs.s_ref);
      const Index tail = n_total - n_train + 1;
      o.prediction_error = relative_error(full.data.rightCols(tail), pred.rightCols(tail), cs.s_ref);
    } else {
      // Training-window error is still defined when the blowup happens later.
      try {
        const Matrix tr = predict_full(model, full.data.col(0), n_train - 1, icfg, default_encoding(method));
        o.training_error = relative_error(full.data.leftCols(n_train), tr, cs.s_ref);
      } catch (const UnstableRomError&) {
        o.training_error = kInf;
      }
      o.prediction_error = kInf;
    }
    res.methods.push_back(std::move(o));
    res.predictions.push_back(std::move(pred));
  }
  return res;
}

// ----------------------------------------------------------------- recipes

namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void learn_from_json(const Json& j, LearnConfig& cfg) {
  read_opt(j, "r", cfg.r);
  read_opt(j, "q", cfg.q);
  read_opt(j, "p", cfg.p);
  read_opt(j, "gamma", cfg.gamma);
  read_opt(j, "am_tol", cfg.am_energy_tolerance);
  read_opt(j, "max_iter", cfg.am_max_outer_iterations);
}

template <typename F>
auto with_schema(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& ex) {
    throw Error(std::string(what) + " recipe schema mismatch: " + ex.what());
  }
}

}  // namespace

ToyExperiment toy_from_json(const Json& j) {
  return with_schema("toy3d", [&] {
    ToyExperiment e;
    if (j.contains("learn")) learn_from_json(j.at("learn"), e.learn);
    e.learn.validate();
    return e;
  });
}

AllenCahnExperiment allen_cahn_from_json(const Json& j) {
  return with_schema("allen-cahn", [&] {
    AllenCahnExperiment e;
    if (j.contains("fom")) {
      const Json& f = j.at("fom");
      read_opt(f, "kappa", e.fom.kappa);
      read_opt(f, "n", e.fom.n);
      read_opt(f, "t_record", e.fom.t_record);
      read_opt(f, "t_final", e.fom.t_final);
      read_opt(f, "internal_dt", e.fom.internal_dt);
    }
    read_opt(j, "train_mu", e.train_mu);
    read_opt(j, "n_test", e.n_test);
    if (j.contains("test_mu_range")) {
      const auto range = j.at("test_mu_range").get<std::vector<double>>();
      require(range.size() == 2, "test_mu_range needs two entries");
      e.test_mu_lo = range[0];
      e.test_mu_hi = range[1];
    }
    read_opt(j, "seed", e.seed);
    read_opt(j, "r", e.r);
    read_opt(j, "q", e.q);
    read_opt(j, "p_values", e.p_values);
    read_opt(j, "gamma", e.gamma);
    read_opt(j, "substeps", e.substeps);
    read_opt(j, "tie_tolerance", e.tie_tolerance);
    if (j.contains("grid")) e.grid = grid_from_json(j.at("grid"), e.grid);
    e.fom.validate();
    return e;
  });
}

KdvExperiment kdv_from_json(const Json& j) {
  return with_schema("kdv", [&] {
    KdvExperiment e;
    if (j.contains("fom")) {
      const Json& f = j.at("fom");
      read_opt(f, "alpha", e.fom.alpha);
      read_opt(f, "beta", e.fom.beta);
      read_opt(f, "n", e.fom.n);
      read_opt(f, "t_record", e.fom.t_record);
      read_opt(f, "t_final", e.fom.t_final);
      read_opt(f, "internal_dt", e.fom.internal_dt);
    }
    read_opt(j, "t_train", e.t_train);
    read_opt(j, "r", e.r);
    read_opt(j, "q", e.q);
    read_opt(j, "p", e.p);
    read_opt(j, "gamma", e.gamma);
    read_opt(j, "substeps", e.substeps);
    read_opt(j, "tie_tolerance", e.tie_tolerance);
    read_opt(j, "stability_check", e.stability_check);
    read_opt(j, "spectrum_modes", e.spectrum_modes);
    if (j.contains("methods")) {
      e.methods.clear();
      for (const auto& m : j.at("methods")) {
        const auto parsed = parse_method(m.get<std::string>());
        if (!parsed) throw Error("unknown method in recipe: " + m.get<std::string>());
        e.methods.push_back(*parsed);
      }
    }
    if (j.contains("grid")) e.grid = grid_from_json(j.at("grid"), e.grid);
    e.fom.validate();
    return e;
  });
}

Json reproduce(const Json& recipe, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const std::string name = with_schema("", [&] { return recipe.at("name").get<std::string>(); });
  fs::create_directories(out_dir);
  const fs::path summary_path = out_dir / "summary.json";
  if (fs::exists(summary_path)) {
    throw Error("output directory already holds a run: " + summary_path.string());
  }

  Json summary{{"name", name}, {"recipe", recipe}};
  if (name == "toy3d") {
    const ToyResult r = run_toy(toy_from_json(recipe));
    save_matrix(toy_manifold_data(), out_dir / "data.smat");
    summary["errors"] = {{"pod", r.pod_error}, {"mpod", r.mpod_error}, {"mam", r.mam_error}};
    summary["am_iterations"] = r.am_iterations;
    summary["am_converged"] = r.am_converged;
  } else if (name == "allen-cahn") {
    const AllenCahnResult r = run_allen_cahn(allen_cahn_from_json(recipe));
    summary["test_mu"] = r.test_mu;
    summary["energy_r"] = r.energy_r;
    summary["projection_error_rq"] = r.projection_error_rq;
    Json methods = Json::array();
    for (const auto& o : r.methods) methods.push_back(outcome_to_json(o));
    summary["methods"] = methods;
  } else if (name == "kdv") {
    const KdvExperiment exp = kdv_from_json(recipe);
    const KdvResult r = run_kdv(exp);
    save_matrix(r.reference, out_dir / "reference.smat");
    summary["energy_spectrum"] = r.energy_spectrum;
    summary["spectrum_modes"] = exp.spectrum_modes;
    summary["x"] = r.x;
    summary["t_record"] = exp.fom.t_record;
    summary["t_train"] = exp.t_train;
    Json methods = Json::array();
    for (std::size_t i = 0; i < r.methods.size(); ++i) {
      Json m = outcome_to_json(r.methods[i]);
      if (r.predictions[i].size() > 0) {
        const std::string file = "prediction_" + r.methods[i].label + ".smat";
        save_matrix(r.predictions[i], out_dir / file);
        m["prediction_file"] = file;
      }
      methods.push_back(std::move(m));
    }
    summary["methods"] = methods;
    summary["reference_file"] = "reference.smat";
  } else {
    throw Error("unknown recipe name: " + name);
  }
  write_json(summary, summary_path);
  if (name == "kdv") {
    std::ofstream csv(out_dir / "slices.csv");
    const double t_final = summary["recipe"].value("fom", Json::object()).value("t_final", 1.0);
    export_kdv_slices(out_dir, {summary["t_train"].get<double>(), t_final}, csv);
  }
  return summary;
}

void export_kdv_slices(const std::filesystem::path& run_dir, const std::vector<double>& times,
                       std::ostream& out) {
  const Json summary = read_json(run_dir / "summary.json");
  const std::vector<double> x = summary.at("x").get<std::vector<double>>();
  const double dt = summary.at("t_record").get<double>();
  const Matrix reference = load_matrix(run_dir / summary.at("reference_file").get<std::string>());
  std::vector<std::string> labels;
  std::vector<Matrix> preds;
  for (const auto& m : summary.at("methods")) {
    labels.push_back(m.at("label").get<std::string>());
    preds.push_back(m.contains("prediction_file")
                        ? load_matrix(run_dir / m.at("prediction_file").get<std::string>())
                        : Matrix());
  }
  out << "t,x,reference";
  for (const auto& l : labels) out << ',' << l;
  out << '\n' << std::setprecision(17);
  for (double t : times) {
    const Index col = static_cast<Index>(std::llround(t / dt));
    require(col >= 0 && col < reference.cols(), "requested time outside the run");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const Index row = static_cast<Index>(i);
      out << t << ',' << x[i] << ',' << reference(row, col);
      for (const Matrix& p : preds) {
        out << ',';
        if (p.size() > 0) {
          out << p(row, col);
        } else {
          out << "nan";
        }
      }
      out << '\n';
    }
  }
}

}  // namespace pmor
