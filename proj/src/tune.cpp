#include "pmor/tune.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <tuple>

namespace pmor {

std::string_view method_name(RomMethod m) {
  switch (m) {
    case RomMethod::OpInf: return "opinf";
    case RomMethod::Mpod: return "mpod";
    case RomMethod::Mam: return "mam";
  }
  return "unknown";
}

std::optional<RomMethod> parse_method(std::string_view name) {
  if (name == "opinf") return RomMethod::OpInf;
  if (name == "mpod") return RomMethod::Mpod;
  if (name == "mam") return RomMethod::Mam;
  return std::nullopt;
}

InitialEncoding default_encoding(RomMethod m) {
  return m == RomMethod::Mam ? InitialEncoding::Nls : InitialEncoding::Linear;
}

LearnedManifold fit_manifold(const CenteredSnapshots& cs, RomMethod method, const LearnConfig& cfg,
                             LearnReport* report) {
  switch (method) {
    case RomMethod::OpInf: {
      LearnConfig linear = cfg;
      linear.q = 0;
      linear.gamma = 0.0;
      return learn_pod(cs, linear);
    }
    case RomMethod::Mpod: return learn_pod(cs, cfg);
    case RomMethod::Mam: return learn_am(cs, cfg, std::nullopt, report);
  }
  throw Error("unknown method");
}

RegressionProblem build_regression(const LearnedManifold& lm, const CenteredSnapshots& cs,
                                   RomMethod method, const Lambdas& lambdas) {
  const int r = static_cast<int>(lm.manifold.r());
  const Matrix derivs = time_derivatives(lm.s_hat, cs.times, cs.trajectory_breaks);
  std::optional<MonomialTable> table;
  if (method != RomMethod::OpInf && lm.manifold.q() > 0) table = ghat_table(r, lm.manifold.p);
  return assemble(lm.s_hat, derivs, table, QuadIndexing(r), lambdas);
}

ReducedModel train_rom(const LearnedManifold& lm, const CenteredSnapshots& cs, RomMethod method,
                       const Lambdas& lambdas) {
  return ReducedModel(solve(build_regression(lm, cs, method, lambdas)), lm.manifold);
}

Matrix predict_trajectories(const ReducedModel& model, const SnapshotSet& set,
                            InitialEncoding ic, const IntegrationConfig& base) {
  Matrix out(set.n(), set.k());
  for (const auto& [begin, end] : set.trajectory_ranges()) {
    IntegrationConfig cfg = base;
    cfg.t0 = set.times[static_cast<std::size_t>(begin)];
    if (end - begin > 1) {
      cfg.dt_output = set.times[static_cast<std::size_t>(begin + 1)] - cfg.t0;
    }
    out.middleCols(begin, end - begin) =
        predict_full(model, set.data.col(begin), end - begin - 1, cfg, ic);
  }
  return out;
}

std::vector<double> Grid::log_points(double lo, double hi, int count) {
  require(lo > 0.0 && hi >= lo && count >= 1, "invalid logarithmic grid");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (count - 1)));
  return out;
}

Grid Grid::default_grid() {
  Grid g;
  const auto pts = log_points(1e-6, 1e3, 10);
  g.gamma_values = {0.0};
  g.gamma_values.insert(g.gamma_values.end(), pts.begin(), pts.end());
  g.lambda1_values = pts;
  g.lambda2_values = pts;
  g.lambda3_values = pts;
  return g;
}

void Grid::validate() const {
  for (const auto* v : {&gamma_values, &lambda1_values, &lambda2_values, &lambda3_values}) {
    require(!v->empty(), "grid lists must be nonempty");
    for (double x : *v) require(std::isfinite(x) && x >= 0.0, "grid entries must be nonnegative");
  }
}

namespace {

// Lexicographic (lambda3, lambda2, lambda1, gamma): larger means more regularized.
bool more_regularized(const Hyperparameters& a, const Hyperparameters& b) {
  return std::tie(a.lambda3, a.lambda2, a.lambda1, a.gamma) >
         std::tie(b.lambda3, b.lambda2, b.lambda1, b.gamma);
}

}  // namespace

TuneResult grid_search(const SnapshotSet& training, const TuneSettings& settings, const Grid& grid_in) {
  grid_in.validate();
  Grid grid = grid_in;
  if (settings.method == RomMethod::OpInf) {
    grid.gamma_values = {0.0};
    grid.lambda3_values = {0.0};
  }
  const CenteredSnapshots cs = center(training, settings.centering);
  const double denom = cs.centered.norm();
  require(denom > 0.0, "degenerate data");
  const InitialEncoding ic = default_encoding(settings.method);
  IntegrationConfig icfg;
  icfg.substeps = settings.substeps;
  icfg.blowup_threshold = settings.blowup_threshold;

  const std::size_t n1 = grid.lambda1_values.size();
  const std::size_t n2 = grid.lambda2_values.size();
  const std::size_t n3 = grid.lambda3_values.size();
  const std::size_t per_gamma = n1 * n2 * n3;

  TuneResult result;
  result.table.resize(grid.gamma_values.size() * per_gamma);
  for (std::size_t ig = 0; ig < grid.gamma_values.size(); ++ig) {
    LearnConfig cfg = settings.learn;
    cfg.gamma = grid.gamma_values[ig];
    std::optional<RegressionProblem> base;
    std::optional<LearnedManifold> lm;
    try {
      lm = fit_manifold(cs, settings.method, cfg);
      base = build_regression(*lm, cs, settings.method);
    } catch (const Error&) {
      // A failed fit leaves every cell of this gamma unstable.
    }
    const double coord_bound =
        lm && std::isfinite(settings.growth_limit)
            ? settings.growth_limit * lm->s_hat.cwiseAbs().maxCoeff()
            : std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(dynamic)
    for (std::size_t cell = 0; cell < per_gamma; ++cell) {
      const std::size_t i1 = cell / (n2 * n3);
      const std::size_t i2 = (cell / n3) % n2;
      const std::size_t i3 = cell % n3;
      TuneEntry e;
      e.params = {grid.gamma_values[ig], grid.lambda1_values[i1], grid.lambda2_values[i2],
                  grid.lambda3_values[i3]};
      e.stable = false;
      e.score = std::numeric_limits<double>::infinity();
      if (base) {
        try {
          RegressionProblem prob = *base;
          prob.lambdas = {e.params.lambda1, e.params.lambda2, e.params.lambda3};
          const ReducedModel model(solve(prob), lm->manifold);
          double err2 = 0.0;
          bool bounded = true;
          for (const auto& [begin, end] : training.trajectory_ranges()) {
            IntegrationConfig cfg = icfg;
            cfg.t0 = training.times[static_cast<std::size_t>(begin)];
            if (end - begin > 1) cfg.dt_output = training.times[static_cast<std::size_t>(begin + 1)] - cfg.t0;
            const Index len = end - begin;
            const Matrix traj = integrate(model, encode_initial(model, training.data.col(begin), ic),
                                          len - 1 + settings.stability_horizon, cfg);
            if (traj.cwiseAbs().maxCoeff() > coord_bound) bounded = false;
            err2 += (training.data.middleCols(begin, len) -
                     decode_columns(model.manifold(), traj.leftCols(len)))
                        .squaredNorm();
          }
          e.score = std::sqrt(err2) / denom;
          e.stable = bounded && std::isfinite(e.score);
          if (!e.stable) e.score = std::numeric_limits<double>::infinity();
        } catch (const Error&) {
          // Unstable integration or ill-posed regression.
        }
      }
      result.table[ig * per_gamma + cell] = e;
    }
  }

  double min_score = std::numeric_limits<double>::infinity();
  for (const TuneEntry& e : result.table) {
    if (e.stable) min_score = std::min(min_score, e.score);
  }
  if (!std::isfinite(min_score)) throw Error("no stable model in grid");
  const double cutoff = min_score * (1.0 + settings.tie_tolerance);
  const TuneEntry* best = nullptr;
  for (const TuneEntry& e : result.table) {
    if (!e.stable || e.score > cutoff) continue;
    if (!best || more_regularized(e.params, best->params)) best = &e;
  }
  result.best = best->params;
  result.score = best->score;
  return result;
}

void write_tune_table(const TuneResult& result, std::ostream& out) {
  out << "gamma,lambda1,lambda2,lambda3,error,stable\n";
  out << std::setprecision(17);
  for (const TuneEntry& e : result.table) {
    out << e.params.gamma << ',' << e.params.lambda1 << ',' << e.params.lambda2 << ','
        << e.params.lambda3 << ',';
    if (e.stable) {
      out << e.score;
    } else {
      out << "inf";
    }
    out << ',' << (e.stable ? 1 : 0) << '\n';
  }
}

}  // namespace pmor
