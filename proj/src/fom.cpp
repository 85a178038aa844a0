#include "pmor/fom.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <fftw3.h>

namespace pmor {

namespace {

using Complex = std::complex<double>;

Index steps_per_record(double t_record, double dt) {
  const double ratio = t_record / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw Error("internal_dt must divide t_record");
  }
  return static_cast<Index>(rounded);
}

Index record_count(double t_final, double t_record) {
  const double ratio = t_final / t_record;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw Error("t_record must divide the final time");
  }
  return static_cast<Index>(rounded);
}

std::vector<double> record_times(Index count, double t_record) {
  std::vector<double> t(static_cast<std::size_t>(count + 1));
  for (Index j = 0; j <= count; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j) * t_record;
  return t;
}

}  // namespace

Matrix toy_manifold_data() {
  constexpr int m = 41;
  Matrix out(3, m * m);
  for (int ix = 0; ix < m; ++ix) {
    for (int iy = 0; iy < m; ++iy) {
      const double x = 0.1 * ix;
      const double y = 0.1 * iy;
      out.col(ix * m + iy) << x, y, std::sin(x) * std::cos(y);
    }
  }
  return out;
}

// ---------------------------------------------------------------- Allen-Cahn

void AllenCahnConfig::validate() const {
  require(kappa > 0.0, "kappa must be positive");
  require(n >= 8, "Allen-Cahn grid needs at least 8 points");
  require(internal_dt > 0.0 && t_record > 0.0 && t_final > 0.0, "time parameters must be positive");
  steps_per_record(t_record, internal_dt);
  record_count(t_final, t_record);
}

std::vector<double> AllenCahnConfig::grid() const {
  std::vector<double> x(static_cast<std::size_t>(n));
  const double h = 2.0 / (n - 1);
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = -1.0 + h * i;
  x.back() = 1.0;
  return x;
}

SnapshotSet allen_cahn_simulate(const AllenCahnConfig& cfg) {
  cfg.validate();
  const std::vector<double> x = cfg.grid();
  const int n = cfg.n;
  const double h = 2.0 / (n - 1);
  const double dt = cfg.internal_dt;
  const Index per = steps_per_record(cfg.t_record, dt);
  const Index records = record_count(cfg.t_final, cfg.t_record);

  Vector s(n);
  for (int i = 0; i < n; ++i) {
    const double xi = x[static_cast<std::size_t>(i)];
    s(i) = cfg.mu * xi + (1.0 - cfg.mu) * std::sin(-1.5 * std::numbers::pi * xi);
  }
  s(0) = -1.0;
  s(n - 1) = 1.0;

  // (I - dt kappa D2) on the interior: constant tridiagonal, factor once.
  const int m = n - 2;
  const double ratio = cfg.kappa * dt / (h * h);
  const double diag = 1.0 + 2.0 * ratio;
  const double off = -ratio;
  std::vector<double> c_prime(static_cast<std::size_t>(m)), denom(static_cast<std::size_t>(m));
  denom[0] = diag;
  c_prime[0] = off / diag;
  for (int i = 1; i < m; ++i) {
    denom[static_cast<std::size_t>(i)] = diag - off * c_prime[static_cast<std::size_t>(i - 1)];
    c_prime[static_cast<std::size_t>(i)] = off / denom[static_cast<std::size_t>(i)];
  }

  Matrix out(n, records + 1);
  out.col(0) = s;
  std::vector<double> rhs(static_cast<std::size_t>(m));
  for (Index rec = 1; rec <= records; ++rec) {
    for (Index step = 0; step < per; ++step) {
      for (int i = 0; i < m; ++i) {
        const double v = s(i + 1);
        rhs[static_cast<std::size_t>(i)] = v + dt * (v - v * v * v);
      }
      rhs[0] += ratio * s(0);
      rhs[static_cast<std::size_t>(m - 1)] += ratio * s(n - 1);
      // Thomas sweep.
      rhs[0] /= denom[0];
      for (int i = 1; i < m; ++i) {
        rhs[static_cast<std::size_t>(i)] =
            (rhs[static_cast<std::size_t>(i)] - off * rhs[static_cast<std::size_t>(i - 1)]) /
            denom[static_cast<std::size_t>(i)];
      }
      for (int i = m - 2; i >= 0; --i) {
        rhs[static_cast<std::size_t>(i)] -= c_prime[static_cast<std::size_t>(i)] * rhs[static_cast<std::size_t>(i + 1)];
      }
      for (int i = 0; i < m; ++i) s(i + 1) = rhs[static_cast<std::size_t>(i)];
    }
    if (!s.allFinite()) {
      throw Error("Allen-Cahn solver produced non-finite state at t = " +
                  std::to_string(static_cast<double>(rec) * cfg.t_record));
    }
    out.col(rec) = s;
  }
  return SnapshotSet::make(std::move(out), record_times(records, cfg.t_record), {}, {cfg.mu});
}

Matrix lift(const Matrix& s) {
  Matrix out(2 * s.rows(), s.cols());
  out.topRows(s.rows()) = s;
  out.bottomRows(s.rows()) = s.array().square().matrix();
  return out;
}

// ----------------------------------------------------------------------- KdV

void KdvConfig::validate() const {
  require(n >= 8 && (n & (n - 1)) == 0, "KdV grid size must be a power of two");
  require(beta != 0.0, "beta must be nonzero");
  require(internal_dt > 0.0 && t_record > 0.0 && t_final > 0.0, "time parameters must be positive");
  steps_per_record(t_record, internal_dt);
  record_count(t_final, t_record);
}

std::vector<double> KdvConfig::grid() const {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(i)] = -std::numbers::pi + 2.0 * std::numbers::pi * i / n;
  }
  return x;
}

double kdv_soliton_speed(const KdvConfig& cfg) {
  // 24 = 12 beta w^2 / alpha with the configured amplitude fixes w^2.
  const double w2 = 24.0 * cfg.alpha / (12.0 * cfg.beta);
  return cfg.alpha * 1.0 + 4.0 * cfg.beta * w2;
}

namespace {

class KdvStepper {
 public:
  explicit KdvStepper(const KdvConfig& cfg)
      : n_(cfg.n), modes_(cfg.n / 2 + 1), real_(fftw_alloc_real(static_cast<std::size_t>(n_))),
        spec_(fftw_alloc_complex(static_cast<std::size_t>(modes_))) {
    forward_ = fftw_plan_dft_r2c_1d(n_, real_, spec_, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_1d(n_, spec_, real_, FFTW_ESTIMATE);
    const double h = cfg.internal_dt;
    const std::size_t nm = static_cast<std::size_t>(modes_);
    e_.resize(nm);
    e2_.resize(nm);
    q_.resize(nm);
    f1_.resize(nm);
    f2_.resize(nm);
    f3_.resize(nm);
    g_.resize(nm);
    // Contour averages around each h L_k. L is imaginary here, so the full
    // circle is needed (the half-circle shortcut assumes real L).
    constexpr int kContour = 64;
    const double cutoff = (2.0 / 3.0) * (n_ / 2.0);
    for (std::size_t k = 0; k < nm; ++k) {
      const double kk = static_cast<double>(k);
      const Complex lin(0.0, cfg.beta * kk * kk * kk);
      e_[k] = std::exp(h * lin);
      e2_[k] = std::exp(0.5 * h * lin);
      Complex q(0), a(0), b(0), c(0);
      for (int j = 1; j <= kContour; ++j) {
        const Complex z = h * lin + std::polar(1.0, 2.0 * std::numbers::pi * (j - 0.5) / kContour);
        const Complex ez = std::exp(z);
        const Complex z3 = z * z * z;
        q += (std::exp(0.5 * z) - 1.0) / z;
        a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
        b += (2.0 + z + ez * (-2.0 + z)) / z3;
        c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
      }
      q_[k] = h * q / double(kContour);
      f1_[k] = h * a / double(kContour);
      f2_[k] = h * b / double(kContour);
      f3_[k] = h * c / double(kContour);
      // -(alpha/2) d/dx (s^2), dealiased; the 1/n of the inverse FFT is folded in.
      g_[k] = kk < cutoff ? Complex(0.0, -0.5 * cfg.alpha * kk) : Complex(0.0);
    }
  }
  ~KdvStepper() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  KdvStepper(const KdvStepper&) = delete;
  KdvStepper& operator=(const KdvStepper&) = delete;

  std::vector<Complex> to_spectral(const Vector& s) {
    for (int i = 0; i < n_; ++i) real_[i] = s(i);
    fftw_execute(forward_);
    std::vector<Complex> v(static_cast<std::size_t>(modes_));
    for (int k = 0; k < modes_; ++k) v[static_cast<std::size_t>(k)] = {spec_[k][0], spec_[k][1]};
    return v;
  }

  Vector to_physical(const std::vector<Complex>& v) {
    load(v);
    fftw_execute(backward_);
    Vector s(n_);
    for (int i = 0; i < n_; ++i) s(i) = real_[i] / n_;
    return s;
  }

  void step(std::vector<Complex>& v) {
    const std::size_t nm = v.size();
    nonlinear(v, nv_);
    for (std::size_t k = 0; k < nm; ++k) a_[k] = e2_[k] * v[k] + q_[k] * nv_[k];
    nonlinear(a_, na_);
    for (std::size_t k = 0; k < nm; ++k) b_[k] = e2_[k] * v[k] + q_[k] * na_[k];
    nonlinear(b_, nb_);
    for (std::size_t k = 0; k < nm; ++k) c_[k] = e2_[k] * a_[k] + q_[k] * (2.0 * nb_[k] - nv_[k]);
    nonlinear(c_, nc_);
    for (std::size_t k = 0; k < nm; ++k) {
      v[k] = e_[k] * v[k] + nv_[k] * f1_[k] + 2.0 * (na_[k] + nb_[k]) * f2_[k] + nc_[k] * f3_[k];
    }
  }

  void reserve() {
    const std::size_t nm = static_cast<std::size_t>(modes_);
    for (auto* w : {&nv_, &na_, &nb_, &nc_, &a_, &b_, &c_}) w->resize(nm);
  }

 private:
  void load(const std::vector<Complex>& v) {
    for (int k = 0; k < modes_; ++k) {
      spec_[k][0] = v[static_cast<std::size_t>(k)].real();
      spec_[k][1] = v[static_cast<std::size_t>(k)].imag();
    }
  }

  void nonlinear(const std::vector<Complex>& v, std::vector<Complex>& out) {
    load(v);
    fftw_execute(backward_);
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) {
      const double u = real_[i] * scale;
      real_[i] = u * u;
    }
    fftw_execute(forward_);
    for (int k = 0; k < modes_; ++k) {
      out[static_cast<std::size_t>(k)] = g_[static_cast<std::size_t>(k)] * Complex(spec_[k][0], spec_[k][1]);
    }
  }

  int n_;
  int modes_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan backward_;
  std::vector<Complex> e_, e2_, q_, f1_, f2_, f3_, g_;
  std::vector<Complex> nv_, na_, nb_, nc_, a_, b_, c_;
};

}  // namespace

SnapshotSet kdv_simulate(const KdvConfig& cfg) {
  cfg.validate();
  const std::vector<double> x = cfg.grid();
  const Index per = steps_per_record(cfg.t_record, cfg.internal_dt);
  const Index records = record_count(cfg.t_final, cfg.t_record);

  Vector s0(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const double sech = 1.0 / std::cosh(std::sqrt(8.0) * x[static_cast<std::size_t>(i)]);
    s0(i) = 1.0 + 24.0 * sech * sech;
  }

  KdvStepper stepper(cfg);
  stepper.reserve();
  std::vector<Complex> v = stepper.to_spectral(s0);
  Matrix out(cfg.n, records + 1);
  out.col(0) = s0;
  for (Index rec = 1; rec <= records; ++rec) {
    for (Index step = 0; step < per; ++step) stepper.step(v);
    Vector s = stepper.to_physical(v);
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > 1e6) {
      throw Error("KdV solver blew up at t = " + std::to_string(static_cast<double>(rec) * cfg.t_record));
    }
    out.col(rec) = s;
  }
  return SnapshotSet::make(std::move(out), record_times(records, cfg.t_record));
}

std::vector<double> draw_uniform(std::uint64_t seed, int count, double lo, double hi) {
  require(count >= 0 && hi >= lo, "invalid uniform draw request");
  std::mt19937_64 gen(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    // 53 random bits mapped to [0, 1); spelled out so the stream does not
    // depend on the standard library's distribution implementation.
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    out.push_back(lo + (hi - lo) * u);
  }
  return out;
}

}  // namespace pmor
