#include "parevo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace parevo {

namespace {

double sampled_sup(const Grid& grid, const InitialData& f) {
  double m = 0.0;
  for (int k = 0; k < grid.size(); ++k) m = std::max(m, std::abs(f(grid.node(k))));
  return m;
}

double gradient_sup(const DiscreteField& u, const std::vector<int>& nodes) {
  double m = 0.0;
  for (int k : nodes) m = std::max(m, norm(u.gradient(k), u.grid->dim()));
  return m;
}

Eigen::MatrixXd sample_columns(const Grid& grid, const std::vector<InitialData>& batch) {
  Eigen::MatrixXd F(grid.size(), static_cast<int>(batch.size()));
  for (size_t j = 0; j < batch.size(); ++j)
    for (int k = 0; k < grid.size(); ++k) F(k, static_cast<int>(j)) = batch[j](grid.node(k));
  return F;
}

}  // namespace

double GradEstReport::median() const {
  if (kappa.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> v = kappa;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

GradEstReport gradient_constant(const EvolutionOperator& G, double s, double T, const std::vector<InitialData>& batch,
                                const GradientHypothesesReport* hypotheses, bool waive, int points) {
  GradEstReport r;
  r.s = s;
  r.T = T;
  r.batch = static_cast<int>(batch.size());
  r.waived = waive;
  if (batch.empty()) throw Error(ErrorKind::Precondition, "gradient constant needs at least one initial datum");
  if (!waive) {
    if (!hypotheses) throw Error(ErrorKind::Precondition, "gradient constant needs the gradient hypotheses report");
    if (!hypotheses->pass) throw Error(ErrorKind::Hypothesis, "gradient hypotheses failed");
  } else {
    r.warning = "gradient hypotheses waived (negative control)";
  }
  const Grid& grid = *G.grid();
  const double dt = G.propagator().scheme().dt;
  const double tau0 = 10.0 * dt;
  if (!(T - s > tau0)) throw Error(ErrorKind::Precondition, "interval too short for the kappa grid");
  std::vector<double> targets(points);
  for (int i = 0; i < points; ++i) targets[i] = tau0 * std::pow((T - s) / tau0, points == 1 ? 1.0 : i / (points - 1.0));

  const Eigen::MatrixXd F = sample_columns(grid, batch);
  std::vector<double> fsup(batch.size());
  for (size_t j = 0; j < batch.size(); ++j) fsup[j] = F.col(static_cast<int>(j)).cwiseAbs().maxCoeff();
  const std::vector<int> nodes = G.window_nodes();

  size_t next = 0;
  const double step = (T - s) / G.propagator().steps(s, T);
  G.propagator().run(F, s, T, [&](double t, const Eigen::MatrixXd& U) {
    while (next < targets.size() && t - s >= targets[next] - 0.5 * step) {
      double best = 0.0;
      for (int j = 0; j < U.cols(); ++j) {
        if (fsup[j] == 0.0) continue;
        const DiscreteField u{G.grid(), U.col(j), t};
        best = std::max(best, std::sqrt(t - s) * gradient_sup(u, nodes) / fsup[j]);
      }
      if (!std::isfinite(best)) throw Error(ErrorKind::Numerical, "non-finite gradient constant");
      // Several targets may fall on one step; keep each actual time once.
      if (r.times.empty() || r.times.back() != t - s) {
        r.times.push_back(t - s);
        r.kappa.push_back(best);
      }
      ++next;
    }
  });
  r.C = r.kappa.empty() ? 0.0 : *std::max_element(r.kappa.begin(), r.kappa.end());
  return r;
}

DecayReport long_time_decay(const EvolutionOperator& G, double s, const InitialData& f, double horizon, int points) {
  DecayReport r;
  r.c0 = G.coefficients().c0;
  if (r.c0 > 0.0 && horizon < 5.0 / r.c0) throw Error(ErrorKind::Precondition, "decay horizon must be >= 5 / c0");
  if (!(horizon > 1.0)) throw Error(ErrorKind::Precondition, "decay horizon must exceed 1");
  const std::vector<int> nodes = G.window_nodes();
  const double fsup = sampled_sup(*G.grid(), f);
  std::vector<double> targets(points);
  for (int i = 0; i < points; ++i) targets[i] = 1.0 + (horizon - 1.0) * i / (points - 1.0);
  DiscreteField u0 = DiscreteField::sample(G.grid(), f, s);
  size_t next = 0;
  const double step = horizon / G.propagator().steps(s, s + horizon);
  G.propagator().run(u0.values, s, s + horizon, [&](double t, const Eigen::MatrixXd& U) {
    while (next < targets.size() && t - s >= targets[next] - 0.5 * step) {
      if (!r.early_underflow) {
        const DiscreteField u{G.grid(), U.col(0), t};
        const double v = std::sqrt(t - s) * gradient_sup(u, nodes) / fsup;
        if (v < 1e-14)
          r.early_underflow = true;
        else if (r.times.empty() || r.times.back() != t - s) {
          r.times.push_back(t - s);
          r.values.push_back(v);
        }
      }
      ++next;
    }
  });
  if (r.times.size() < 2) throw Error(ErrorKind::Numerical, "too few samples for the decay fit");
  // Least squares for log v = a - rate * tau.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.times.size());
  for (size_t i = 0; i < r.times.size(); ++i) {
    const double x = r.times[i], y = std::log(r.values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  r.rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  r.pass = r.rate >= r.c0 - 0.1 * std::abs(r.c0) - (r.c0 == 0.0 ? 0.02 : 0.0);
  return r;
}

BernsteinMonitor bernstein_monitor(const EvolutionOperator& G, double s, double T, const InitialData& f, double a,
                                   bool waive_convexity, double tol) {
  if (!G.domain().convex() && !waive_convexity)
    throw Error(ErrorKind::Precondition, "the Bernstein monitor needs a convex domain (or an explicit waiver)");
  if (!(a > 0.0)) throw Error(ErrorKind::Config, "Bernstein parameter a must be positive");
  BernsteinMonitor m;
  m.a = a;
  m.tol = tol;
  m.implied_kappa = 1.0 / std::sqrt(a);
  m.min_z = std::numeric_limits<double>::infinity();
  const std::vector<int> nodes = G.window_nodes();
  const double fs = sampled_sup(*G.grid(), f);
  m.f_sup2 = fs * fs;
  DiscreteField u0 = DiscreteField::sample(G.grid(), f, s);
  G.propagator().run(u0.values, s, T, [&](double t, const Eigen::MatrixXd& U) {
    const DiscreteField u{G.grid(), U.col(0), t};
    double mz = 0.0;
    for (int k : nodes) {
      const Vec g = u.gradient(k);
      const double z = u.values[k] * u.values[k] + a * (t - s) * g.squaredNorm();
      mz = std::max(mz, z);
      m.min_z = std::min(m.min_z, z);
    }
    m.times.push_back(t - s);
    m.max_z.push_back(mz);
  });
  const double worst = m.max_z.empty() ? 0.0 : *std::max_element(m.max_z.begin(), m.max_z.end());
  m.pass = worst <= m.f_sup2 * (1.0 + tol);
  return m;
}

FlattenReport flatten_boundary_check(const EvolutionOperator& G, const Chart& chart, double t, double s,
                                     const InitialData& f, int samples) {
  if (G.boundary().dirichlet()) throw Error(ErrorKind::Precondition, "flattening check needs oblique boundary data");
  const Domain& domain = G.domain();
  const DiscreteField u = G.apply(t, s, f);
  const int d = domain.dim() - 1;
  const Grid& grid = *u.grid;
  const double k = 2.0 * grid.step(grid.kind() == GridKind::Polar ? 0 : d);
  FlattenReport rep;
  for (const Vec& p : boundary_samples(domain, chart.base_point(), 0.8 * chart.radius(), samples)) {
    const Vec y0 = chart.forward(p);
    Vec y1 = y0, y2 = y0;
    y1[d] += k;
    y2[d] += 2.0 * k;
    const Vec x1 = chart.inverse(y1), x2 = chart.inverse(y2);
    if (!chart.covers(p) || !chart.covers(x1) || !chart.covers(x2))
      throw Error(ErrorKind::Precondition, "chart does not cover the probe patch");
    const double w0 = u.interpolate(p), w1 = u.interpolate(x1), w2 = u.interpolate(x2);
    const double dw = (-3.0 * w0 + 4.0 * w1 - w2) / (2.0 * k);
    const Vec beta_bc = G.boundary().beta(t, p);
    // The chart may carry the opposite orientation of the normalized condition.
    const double orient = beta_bc.dot(domain.normal_at_projection(p)) * chart.rho(p) < 0.0 ? 1.0 : -1.0;
    const double omega = orient * G.boundary().gamma(t, p) / chart.rho(p);
    rep.max_omega = std::max(rep.max_omega, std::abs(omega));
    rep.residual = std::max(rep.residual, std::abs(dw + omega * w0));
    ++rep.samples;
  }
  return rep;
}

std::vector<TestFunction> random_bumps(const EvolutionOperator& G, int count, std::uint64_t seed, bool nonnegative) {
  std::mt19937_64 rng(seed);
  const Domain& domain = G.domain();
  const Window& K = G.policy().window;
  const int dim = domain.dim();
  std::vector<TestFunction> out;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  while (static_cast<int>(out.size()) < count) {
    TestFunction tf;
    tf.dim = dim;
    tf.radius = 0.5 + 1.0 * U(rng);
    tf.amplitude = (nonnegative ? 1.0 : (U(rng) < 0.5 ? -1.0 : 1.0)) * (0.2 + 0.8 * U(rng));
    if (G.grid()->kind() == GridKind::Polar) {
      const double r = K.lower[0] + tf.radius + 0.05 + (K.upper[0] - K.lower[0]) * 0.5 * U(rng);
      const double th = 2.0 * std::acos(-1.0) * U(rng);
      tf.center = domain.center() + r * Vec(std::cos(th), std::sin(th));
    } else {
      for (int a = 0; a < dim; ++a) {
        double lo = K.lower[a], hi = K.upper[a];
        if (domain.kind() == DomainKind::HalfSpace && a == dim - 1) lo = std::max(lo, tf.radius + 0.05);
        tf.center[a] = lo + (hi - lo) * U(rng);
      }
    }
    try {
      tf.check_support(domain);
    } catch (const Error&) {
      continue;
    }
    out.push_back(tf);
  }
  return out;
}

InitialData smoothed_sign(double width) {
  return [width](const Vec& x) { return std::erf(x[0] / width); };
}

void write_series_csv(const std::string& path, const std::string& xname, const std::string& yname,
                      const std::vector<double>& xs, const std::vector<double>& ys, const std::string& provenance) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path);
  if (!provenance.empty()) os << "# " << provenance << "\n";
  os.precision(17);
  os << xname << "," << yname << "\n";
  for (size_t i = 0; i < xs.size() && i < ys.size(); ++i) os << xs[i] << "," << ys[i] << "\n";
}

void write_svg_plot(const std::string& path, const std::string& title, const std::vector<double>& xs,
                    const std::vector<double>& ys, bool logx, double reference) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path);
  const double W = 640, H = 400, L = 60, Rm = 20, Tm = 40, B = 50;
  auto tx = [&](double x) { return logx ? std::log10(x) : x; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (size_t i = 0; i < xs.size(); ++i) {
    x0 = std::min(x0, tx(xs[i]));
    x1 = std::max(x1, tx(xs[i]));
    y1 = std::max(y1, ys[i]);
  }
  if (std::isfinite(reference)) y1 = std::max(y1, reference);
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  y1 *= 1.1;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - Rm); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - Tm - B); };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os.precision(4);
  os << "<text x=\"" << L << "\" y=\"" << H - B + 20 << "\" font-size=\"12\">" << (logx ? std::pow(10.0, x0) : x0)
     << "</text>\n";
  os << "<text x=\"" << W - Rm << "\" y=\"" << H - B + 20 << "\" font-size=\"12\" text-anchor=\"end\">"
     << (logx ? std::pow(10.0, x1) : x1) << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << Tm + 5 << "\" font-size=\"12\" text-anchor=\"end\">" << y1 << "</text>\n";
  os << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" font-size=\"12\" text-anchor=\"end\">" << y0 << "</text>\n";
  if (std::isfinite(reference))
    os << "<line x1=\"" << L << "\" y1=\"" << py(reference) << "\" x2=\"" << W - Rm << "\" y2=\"" << py(reference)
       << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) os << px(xs[i]) << "," << py(ys[i]) << " ";
  os << "\"/>\n</svg>\n";
}

}  // namespace parevo
