#include "jcmtomo/fock_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace jcmtomo {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

// sin(r t) / r with t already in 1/kHz; r -> 0 limit is t.
double sin_over(double r, double t) {
  const double x = r * t;
  if (std::abs(x) < 1e-8) return t * (1.0 - x * x / 6.0);
  return std::sin(x) / r;
}

Eigen::MatrixXcd propagate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho) {
  return u * rho * u.adjoint();
}

}  // namespace

const char* to_string(SpinConvention c) { return c == SpinConvention::pauli ? "pauli" : "half"; }

double JointState::hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }

double JointState::min_eigenvalue() const {
  const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double JointState::purity() const { return (rho * rho).trace().real(); }

double JointDistribution::total() const {
  CompensatedSum s;
  for (const auto& row : p) {
    s.add(row[0]);
    s.add(row[1]);
  }
  return s.value();
}

ProbTable JointDistribution::to_table() const {
  ProbTable t;
  for (std::size_t m = 0; m < p.size(); ++m) {
    t.entries.push_back({static_cast<int>(m), 1, p[m][0]});
    t.entries.push_back({static_cast<int>(m), -1, p[m][1]});
  }
  t.normalized = true;
  return t;
}

JointState initial_state(const BlochVector& s, const JcmConfig& cfg) {
  cfg.validate();
  if (!s.is_physical(1e-12))
    throw UnphysicalBloch(fmt::format("Bloch vector norm {:.17g} exceeds 1", s.norm()));

  JointState st;
  st.cutoff = cfg.cutoff();
  const int levels = st.levels();

  // Truncated coherent state; magnitudes via Poisson weights, phase from alpha.
  const double phase = std::arg(cfg.alpha);
  Eigen::VectorXcd psi(levels);
  for (int n = 0; n < levels; ++n)
    psi(n) = std::sqrt(poisson_weight(n, cfg.nbar())) * std::polar(1.0, n * phase);
  psi /= psi.norm();

  Eigen::Matrix2cd atom;
  atom << 1.0 + s.z, cd(s.x, -s.y),
          cd(s.x, s.y), 1.0 - s.z;
  atom *= 0.5;

  const Eigen::MatrixXcd field = psi * psi.adjoint();
  st.rho = Eigen::MatrixXcd::Zero(2 * levels, 2 * levels);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) st.rho.block(i * levels, j * levels, levels, levels) = atom(i, j) * field;
  return st;
}

JointState evolve_analytic(const JointState& state, const JcmConfig& cfg, double t) {
  cfg.validate();
  const int N = state.cutoff;
  const double ts = t * kPhaseScale;
  const double g = cfg.g;
  const double half_delta = 0.5 * cfg.delta;

  // phi = g^2 n + delta^2/4; the |+> block uses sqrt(phi + g^2) at photon n,
  // the |-> block uses sqrt(phi) at photon n.
  const auto root_plus = [&](int n) { return std::sqrt(g * g * (n + 1) + half_delta * half_delta); };
  const auto root_minus = [&](int n) { return std::sqrt(g * g * n + half_delta * half_delta); };
  const auto mode_phase = [&](double k) { return std::polar(1.0, -cfg.nu * ts * k); };

  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(2 * (N + 1), 2 * (N + 1));
  for (int n = 0; n <= N; ++n) {
    const double rp = root_plus(n);
    const double rm = root_minus(n);
    const auto ip = state.index(0, n);
    const auto im = state.index(1, n);
    u(ip, ip) = mode_phase(n + 0.5) * (std::cos(rp * ts) - kI * half_delta * sin_over(rp, ts));
    u(im, im) = mode_phase(n - 0.5) * (std::cos(rm * ts) + kI * half_delta * sin_over(rm, ts));
    if (n < N) {
      const double amp = std::sqrt(n + 1.0);
      const auto jm = state.index(1, n + 1);
      // |+><-| a : <+,n| U |-,n+1>
      u(ip, jm) = -kI * g * mode_phase(n + 0.5) * sin_over(rp, ts) * amp;
      // |-><+| a^dag : <-,n+1| U |+,n>, with phi evaluated at n+1
      u(jm, ip) = -kI * g * mode_phase(n + 0.5) * sin_over(root_minus(n + 1), ts) * amp;
    }
  }
  JointState out = state;
  out.rho = propagate(u, state.rho);
  return out;
}

Eigen::MatrixXcd hamiltonian(const JcmConfig& cfg, int cutoff, SpinConvention convention) {
  const double kappa = spin_scale(convention);
  const int levels = cutoff + 1;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * levels, 2 * levels);
  for (int n = 0; n < levels; ++n) {
    h(n, n) = kappa * cfg.omega() + cfg.nu * n;
    h(levels + n, levels + n) = -kappa * cfg.omega() + cfg.nu * n;
    if (n + 1 < levels) {
      const double c = cfg.g * std::sqrt(n + 1.0);
      h(n, levels + n + 1) = c;
      h(levels + n + 1, n) = c;
    }
  }
  return h;
}

JointState evolve_numeric(const JointState& state, const JcmConfig& cfg, double t, SpinConvention convention) {
  cfg.validate();
  const Eigen::MatrixXcd h = hamiltonian(cfg, state.cutoff, convention);
  const double ts = t * kPhaseScale;
  const int N = state.cutoff;
  const auto dim = h.rows();

  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(dim, dim);
  // Singlets: |-,0> and the unpartnered |+,N>.
  const auto lo = state.index(1, 0);
  const auto top = state.index(0, N);
  u(lo, lo) = std::polar(1.0, -h(lo, lo).real() * ts);
  u(top, top) = std::polar(1.0, -h(top, top).real() * ts);

  // Two-level blocks {|+,n>, |-,n+1>}.
  for (int n = 0; n < N; ++n) {
    const Eigen::Index idx[2] = {state.index(0, n), state.index(1, n + 1)};
    Eigen::Matrix2d blk;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) blk(i, j) = h(idx[i], idx[j]).real();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(blk);
    const Eigen::Matrix2d& v = es.eigenvectors();
    Eigen::Matrix2cd phases = Eigen::Matrix2cd::Zero();
    for (int k = 0; k < 2; ++k) phases(k, k) = std::polar(1.0, -es.eigenvalues()(k) * ts);
    const Eigen::Matrix2cd ub = v.cast<cd>() * phases * v.transpose().cast<cd>();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) u(idx[i], idx[j]) = ub(i, j);
  }
  JointState out = state;
  out.rho = propagate(u, state.rho);
  return out;
}

MomentVector oracle_moments(const JointState& state, SpinConvention convention) {
  const double kappa = spin_scale(convention);
  CompensatedSum sz, n_avg, szn;
  for (int n = 0; n <= state.cutoff; ++n) {
    const double up = state.rho(state.index(0, n), state.index(0, n)).real();
    const double down = state.rho(state.index(1, n), state.index(1, n)).real();
    sz.add(kappa * (up - down));
    n_avg.add(n * (up + down));
    szn.add(kappa * n * (up - down));
  }
  return {sz.value(), n_avg.value(), szn.value()};
}

JointDistribution joint_distribution(const JointState& state) {
  JointDistribution d;
  d.p.resize(static_cast<std::size_t>(state.cutoff) + 1);
  for (int n = 0; n <= state.cutoff; ++n) {
    // Rounding can leave diagonal entries a few ulp below zero.
    d.p[static_cast<std::size_t>(n)] = {std::max(0.0, state.rho(state.index(0, n), state.index(0, n)).real()),
                                        std::max(0.0, state.rho(state.index(1, n), state.index(1, n)).real())};
  }
  return d;
}

CountRecord sample_counts(const JointDistribution& dist, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw InvalidArgument("shots must be >= 1");
  const ProbTable table = dist.to_table();
  if (table.entries.empty()) throw EmptySupport("joint distribution is empty");

  std::vector<double> cdf(table.entries.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc.add(table.entries[i].value);
    cdf[i] = acc.value();
  }
  const double total = cdf.back();
  if (!(total > 0.0)) throw EmptySupport("joint distribution has zero mass");

  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> counts(cdf.size(), 0);
  for (std::int64_t s = 0; s < shots; ++s) {
    // 53 high bits -> uniform in [0, 1), independent of the standard library's distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    ++counts[static_cast<std::size_t>(it - cdf.begin())];
  }

  CountRecord rec;
  for (std::size_t i = 0; i < counts.size(); ++i)
    rec.entries.push_back({table.entries[i].m, table.entries[i].a, static_cast<double>(counts[i])});
  return rec;
}

double ConventionDeviation::max() const { return *std::max_element(per_moment.begin(), per_moment.end()); }

std::string CalibrationReport::summary() const {
  std::ostringstream os;
  const auto line = [&](const ConventionDeviation& d) {
    os << fmt::format("  {:<6} max|dev| sz={:.3e} n={:.3e} szn={:.3e}\n", to_string(d.convention), d.per_moment[0],
                      d.per_moment[1], d.per_moment[2]);
  };
  line(pauli);
  line(half);
  os << "  convention: " << (matched ? to_string(chosen) : "none") << (discriminating ? "" : " (grid does not discriminate)")
     << fmt::format(" [tolerance {:.1e}]", tolerance);
  return os.str();
}

CalibrationReport calibration_report(const JcmConfig& cfg, const TimeGrid& grid, const SeriesEvaluator& series,
                                     double tol) {
  cfg.validate();
  const std::vector<double> times = grid.points();
  const BlochVector basis[4] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

  CalibrationReport rep;
  rep.tolerance = tol;
  rep.pauli.convention = SpinConvention::pauli;
  rep.half.convention = SpinConvention::half;

  for (const auto& e : basis) {
    const JointState s0 = initial_state(e, cfg);
    for (double t : times) {
      const JointState st = evolve_analytic(s0, cfg, t);
      for (ConventionDeviation* dev : {&rep.pauli, &rep.half}) {
        const double kappa = spin_scale(dev->convention);
        const MomentVector o = oracle_moments(st, dev->convention);
        const MomentVector a = series(e * kappa, cfg, t);
        dev->per_moment[0] = std::max(dev->per_moment[0], std::abs(a.sz - o.sz));
        dev->per_moment[1] = std::max(dev->per_moment[1], std::abs(a.n - o.n));
        dev->per_moment[2] = std::max(dev->per_moment[2], std::abs(a.szn - o.szn));
      }
    }
  }

  const bool pauli_ok = rep.pauli.max() < tol;
  const bool half_ok = rep.half.max() < tol;
  rep.matched = pauli_ok || half_ok;
  rep.discriminating = !(pauli_ok && half_ok);
  if (pauli_ok && !half_ok)
    rep.chosen = SpinConvention::pauli;
  else if (half_ok && !pauli_ok)
    rep.chosen = SpinConvention::half;
  else
    rep.chosen = rep.pauli.max() < rep.half.max() ? SpinConvention::pauli : SpinConvention::half;
  return rep;
}

CalibrationReport calibration_report(const JcmConfig& cfg, const TimeGrid& grid, SeriesForm form, double tol) {
  return calibration_report(
      cfg, grid, [form](const BlochVector& s, const JcmConfig& c, double t) { return series_moments(s, c, t, form); },
      tol);
}

CalibrationReport calibrate_convention(const JcmConfig& cfg, const TimeGrid& grid, SeriesForm form, double tol) {
  CalibrationReport rep = calibration_report(cfg, grid, form, tol);
  if (!rep.matched) throw NoConventionMatches("no spin convention reproduces the series:\n" + rep.summary(), rep);
  return rep;
}

}  // namespace jcmtomo
