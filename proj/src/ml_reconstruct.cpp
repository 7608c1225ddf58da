#include "jcmtomo/ml_reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace jcmtomo {

Eigen::Vector3d u_vector(const ProbTable& p) {
  CompensatedSum sa, sm, sam;
  for (const auto& e : p.entries) {
    sa.add(e.a * e.value);
    sm.add(e.m * e.value);
    sam.add(e.a * e.m * e.value);
  }
  return {sa.value(), sm.value(), sam.value()};
}

double bloch_constraint_value(const ProbTable& p, const DesignSystem& design) {
  const Eigen::Vector3d v = u_vector(p) - design.b;
  return v.dot(design.constraint_matrix() * v);
}

BlochVector implied_bloch(const ProbTable& p, const DesignSystem& design) {
  const Eigen::Vector3d s = design.inverse() * (u_vector(p) - design.b);
  return {s(0), s(1), s(2)};
}

double log_likelihood(const CountRecord& nu, const ProbTable& p) {
  if (nu.entries.size() != p.entries.size()) throw SupportMismatch("frequency and probability supports differ");
  CompensatedSum s;
  for (std::size_t i = 0; i < nu.entries.size(); ++i)
    if (nu.entries[i].value > 0.0) s.add(nu.entries[i].value * std::log(p.entries[i].value));
  return s.value();
}

double distance_delta(const CountRecord& nu, const ProbTable& p) {
  std::map<std::pair<int, int>, double> probs;
  for (const auto& e : p.entries) probs[{e.m, e.a}] = e.value;
  if (probs.size() != p.entries.size() || nu.entries.size() != p.entries.size())
    throw SupportMismatch("frequency and probability supports differ");
  CompensatedSum s;
  for (const auto& e : nu.entries) {
    const auto it = probs.find({e.m, e.a});
    if (it == probs.end()) throw SupportMismatch("outcome (m=" + std::to_string(e.m) + ", a=" + std::to_string(e.a) +
                                                 ") missing from probability table");
    s.add(std::sqrt(e.value * it->second));
  }
  return std::clamp(1.0 - s.value(), 0.0, 1.0);
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Concave program  max  obj(p) - mu q(p) - eps |p|^2  on the simplex, where
// q(p) = (A p - B)^T C (A p - B) and obj is the log-likelihood (or the
// negated relative entropy).
class Problem {
 public:
  Problem(const CountRecord& nu, const DesignSystem& design, const MlOptions& opts)
      : opts_(opts), c_(design.constraint_matrix()), b_(design.b) {
    const auto k = static_cast<Eigen::Index>(nu.entries.size());
    nu_.resize(k);
    a_.resize(3, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto& e = nu.entries[static_cast<std::size_t>(i)];
      nu_(i) = e.value;
      a_.col(i) << e.a, e.m, e.a * e.m;
    }
    hq_ = 2.0 * a_.transpose() * c_ * a_;
  }

  Eigen::Index size() const { return nu_.size(); }
  const VectorXd& nu() const { return nu_; }

  double q(const VectorXd& p) const {
    const Eigen::Vector3d v = a_ * p - b_;
    return v.dot(c_ * v);
  }
  VectorXd grad_q(const VectorXd& p) const { return 2.0 * a_.transpose() * (c_ * (a_ * p - b_)); }

  double objective(const VectorXd& p) const {
    CompensatedSum s;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (nu_(i) <= 0.0) continue;
      if (opts_.objective == MlObjective::likelihood)
        s.add(nu_(i) * std::log(p(i)));
      else
        s.add(-nu_(i) * std::log(nu_(i) / p(i)));
    }
    return s.value();
  }

  double penalized(const VectorXd& p, double mu) const {
    return objective(p) - mu * q(p) - opts_.regularizer * p.squaredNorm();
  }

  // Maximizes the penalized objective for fixed mu, starting from p (kept
  // feasible for the simplex). Zero-frequency entries may sit on p = 0.
  // Returns false when the iteration budget runs out.
  bool solve_inner(double mu, VectorXd& p, std::vector<bool>& at_bound, int& iterations) const {
    const Eigen::Index k = size();
    const double eps = opts_.regularizer;
    int taken = 0;
    for (;;) {
      if (iterations >= opts_.max_iterations) return false;

      VectorXd g = -mu * grad_q(p) - 2.0 * eps * p;
      for (Eigen::Index i = 0; i < k; ++i)
        if (nu_(i) > 0.0) g(i) += nu_(i) / p(i);

      std::vector<Eigen::Index> free;
      for (Eigen::Index i = 0; i < k; ++i)
        if (!at_bound[static_cast<std::size_t>(i)]) free.push_back(i);
      const auto nf = static_cast<Eigen::Index>(free.size());

      MatrixXd kkt = MatrixXd::Zero(nf + 1, nf + 1);
      VectorXd rhs = VectorXd::Zero(nf + 1);
      for (Eigen::Index r = 0; r < nf; ++r) {
        const Eigen::Index i = free[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < nf; ++c) kkt(r, c) = -mu * hq_(i, free[static_cast<std::size_t>(c)]);
        kkt(r, r) -= 2.0 * eps;
        if (nu_(i) > 0.0) kkt(r, r) -= nu_(i) / (p(i) * p(i));
        kkt(r, nf) = 1.0;
        kkt(nf, r) = 1.0;
        rhs(r) = -g(i);
      }
      const VectorXd sol = kkt.fullPivLu().solve(rhs);
      // KKT row reads H d + lambda 1 = -g, so the simplex multiplier is -lambda.
      const double lambda = -sol(nf);

      // Release the bound entry whose partial derivative most exceeds the simplex multiplier.
      Eigen::Index release = -1;
      double worst = 1e-12 * (1.0 + std::abs(lambda));
      for (Eigen::Index i = 0; i < k; ++i) {
        if (!at_bound[static_cast<std::size_t>(i)]) continue;
        if (g(i) - lambda > worst) {
          worst = g(i) - lambda;
          release = i;
        }
      }

      VectorXd d = VectorXd::Zero(k);
      for (Eigen::Index r = 0; r < nf; ++r) d(free[static_cast<std::size_t>(r)]) = sol(r);
      const double slope = g.dot(d);

      if (release >= 0 && slope < 1e-14) {
        at_bound[static_cast<std::size_t>(release)] = false;
        ++iterations;
        continue;
      }
      // A warm start can pass the decrement test while q is still off by
      // ~1e-7 (q is steep), so take a couple of steps before trusting it.
      if (slope / 2.0 < opts_.stationarity_tol && (taken >= 2 || d.cwiseAbs().maxCoeff() < 1e-13)) return true;

      // Longest step keeping positive-frequency entries strictly inside and
      // zero-frequency entries non-negative.
      double step_max = 1.0;
      Eigen::Index hit = -1;
      for (Eigen::Index i : free) {
        if (d(i) >= 0.0) continue;
        if (nu_(i) > 0.0) {
          step_max = std::min(step_max, 0.995 * p(i) / -d(i));
        } else if (p(i) / -d(i) < step_max) {
          step_max = p(i) / -d(i);
          hit = i;
        }
      }

      const double f0 = penalized(p, mu);
      double step = step_max;
      VectorXd trial = p + step * d;
      while (penalized(trial, mu) < f0 + 1e-4 * step * slope) {
        step *= 0.5;
        hit = -1;
        if (step < 1e-20) return true;  // no representable ascent left
        trial = p + step * d;
      }
      p = trial;
      for (Eigen::Index i = 0; i < k; ++i)
        if (nu_(i) <= 0.0 && p(i) < 0.0) p(i) = 0.0;
      if (hit >= 0) {
        p(hit) = 0.0;
        at_bound[static_cast<std::size_t>(hit)] = true;
      }
      ++iterations;
      ++taken;
    }
  }

 private:
  const MlOptions& opts_;
  Eigen::Matrix3d c_;
  Eigen::Vector3d b_;
  VectorXd nu_;
  MatrixXd a_;
  MatrixXd hq_;  // Hessian of q
};

MlSolution make_solution(const CountRecord& nu, const DesignSystem& design, const VectorXd& p) {
  MlSolution s;
  s.p = nu;
  for (std::size_t i = 0; i < s.p.entries.size(); ++i) s.p.entries[i].value = p(static_cast<Eigen::Index>(i));
  s.p.normalized = true;
  s.bloch = implied_bloch(s.p, design);
  s.log_likelihood = log_likelihood(nu, s.p);
  s.constraint_value = bloch_constraint_value(s.p, design);
  s.delta = distance_delta(nu, s.p);
  return s;
}

}  // namespace

MlSolution ml_fit(const CountRecord& counts, const DesignSystem& design, const MlOptions& opts) {
  design.constraint_matrix();  // SingularDesign first
  counts.validate();
  const CountRecord nu = counts.normalized ? counts : counts.normalized_copy();
  if (nu.entries.empty()) throw EmptySupport("no outcomes to fit");

  const Problem prob(nu, design, opts);
  const Eigen::Index k = prob.size();

  if (prob.q(prob.nu()) <= 1.0) {
    MlSolution s = make_solution(nu, design, prob.nu());
    s.converged = true;
    return s;
  }

  // The unconstrained optimum is infeasible, so the constraint is active at
  // the solution. Find mu > 0 with q(p(mu)) = 1; q(p(mu)) decreases with mu.
  int iterations = 0;
  std::vector<bool> at_bound(static_cast<std::size_t>(k));
  VectorXd p = prob.nu();
  for (Eigen::Index i = 0; i < k; ++i) at_bound[static_cast<std::size_t>(i)] = prob.nu()(i) <= 0.0;

  const auto finish = [&](const VectorXd& best, double mu, bool ok) {
    MlSolution s = make_solution(nu, design, best);
    s.constraint_active = true;
    s.multiplier = mu;
    s.regularizer = opts.regularizer;
    s.iterations = iterations;
    s.converged = ok;
    return s;
  };

  double mu_lo = 0.0, h_lo = prob.q(p) - 1.0;
  double mu_hi = 1.0;
  VectorXd p_hi = p;
  std::vector<bool> bound_hi = at_bound;
  double h_hi;
  for (;;) {
    if (!prob.solve_inner(mu_hi, p_hi, bound_hi, iterations)) return finish(p_hi, mu_hi, false);
    h_hi = prob.q(p_hi) - 1.0;
    if (h_hi <= 0.0) break;
    mu_lo = mu_hi;
    h_lo = h_hi;
    p = p_hi;
    at_bound = bound_hi;
    mu_hi *= 4.0;
    if (mu_hi > opts.max_multiplier) return finish(p_hi, mu_lo, false);  // feasible set empty
  }

  // Illinois-modified regula falsi on h(mu) = q(p(mu)) - 1.
  int side = 0;
  while (std::abs(h_hi) > opts.constraint_tol && mu_hi - mu_lo > 1e-15 * mu_hi) {
    double mu = (mu_lo * h_hi - mu_hi * h_lo) / (h_hi - h_lo);
    if (!(mu > mu_lo && mu < mu_hi)) mu = 0.5 * (mu_lo + mu_hi);

    VectorXd pm = p_hi;
    std::vector<bool> bm = bound_hi;
    if (!prob.solve_inner(mu, pm, bm, iterations)) return finish(p_hi, mu_hi, false);
    const double h = prob.q(pm) - 1.0;
    if (h > 0.0) {
      mu_lo = mu;
      h_lo = h;
      if (side == -1) h_hi *= 0.5;
      side = -1;
    } else {
      mu_hi = mu;
      h_hi = h;
      p_hi = pm;
      bound_hi = bm;
      if (side == 1) h_lo *= 0.5;
      side = 1;
    }
  }
  return finish(p_hi, mu_hi, true);
}

KktResiduals kkt_residuals(const CountRecord& counts, const DesignSystem& design, const MlSolution& sol) {
  const CountRecord nu = counts.normalized ? counts : counts.normalized_copy();
  const auto k = static_cast<Eigen::Index>(nu.entries.size());
  Eigen::VectorXd p(k), grad_l = Eigen::VectorXd::Zero(k), grad_q(k);
  Eigen::MatrixXd a(3, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& e = nu.entries[static_cast<std::size_t>(i)];
    p(i) = sol.p.entries[static_cast<std::size_t>(i)].value;
    a.col(i) << e.a, e.m, e.a * e.m;
    if (e.value > 0.0) grad_l(i) = e.value / p(i);
  }
  grad_q = 2.0 * a.transpose() * (design.constraint_matrix() * (a * p - design.b));

  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < k; ++i)
    if (p(i) > 0.0) free.push_back(i);
  const auto nf = static_cast<Eigen::Index>(free.size());
  const int ncons = sol.constraint_active ? 2 : 1;
  Eigen::MatrixXd cons(nf, ncons);
  Eigen::VectorXd g(nf);
  for (Eigen::Index r = 0; r < nf; ++r) {
    const Eigen::Index i = free[static_cast<std::size_t>(r)];
    g(r) = grad_l(i);
    cons(r, 0) = 1.0;
    if (ncons == 2) cons(r, 1) = grad_q(i);
  }
  const Eigen::VectorXd coef = cons.colPivHouseholderQr().solve(g);
  KktResiduals res;
  res.projected_gradient = (g - cons * coef).norm();
  res.complementary_slackness = std::abs(sol.multiplier * (sol.constraint_value - 1.0));

  const double lambda = coef(0);
  const double mu = ncons == 2 ? coef(1) : 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (p(i) > 0.0) continue;
    res.dual_sign = std::max(res.dual_sign, grad_l(i) - lambda - mu * grad_q(i));
  }
  return res;
}

std::optional<CountRecord> symmetric_frequencies(double nu1, double nu2) {
  double nu3 = 0.5 - nu1 - nu2;
  if (nu3 < -1e-15 || nu1 < 0.0 || nu2 < 0.0) return std::nullopt;
  nu3 = std::max(nu3, 0.0);
  CountRecord rec;
  for (const auto& [m, v] : {std::pair{1, nu1}, std::pair{2, nu2}, std::pair{3, nu3}}) {
    rec.entries.push_back({m, 1, v});
    rec.entries.push_back({m, -1, v});
  }
  rec.normalized = true;
  return rec;
}

std::vector<SymmetricGridCell> run_symmetric_grid(const DesignSystem& design, const std::vector<double>& values,
                                                  const MlOptions& opts) {
  std::vector<SymmetricGridCell> cells;
  for (double nu2 : values) {
    for (double nu1 : values) {
      SymmetricGridCell cell{nu1, nu2, std::nullopt};
      if (const auto freqs = symmetric_frequencies(nu1, nu2)) cell.fit = ml_fit(*freqs, design, opts);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace jcmtomo
