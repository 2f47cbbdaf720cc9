#include "emplan/qp_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "emplan/log.hpp"

namespace emplan {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-8;
constexpr double kStepTol = 1e-12;

struct Workspace {
  Eigen::MatrixXd H;   // regularized hessian (times 1, cost uses p'Hp)
  Eigen::VectorXd c;
  Eigen::MatrixXd Ae;  // filtered independent equality rows
  Eigen::VectorXd be;
  const Eigen::MatrixXd* Ai;
  const Eigen::VectorXd* bi;
};

// Drops equality rows that are linear combinations of rows kept so far.
void filter_equalities(const Eigen::MatrixXd& Ae, const Eigen::VectorXd& be,
                       Eigen::MatrixXd& Aef, Eigen::VectorXd& bef) {
  const int n = int(Ae.cols());
  std::vector<Eigen::VectorXd> basis;
  std::vector<int> keep;
  for (int i = 0; i < Ae.rows(); ++i) {
    Eigen::VectorXd r = Ae.row(i).transpose();
    const double norm0 = r.norm();
    for (const auto& b : basis) r -= b.dot(r) * b;
    if (r.norm() > 1e-10 * std::max(1.0, norm0)) {
      basis.push_back(r.normalized());
      keep.push_back(i);
    } else {
      log::warn("qp: dropping linearly dependent equality row ", i);
    }
  }
  Aef.resize(int(keep.size()), n);
  bef.resize(int(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    Aef.row(int(k)) = Ae.row(keep[k]);
    bef[int(k)] = be[keep[k]];
  }
}

// Solves the equality-constrained subproblem with working set W. Uses a
// plain LU factorization plus a residual check: rank thresholds misjudge
// these systems when curvatures span many orders of magnitude.
bool solve_eqp(const Workspace& ws, const std::vector<int>& working,
               Eigen::VectorXd& p, Eigen::VectorXd& mu_eq, Eigen::VectorXd& mu_w) {
  const int n = int(ws.H.rows());
  const int me = int(ws.Ae.rows());
  const int mw = int(working.size());
  const int dim = n + me + mw;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  kkt.topLeftCorner(n, n) = 2.0 * ws.H;
  rhs.head(n) = 2.0 * ws.c;
  if (me > 0) {
    kkt.block(n, 0, me, n) = ws.Ae;
    kkt.block(0, n, n, me) = ws.Ae.transpose();
    rhs.segment(n, me) = ws.be;
  }
  for (int k = 0; k < mw; ++k) {
    kkt.block(n + me + k, 0, 1, n) = ws.Ai->row(working[k]);
    kkt.block(0, n + me + k, n, 1) = ws.Ai->row(working[k]).transpose();
    rhs[n + me + k] = (*ws.bi)[working[k]];
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  // One step of iterative refinement, then accept only honest solves.
  const Eigen::VectorXd r1 = rhs - kkt * sol;
  sol += lu.solve(r1);
  const double residual = (rhs - kkt * sol).lpNorm<Eigen::Infinity>();
  const double scale = rhs.lpNorm<Eigen::Infinity>() + 1.0;
  if (!(residual <= 1e-8 * scale)) return false;
  p = sol.head(n);
  mu_eq = sol.segment(n, me);
  mu_w = sol.tail(mw);
  return true;
}

struct CoreResult {
  Eigen::VectorXd p;
  std::vector<int> active;
  Eigen::VectorXd mu_eq;
  Eigen::VectorXd mu_w;
  int iterations = 0;
  bool iter_limit = false;
};

// Standard primal active-set loop from a feasible point. The working set only
// grows by blocking rows and shrinks by negative-multiplier rows, so every
// iterate stays feasible.
CoreResult active_set_loop(const Workspace& ws, Eigen::VectorXd p,
                           std::vector<int> working, int max_iter) {
  CoreResult res;
  const int mi = int(ws.Ai->rows());
  bool bland = false;
  int degenerate_run = 0;

  Eigen::VectorXd mu_eq, mu_w, phat;
  while (res.iterations < max_iter) {
    ++res.iterations;
    if (!solve_eqp(ws, working, phat, mu_eq, mu_w)) {
      // Degenerate working set; drop its most recent row and retry.
      if (working.empty()) break;
      working.pop_back();
      continue;
    }
    const Eigen::VectorXd d = phat - p;
    if (d.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + p.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check dual feasibility.
      int drop = -1;
      double most_negative = -kDualTol;
      for (int k = 0; k < int(working.size()); ++k) {
        if (mu_w[k] < most_negative) {
          if (bland) {
            if (drop == -1 || working[k] < working[drop]) drop = k;
          } else {
            most_negative = mu_w[k];
            drop = k;
          }
        } else if (bland && mu_w[k] < -kDualTol && drop != -1 &&
                   working[k] < working[drop]) {
          drop = k;
        }
      }
      if (drop == -1) {
        res.p = phat;
        res.active = working;
        res.mu_eq = mu_eq;
        res.mu_w = mu_w;
        return res;
      }
      working.erase(working.begin() + drop);
      continue;
    }

    // Step toward the subproblem optimum, clipped by the nearest blocking row.
    double alpha = 1.0;
    int blocking = -1;
    double blocking_rate = 0.0;
    for (int i = 0; i < mi; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double rate = ws.Ai->row(i).dot(d);
      if (rate <= kStepTol) continue;
      const double slack = (*ws.bi)[i] - ws.Ai->row(i).dot(p);
      const double ai = std::max(slack, 0.0) / rate;
      const bool tie = std::abs(ai - alpha) <= kStepTol;
      const bool better = ai < alpha - kStepTol;
      if (better || (tie && blocking != -1 &&
                     (bland ? i < blocking : rate > blocking_rate))) {
        alpha = std::min(ai, alpha);
        blocking = i;
        blocking_rate = rate;
      }
    }
    p += alpha * d;
    if (blocking >= 0) {
      working.push_back(blocking);
      if (alpha <= kStepTol) {
        if (++degenerate_run >= 3 && !bland) {
          bland = true;
          log::warn("qp: cycling suspected, switching to Bland's rule");
        }
      } else {
        degenerate_run = 0;
      }
    }
  }
  res.p = p;
  res.active = working;
  res.iter_limit = true;
  return res;
}

Eigen::VectorXd equality_start(const Eigen::MatrixXd& Ae, const Eigen::VectorXd& be, int n) {
  if (Ae.rows() == 0) return Eigen::VectorXd::Zero(n);
  return Ae.colPivHouseholderQr().solve(be);
}

// Maps the scaled-space result back: p = D p_scaled. The primal residual is
// measured against the original rows; stationarity against the scaled system,
// where the numbers are O(1) by construction.
void finalize(const QpProblem& problem, const Workspace& ws, const CoreResult& core,
              const Eigen::VectorXd& d, QpSolution& out) {
  out.params = d.asDiagonal() * core.p;
  out.active_set = core.active;
  std::sort(out.active_set.begin(), out.active_set.end());
  out.objective = problem.cost.value(out.params);

  double primal = 0.0;
  const auto& cs = problem.constraints;
  for (int i = 0; i < cs.Ae.rows(); ++i)
    primal = std::max(primal, std::abs(cs.Ae.row(i).dot(out.params) - cs.be[i]));
  for (int i = 0; i < cs.Ai.rows(); ++i)
    primal = std::max(primal, cs.Ai.row(i).dot(out.params) - cs.bi[i]);
  out.primal_residual = primal;

  Eigen::VectorXd grad = 2.0 * ws.H * core.p - 2.0 * ws.c;
  if (ws.Ae.rows() > 0) grad += ws.Ae.transpose() * core.mu_eq;
  for (int k = 0; k < int(core.active.size()); ++k)
    grad += core.mu_w[k] * ws.Ai->row(core.active[k]).transpose();
  out.stationarity_residual = grad.lpNorm<Eigen::Infinity>();

  const double dual_ok = core.mu_w.size() > 0 ? core.mu_w.minCoeff() : 0.0;
  if (core.iter_limit) {
    out.status = QpStatus::IterLimit;
  } else if (primal <= 1e-6 && out.stationarity_residual <= 1e-6 && dual_ok >= -kDualTol) {
    out.status = QpStatus::Optimal;
  } else if (primal > 1e-6) {
    out.status = QpStatus::Infeasible;
  } else {
    out.status = QpStatus::IterLimit;
  }
}

}  // namespace

QpSolution solve_qp(const QpProblem& problem, const QpSolution* warm_start) {
  const int n = problem.dim();
  const auto& cs = problem.constraints;

  // Diagonal equilibration. Spline bases mix x^0 .. x^5 over tens of meters,
  // which puts ten orders of magnitude between Hessian entries; scaling each
  // variable by 1/sqrt(H_jj) and each row to unit norm keeps the working-set
  // subproblems solvable with plain dense factorizations.
  Eigen::MatrixXd H0 = 0.5 * (problem.cost.Q + problem.cost.Q.transpose());
  Eigen::VectorXd d(n);
  for (int j = 0; j < n; ++j) d[j] = 1.0 / std::sqrt(std::max(std::abs(H0(j, j)), 1e-12));
  const Eigen::MatrixXd scaled_Q = d.asDiagonal() * H0 * d.asDiagonal();
  const Eigen::VectorXd scaled_c = d.asDiagonal() * problem.cost.c;

  auto scale_rows = [&](const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                        Eigen::MatrixXd& As, Eigen::VectorXd& bs, Eigen::VectorXd& r) {
    As.resize(A.rows(), n);
    bs.resize(b.size());
    r.resize(A.rows());
    for (int i = 0; i < A.rows(); ++i) {
      Eigen::VectorXd row = (A.row(i) * d.asDiagonal()).transpose();
      r[i] = std::max(row.norm(), 1e-12);
      As.row(i) = row.transpose() / r[i];
      bs[i] = b[i] / r[i];
    }
  };
  Eigen::MatrixXd Ae_s, Ai_s;
  Eigen::VectorXd be_s, bi_s, re, ri;
  scale_rows(cs.Ae, cs.be, Ae_s, be_s, re);
  scale_rows(cs.Ai, cs.bi, Ai_s, bi_s, ri);

  Workspace ws;
  ws.H = scaled_Q;
  ws.H.diagonal().array() += problem.epsilon;
  ws.c = scaled_c;
  filter_equalities(Ae_s, be_s, ws.Ae, ws.be);
  ws.Ai = &Ai_s;
  ws.bi = &bi_s;

  const int total_rows = int(cs.Ae.rows() + cs.Ai.rows());
  const int max_iter = std::max(50, 10 * total_rows);

  QpSolution out;

  // Warm start: re-solve on the cached active set first.
  if (warm_start && warm_start->params.size() == n) {
    std::set<int> uniq;
    for (int idx : warm_start->active_set)
      if (idx >= 0 && idx < Ai_s.rows()) uniq.insert(idx);
    std::vector<int> working(uniq.begin(), uniq.end());
    Eigen::VectorXd p, mu_eq, mu_w;
    if (solve_eqp(ws, working, p, mu_eq, mu_w)) {
      double viol = 0.0;
      for (int i = 0; i < Ai_s.rows(); ++i)
        viol = std::max(viol, Ai_s.row(i).dot(p) - bi_s[i]);
      const bool feasible = viol <= 1e-8;
      const bool dual_ok = mu_w.size() == 0 || mu_w.minCoeff() >= -kDualTol;
      if (feasible && dual_ok) {
        CoreResult core;
        core.p = p;
        core.active = working;
        core.mu_eq = mu_eq;
        core.mu_w = mu_w;
        core.iterations = 1;
        finalize(problem, ws, core, d, out);
        out.iterations = 1;
        if (out.status == QpStatus::Optimal) return out;
      } else if (feasible) {
        CoreResult core = active_set_loop(ws, p, working, max_iter);
        core.iterations += 1;
        finalize(problem, ws, core, d, out);
        out.iterations = core.iterations;
        if (out.status == QpStatus::Optimal) return out;
      }
    }
    // Otherwise fall through to a cold start.
  }

  // Cold start: equality-consistent point, then a feasibility phase if any
  // inequality is violated.
  Eigen::VectorXd p0 = equality_start(ws.Ae, ws.be, n);
  double max_viol = 0.0;
  for (int i = 0; i < Ai_s.rows(); ++i)
    max_viol = std::max(max_viol, Ai_s.row(i).dot(p0) - bi_s[i]);

  int phase1_iters = 0;
  if (max_viol > kFeasTol) {
    // Feasibility phase with one artificial slack t: every row is relaxed to
    // a.p - t <= b and phase one minimizes w_p |p - center|^2 + (t + 1)^2
    // from the trivially feasible start t0 = max violation. Minimizing the
    // original objective plus M t instead puts a huge curvature gap between
    // t and p, which makes the working-set subproblems near-singular; this
    // pure-feasibility objective keeps everything on one scale. The proximal
    // pull w_p leaves an O(w_p |p - center|^2) floor on t, so the phase is
    // repeated re-centered on its own result until the true violation is
    // isolated.
    const double w_p = 1e-8;
    Eigen::MatrixXd ae(ws.Ae.rows(), n + 1);
    if (ws.Ae.rows() > 0) {
      ae << ws.Ae, Eigen::VectorXd::Zero(ws.Ae.rows());
    }
    Eigen::MatrixXd ai(Ai_s.rows() + 1, n + 1);
    ai << Ai_s, -Eigen::VectorXd::Ones(Ai_s.rows()),
        Eigen::MatrixXd::Zero(1, n), -Eigen::MatrixXd::Ones(1, 1);
    Eigen::VectorXd bi(bi_s.size() + 1);
    bi << bi_s, 0.0;

    double residual = max_viol;
    double prev_residual = std::numeric_limits<double>::max();
    Eigen::VectorXd center = p0;
    for (int pass = 0; pass < 40 && residual > 1e-7; ++pass) {
      Workspace ph;
      ph.H = Eigen::MatrixXd::Identity(n + 1, n + 1) * w_p;
      ph.H(n, n) = 1.0;
      ph.c = Eigen::VectorXd::Zero(n + 1);
      ph.c.head(n) = w_p * center;
      ph.c[n] = -1.0;
      ph.Ae = ae;
      ph.be = ws.be;
      ph.Ai = &ai;
      ph.bi = &bi;

      double start_viol = 0.0;
      for (int i = 0; i < Ai_s.rows(); ++i)
        start_viol = std::max(start_viol, Ai_s.row(i).dot(center) - bi_s[i]);
      Eigen::VectorXd q0(n + 1);
      q0.head(n) = center;
      q0[n] = start_viol + 1.0;
      CoreResult phase = active_set_loop(ph, q0, {}, max_iter);
      phase1_iters += phase.iterations;
      center = phase.p.head(n);
      prev_residual = residual;
      residual = 0.0;
      for (int i = 0; i < Ai_s.rows(); ++i)
        residual = std::max(residual, Ai_s.row(i).dot(center) - bi_s[i]);
      log::debug("qp phase1 pass ", pass, ": residual ", residual, " iters ",
                 phase.iterations);
      if (residual > 0.999 * prev_residual) break;  // converged to true violation
    }

    if (residual <= 1e-7) {
      p0 = center;
    } else {
      out.params = d.asDiagonal() * center;
      out.iterations = phase1_iters;
      out.status = QpStatus::Infeasible;
      out.objective = problem.cost.value(out.params);
      for (int i = 0; i < cs.Ai.rows(); ++i) {
        if (cs.Ai.row(i).dot(out.params) - cs.bi[i] > 1e-6)
          out.violated_tags.push_back(cs.ineq_tags[i]);
      }
      for (int i = 0; i < cs.Ae.rows(); ++i) {
        if (std::abs(cs.Ae.row(i).dot(out.params) - cs.be[i]) > 1e-6)
          out.violated_tags.push_back(cs.eq_tags[i]);
      }
      return out;
    }
  }

  CoreResult core = active_set_loop(ws, p0, {}, max_iter);
  core.iterations += phase1_iters;
  finalize(problem, ws, core, d, out);
  out.iterations = core.iterations;
  if (out.status == QpStatus::Infeasible) {
    for (int i = 0; i < cs.Ai.rows(); ++i) {
      if (cs.Ai.row(i).dot(out.params) - cs.bi[i] > 1e-6)
        out.violated_tags.push_back(cs.ineq_tags[i]);
    }
  }
  return out;
}

}  // namespace emplan
