#include <algorithm>
#include <cmath>
#include <ostream>

#include "cppa/solver.hpp"

namespace cppa {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal:
      return "Optimal";
    case LpStatus::Infeasible:
      return "Infeasible";
    case LpStatus::Unbounded:
      return "Unbounded";
    case LpStatus::IterationLimit:
      return "IterationLimit";
  }
  return "?";
}

namespace {

constexpr double kSingularTol = 1e-11;

class Simplex {
 public:
  Simplex(const ModelIR& model, const LpOptions& options) : model_(model), opt_(options) {
    n_ = static_cast<int>(model.variables.size());
    m_ = static_cast<int>(model.rows.size());
    total_ = n_ + m_;

    // Column-wise copy of the structural part.
    std::vector<int> counts(static_cast<std::size_t>(n_), 0);
    for (const auto& r : model.rows) {
      for (const auto& t : r.terms) ++counts[static_cast<std::size_t>(t.var)];
    }
    col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
    for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + counts[static_cast<std::size_t>(j)];
    col_row_.resize(static_cast<std::size_t>(col_start_.back()));
    col_val_.resize(static_cast<std::size_t>(col_start_.back()));
    std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : model.rows[static_cast<std::size_t>(i)].terms) {
        const int at = fill[static_cast<std::size_t>(t.var)]++;
        col_row_[static_cast<std::size_t>(at)] = i;
        col_val_[static_cast<std::size_t>(at)] = t.coef;
      }
    }

    lb_.resize(static_cast<std::size_t>(total_));
    ub_.resize(static_cast<std::size_t>(total_));
    cost_.assign(static_cast<std::size_t>(total_), 0.0);
    double biggest = 0.0;
    for (const auto& v : model.variables) biggest = std::max(biggest, std::abs(v.objective));
    scale_ = biggest > 0.0 ? 1.0 / biggest : 1.0;
    for (int j = 0; j < n_; ++j) {
      const auto& v = model.variables[static_cast<std::size_t>(j)];
      lb_[j] = v.lower;
      ub_[j] = v.upper;
      cost_[j] = -v.objective * scale_;
    }
    rhs_.resize(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const auto& r = model.rows[static_cast<std::size_t>(i)];
      rhs_[i] = r.rhs;
      const int s = n_ + i;
      switch (r.sense) {
        case Sense::LessEqual:
          lb_[s] = 0.0;
          ub_[s] = kInf;
          break;
        case Sense::GreaterEqual:
          lb_[s] = -kInf;
          ub_[s] = 0.0;
          break;
        case Sense::Equal:
          lb_[s] = 0.0;
          ub_[s] = 0.0;
          break;
      }
    }
    limit_ = opt_.iteration_limit > 0 ? opt_.iteration_limit : 50L * (m_ + n_) + 100;
  }

  LpSolution run(const Basis* hint) {
    LpSolution out;
    for (int j = 0; j < n_; ++j) {
      if (lb_[j] > ub_[j]) {
        out.status = LpStatus::Infeasible;
        return out;
      }
    }
    initialize(hint);
    out.status = iterate();
    out.iterations = iterations_;
    out.used_bland = bland_;
    if (out.status == LpStatus::Optimal) extract(out);
    out.basis = basis();
    return out;
  }

 private:
  // ---- basis bookkeeping ----------------------------------------------

  VarStatus resting_status(int j) const {
    if (std::isfinite(lb_[j])) return VarStatus::AtLower;
    if (std::isfinite(ub_[j])) return VarStatus::AtUpper;
    return VarStatus::Free;
  }

  double resting_value(int j, VarStatus s) const {
    switch (s) {
      case VarStatus::AtLower:
        return lb_[j];
      case VarStatus::AtUpper:
        return ub_[j];
      default:
        return 0.0;
    }
  }

  // A hinted nonbasic status is kept only when its bound exists.
  VarStatus sanitize(int j, VarStatus s) const {
    if (s == VarStatus::AtLower && std::isfinite(lb_[j])) return s;
    if (s == VarStatus::AtUpper && std::isfinite(ub_[j])) return s;
    if (s == VarStatus::Free && !std::isfinite(lb_[j]) && !std::isfinite(ub_[j])) return s;
    return resting_status(j);
  }

  void initialize(const Basis* hint) {
    status_.assign(static_cast<std::size_t>(total_), VarStatus::AtLower);
    x_.assign(static_cast<std::size_t>(total_), 0.0);
    head_.clear();
    std::vector<int> basic;
    for (int j = 0; j < total_; ++j) {
      VarStatus s;
      if (j < n_) {
        s = (hint && static_cast<std::size_t>(j) < hint->columns.size()) ? hint->columns[static_cast<std::size_t>(j)]
                                                                         : resting_status(j);
      } else {
        const auto i = static_cast<std::size_t>(j - n_);
        s = (hint && i < hint->rows.size()) ? hint->rows[i] : VarStatus::Basic;
      }
      if (s == VarStatus::Basic) {
        basic.push_back(j);
      } else {
        status_[j] = sanitize(j, s);
      }
    }
    if (static_cast<int>(basic.size()) > m_) {
      for (std::size_t k = static_cast<std::size_t>(m_); k < basic.size(); ++k) {
        status_[basic[k]] = resting_status(basic[k]);
      }
      basic.resize(static_cast<std::size_t>(m_));
    }
    for (int i = 0; static_cast<int>(basic.size()) < m_ && i < m_; ++i) {
      const int s = n_ + i;
      if (std::find(basic.begin(), basic.end(), s) == basic.end()) basic.push_back(s);
    }
    head_ = basic;
    for (int j : head_) status_[j] = VarStatus::Basic;
    for (int j = 0; j < total_; ++j) {
      if (status_[j] != VarStatus::Basic) x_[j] = resting_value(j, status_[j]);
    }
    factorize(true);
    compute_basic_values();
  }

  Basis basis() const {
    Basis b;
    b.columns.assign(status_.begin(), status_.begin() + n_);
    b.rows.assign(status_.begin() + n_, status_.end());
    return b;
  }

  // Column j of [A I] times scalar accumulated into dense vector `out`.
  template <typename F>
  void for_column(int j, F&& f) const {
    if (j >= n_) {
      f(j - n_, 1.0);
      return;
    }
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) f(col_row_[k], col_val_[k]);
  }

  double dot_column(const std::vector<double>& y, int j) const {
    double acc = 0.0;
    for_column(j, [&](int i, double v) { acc += y[i] * v; });
    return acc;
  }

  // Dense inverse by Gauss-Jordan over the basic columns. Binv is stored
  // column-major: binv_[k * m + i] = (B^-1)_{ik}.
  void factorize(bool repair) {
    const auto m = static_cast<std::size_t>(m_);
    for (int attempt = 0; attempt < 2; ++attempt) {
      std::vector<double> work(m * m, 0.0);  // row-major copy of B
      for (std::size_t p = 0; p < m; ++p) {
        for_column(head_[p], [&](int i, double v) { work[static_cast<std::size_t>(i) * m + p] = v; });
      }
      std::vector<double> inv(m * m, 0.0);  // row-major, starts as identity
      for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
      std::vector<int> row_of(m, -1);
      std::vector<char> used(m, 0);
      std::vector<std::size_t> dependent;
      for (std::size_t p = 0; p < m; ++p) {
        std::size_t best = m;
        double best_val = kSingularTol;
        for (std::size_t i = 0; i < m; ++i) {
          if (!used[i] && std::abs(work[i * m + p]) > best_val) {
            best_val = std::abs(work[i * m + p]);
            best = i;
          }
        }
        if (best == m) {
          dependent.push_back(p);
          continue;
        }
        used[best] = 1;
        row_of[p] = static_cast<int>(best);
        const double piv = work[best * m + p];
        for (std::size_t c = 0; c < m; ++c) {
          work[best * m + c] /= piv;
          inv[best * m + c] /= piv;
        }
        for (std::size_t i = 0; i < m; ++i) {
          if (i == best) continue;
          const double f = work[i * m + p];
          if (f == 0.0) continue;
          for (std::size_t c = 0; c < m; ++c) {
            work[i * m + c] -= f * work[best * m + c];
            inv[i * m + c] -= f * inv[best * m + c];
          }
        }
      }
      if (dependent.empty()) {
        binv_.assign(m * m, 0.0);
        for (std::size_t p = 0; p < m; ++p) {
          const std::size_t r = static_cast<std::size_t>(row_of[p]);
          for (std::size_t c = 0; c < m; ++c) binv_[c * m + p] = inv[r * m + c];
        }
        since_refactor_ = 0;
        return;
      }
      if (!repair || attempt > 0) {
        int row = 0;
        for (std::size_t i = 0; i < m; ++i) {
          if (!used[i]) {
            row = static_cast<int>(i);
            break;
          }
        }
        throw SingularBasisError("singular basis: no pivot for row " + model_.rows[static_cast<std::size_t>(row)].name,
                                 row);
      }
      // Swap the dependent columns for logicals of the rows left unpivoted.
      std::size_t next_row = 0;
      for (std::size_t p : dependent) {
        while (used[next_row]) ++next_row;
        const int leaving = head_[p];
        status_[leaving] = resting_status(leaving);
        x_[leaving] = resting_value(leaving, status_[leaving]);
        const int slack = n_ + static_cast<int>(next_row);
        if (status_[slack] == VarStatus::Basic) {
          // Already basic elsewhere; that column is then the dependent one's twin.
          throw SingularBasisError("singular hinted basis", static_cast<int>(next_row));
        }
        head_[p] = slack;
        status_[slack] = VarStatus::Basic;
        used[next_row] = 1;
      }
    }
  }

  void compute_basic_values() {
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> r(rhs_.begin(), rhs_.end());
    for (int j = 0; j < total_; ++j) {
      if (status_[j] == VarStatus::Basic || x_[j] == 0.0) continue;
      const double v = x_[j];
      for_column(j, [&](int i, double a) { r[i] -= a * v; });
    }
    std::vector<double> xb(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      if (r[k] == 0.0) continue;
      const double* col = &binv_[k * m];
      for (std::size_t i = 0; i < m; ++i) xb[i] += col[i] * r[k];
    }
    for (std::size_t p = 0; p < m; ++p) x_[head_[p]] = xb[p];
  }

  // alpha = B^-1 a_j
  void ftran(int j, std::vector<double>& alpha) const {
    const auto m = static_cast<std::size_t>(m_);
    alpha.assign(m, 0.0);
    for_column(j, [&](int k, double v) {
      const double* col = &binv_[static_cast<std::size_t>(k) * m];
      for (std::size_t i = 0; i < m; ++i) alpha[i] += col[i] * v;
    });
  }

  // y^T = c_B^T B^-1
  void btran(const std::vector<double>& cb, std::vector<double>& y) const {
    const auto m = static_cast<std::size_t>(m_);
    y.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double* col = &binv_[k * m];
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += cb[i] * col[i];
      y[k] = acc;
    }
  }

  void pivot_update(std::size_t r, const std::vector<double>& alpha) {
    const auto m = static_cast<std::size_t>(m_);
    const double ar = alpha[r];
    for (std::size_t k = 0; k < m; ++k) {
      double* col = &binv_[k * m];
      const double piv = col[r] / ar;
      if (piv != 0.0) {
        for (std::size_t i = 0; i < m; ++i) col[i] -= alpha[i] * piv;
      }
      col[r] = piv;
    }
  }

  // ---- main loop --------------------------------------------------------

  LpStatus iterate() {
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> cb(m), y, alpha;
    const double ftol = opt_.feasibility_tol;
    const double otol = opt_.optimality_tol;
    int degenerate_run = 0;

    while (true) {
      if (iterations_ >= limit_) return LpStatus::IterationLimit;
      if (since_refactor_ >= opt_.refactor_interval) {
        factorize(false);
        compute_basic_values();
      }

      // Phase selection by basic infeasibility.
      bool phase1 = false;
      for (std::size_t p = 0; p < m; ++p) {
        const int j = head_[p];
        if (x_[j] < lb_[j] - ftol) {
          cb[p] = -1.0;
          phase1 = true;
        } else if (x_[j] > ub_[j] + ftol) {
          cb[p] = 1.0;
          phase1 = true;
        } else {
          cb[p] = 0.0;
        }
      }
      if (!phase1) {
        for (std::size_t p = 0; p < m; ++p) cb[p] = cost_[head_[p]];
      }
      btran(cb, y);

      // Pricing.
      int enter = -1;
      double enter_d = 0.0, best_score = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarStatus s = status_[j];
        if (s == VarStatus::Basic || lb_[j] == ub_[j]) continue;
        const double d = (phase1 ? 0.0 : cost_[j]) - dot_column(y, j);
        bool eligible = false;
        if (s == VarStatus::AtLower) {
          eligible = d < -otol;
        } else if (s == VarStatus::AtUpper) {
          eligible = d > otol;
        } else {
          eligible = std::abs(d) > otol;
        }
        if (!eligible) continue;
        if (bland_) {
          enter = j;
          enter_d = d;
          break;
        }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          enter = j;
          enter_d = d;
        }
      }
      if (enter < 0) return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;

      const double dir = enter_d < 0.0 ? 1.0 : -1.0;
      ftran(enter, alpha);

      // Ratio test.
      double step = kInf;
      int leave_pos = -1;
      VarStatus leave_status = VarStatus::AtLower;
      double leave_alpha = 0.0;
      for (std::size_t p = 0; p < m; ++p) {
        if (std::abs(alpha[p]) <= opt_.pivot_tol) continue;
        const int j = head_[p];
        const double rate = -dir * alpha[p];
        double limit = kInf;
        VarStatus hits = VarStatus::AtLower;
        if (rate > 0.0) {
          if (phase1 && x_[j] < lb_[j] - ftol) {
            limit = (lb_[j] - x_[j]) / rate;
            hits = VarStatus::AtLower;
          } else if (x_[j] <= ub_[j] + ftol && std::isfinite(ub_[j])) {
            limit = std::max(0.0, (ub_[j] - x_[j]) / rate);
            hits = VarStatus::AtUpper;
          }
        } else {
          if (phase1 && x_[j] > ub_[j] + ftol) {
            limit = (ub_[j] - x_[j]) / rate;
            hits = VarStatus::AtUpper;
          } else if (x_[j] >= lb_[j] - ftol && std::isfinite(lb_[j])) {
            limit = std::max(0.0, (lb_[j] - x_[j]) / rate);
            hits = VarStatus::AtLower;
          }
        }
        if (!std::isfinite(limit)) continue;
        bool take = false;
        if (leave_pos < 0 || limit < step - 1e-12) {
          take = true;
        } else if (limit <= step + 1e-12) {
          if (bland_) {
            take = j < head_[static_cast<std::size_t>(leave_pos)];
          } else {
            take = std::abs(alpha[p]) > std::abs(leave_alpha);
          }
        }
        if (take) {
          step = std::min(step, limit);
          leave_pos = static_cast<int>(p);
          leave_status = hits;
          leave_alpha = alpha[p];
        }
      }
      if (leave_pos >= 0) {
        // Recompute the step of the chosen leaving row to avoid tie drift.
        const int j = head_[static_cast<std::size_t>(leave_pos)];
        const double target = leave_status == VarStatus::AtLower ? lb_[j] : ub_[j];
        step = std::max(0.0, (target - x_[j]) / (-dir * leave_alpha));
      }

      const double range = ub_[enter] - lb_[enter];
      const bool flip = std::isfinite(range) && range <= step;
      if (!flip && leave_pos < 0) {
        if (phase1) throw SolverError("phase 1 ray without a blocking variable");
        return LpStatus::Unbounded;
      }
      const double t = flip ? range : step;

      ++iterations_;
      degenerate_run = t <= 1e-12 ? degenerate_run + 1 : 0;
      if (opt_.allow_bland && degenerate_run > opt_.bland_after) bland_ = true;

      if (t != 0.0) {
        for (std::size_t p = 0; p < m; ++p) {
          if (alpha[p] != 0.0) x_[head_[p]] -= dir * t * alpha[p];
        }
        x_[enter] += dir * t;
      }
      if (flip) {
        status_[enter] = dir > 0 ? VarStatus::AtUpper : VarStatus::AtLower;
        x_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
        continue;
      }
      const auto r = static_cast<std::size_t>(leave_pos);
      const int leaving = head_[r];
      status_[leaving] = leave_status;
      x_[leaving] = leave_status == VarStatus::AtLower ? lb_[leaving] : ub_[leaving];
      head_[r] = enter;
      status_[enter] = VarStatus::Basic;
      pivot_update(r, alpha);
      ++since_refactor_;
    }
  }

  void extract(LpSolution& out) {
    // Refresh values and duals from a clean factorization.
    factorize(false);
    compute_basic_values();
    const auto m = static_cast<std::size_t>(m_);
    std::vector<double> cb(m), y;
    for (std::size_t p = 0; p < m; ++p) cb[p] = cost_[head_[p]];
    btran(cb, y);
    out.primal.assign(x_.begin(), x_.begin() + n_);
    out.duals.resize(m);
    for (std::size_t i = 0; i < m; ++i) out.duals[i] = -y[i] / scale_;
    out.reduced_costs.resize(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
      out.reduced_costs[j] = model_.variables[static_cast<std::size_t>(j)].objective - dot_column(out.duals, j);
    }
    out.objective = 0.0;
    for (int j = 0; j < n_; ++j) out.objective += model_.variables[static_cast<std::size_t>(j)].objective * x_[j];
  }

  const ModelIR& model_;
  LpOptions opt_;
  int n_ = 0, m_ = 0, total_ = 0;
  std::vector<int> col_start_, col_row_;
  std::vector<double> col_val_;
  std::vector<double> lb_, ub_, cost_, rhs_;
  double scale_ = 1.0;
  std::vector<VarStatus> status_;
  std::vector<double> x_;
  std::vector<int> head_;
  std::vector<double> binv_;
  int since_refactor_ = 0;
  long iterations_ = 0;
  long limit_ = 0;
  bool bland_ = false;
};

}  // namespace

LpSolution solve_lp(const ModelIR& model, const Basis* hint, const LpOptions& options) {
  if (model.variables.empty()) throw SolverError("solve_lp: model has no variables");
  Simplex simplex(model, options);
  if (hint && !hint->empty()) {
    try {
      return simplex.run(hint);
    } catch (const SingularBasisError&) {
      // The hint could not be repaired; fall back to a cold start.
      Simplex cold(model, options);
      return cold.run(nullptr);
    }
  }
  return simplex.run(nullptr);
}

KktReport check_kkt(const ModelIR& model, const LpSolution& sol) {
  KktReport rep;
  const auto n = model.variables.size();
  const auto m = model.rows.size();
  double scale = 0.0;
  for (const auto& v : model.variables) scale = std::max(scale, std::abs(v.objective));
  if (scale == 0.0) scale = 1.0;

  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = model.variables[j];
    const double x = sol.primal[j];
    rep.primal_residual = std::max({rep.primal_residual, v.lower - x, x - v.upper});
    rep.primal_objective += v.objective * x;
  }
  rep.dual_objective = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = model.rows[i];
    double ax = 0.0;
    for (const auto& t : r.terms) ax += t.coef * sol.primal[static_cast<std::size_t>(t.var)];
    const double slack = r.rhs - ax;
    const double y = sol.duals[i] / scale;
    switch (r.sense) {
      case Sense::LessEqual:
        rep.primal_residual = std::max(rep.primal_residual, -slack);
        rep.dual_residual = std::max(rep.dual_residual, -y);
        break;
      case Sense::GreaterEqual:
        rep.primal_residual = std::max(rep.primal_residual, slack);
        rep.dual_residual = std::max(rep.dual_residual, y);
        break;
      case Sense::Equal:
        rep.primal_residual = std::max(rep.primal_residual, std::abs(slack));
        break;
    }
    if (r.sense != Sense::Equal) rep.complementarity = std::max(rep.complementarity, std::abs(y * slack));
    rep.dual_objective += sol.duals[i] * r.rhs;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = model.variables[j];
    const double d = sol.reduced_costs[j];
    const double ds = d / scale;
    const double x = sol.primal[j];
    // Maximization: d > 0 needs x at its upper bound, d < 0 at its lower.
    if (ds > 0.0) {
      if (!std::isfinite(v.upper)) {
        rep.dual_residual = std::max(rep.dual_residual, ds);
      } else {
        rep.complementarity = std::max(rep.complementarity, std::abs(ds * (v.upper - x)));
        rep.dual_objective += d * v.upper;
      }
    } else if (ds < 0.0) {
      if (!std::isfinite(v.lower)) {
        rep.dual_residual = std::max(rep.dual_residual, -ds);
      } else {
        rep.complementarity = std::max(rep.complementarity, std::abs(ds * (x - v.lower)));
        rep.dual_objective += d * v.lower;
      }
    }
  }
  // Reduced costs must match the duals.
  std::vector<double> recomputed(n);
  for (std::size_t j = 0; j < n; ++j) recomputed[j] = model.variables[j].objective;
  for (std::size_t i = 0; i < m; ++i) {
    for (const auto& t : model.rows[i].terms) recomputed[static_cast<std::size_t>(t.var)] -= sol.duals[i] * t.coef;
  }
  for (std::size_t j = 0; j < n; ++j) {
    rep.dual_residual = std::max(rep.dual_residual, std::abs(recomputed[j] - sol.reduced_costs[j]) / scale);
  }
  rep.relative_gap = std::abs(rep.primal_objective - rep.dual_objective) /
                     std::max(1.0, std::max(std::abs(rep.primal_objective), std::abs(rep.dual_objective)));
  return rep;
}

void write_basis(const ModelIR& model, const Basis& basis, std::ostream& out) {
  auto label = [](VarStatus s) {
    switch (s) {
      case VarStatus::Basic:
        return "BS";
      case VarStatus::AtLower:
        return "LB";
      case VarStatus::AtUpper:
        return "UB";
      case VarStatus::Free:
        return "FR";
    }
    return "??";
  };
  for (std::size_t j = 0; j < basis.columns.size() && j < model.variables.size(); ++j) {
    out << "col " << model.variables[j].name << ' ' << label(basis.columns[j]) << '\n';
  }
  for (std::size_t i = 0; i < basis.rows.size() && i < model.rows.size(); ++i) {
    out << "row " << model.rows[i].name << ' ' << label(basis.rows[i]) << '\n';
  }
}

}  // namespace cppa
