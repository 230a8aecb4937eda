#include "peakbound/sdp_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace peakbound {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kSqrt2 = std::sqrt(2.0);

struct Trip {
  int i, j;  // 0-based, i <= j
  double v;  // full matrix entry value at (i,j) (and (j,i))
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// One equality row over free columns only, removed ahead of the interior
// point loop. `coeffs` is fully reduced: the pivot has coefficient one and
// no other eliminated pivot appears.
struct EliminatedRow {
  long orig_row;
  long pivot;
  std::map<long, double> coeffs;
  double rhs;
};

struct PsdScale {
  MatrixXd R, Rinv, W;  // Nesterov-Todd scaling point, W S W = X
  VectorXd lam;         // scaled-space spectrum
  MatrixXd Lx, Ls;      // Cholesky factors of X and S (for step lengths)
};

bool nt_scale(const MatrixXd& X, const MatrixXd& S, PsdScale& out) {
  Eigen::LLT<MatrixXd> lx(X), ls(S);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  out.Lx = lx.matrixL();
  out.Ls = ls.matrixL();
  Eigen::BDCSVD<MatrixXd> svd(out.Ls.transpose() * out.Lx,
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sig = svd.singularValues();
  if (!(sig.minCoeff() > 0)) return false;
  VectorXd si = sig.cwiseSqrt().cwiseInverse();
  out.R.noalias() = out.Lx * svd.matrixV() * si.asDiagonal();
  out.Rinv.noalias() = si.asDiagonal() * svd.matrixU().transpose() * out.Ls.transpose();
  out.W.noalias() = out.R * out.R.transpose();
  out.lam = sig;
  return true;
}

// Largest t >= 0 with X + t*D psd, given X = L L'. Returns +inf when D
// pushes no direction negative.
double psd_step_bound(const MatrixXd& L, const MatrixXd& D) {
  MatrixXd Y = L.triangularView<Eigen::Lower>().solve(D);
  Y = L.triangularView<Eigen::Lower>().solve(Y.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Y + Y.transpose()),
                                             Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double inner(const MatrixXd& A, const MatrixXd& B) { return (A.cwiseProduct(B)).sum(); }

}  // namespace

SDPSolution solve_sdp(const SDPInstance& inst, const SolveSettings& settings) {
  const long nf0 = inst.free_count;
  const long nn = inst.nonneg_count;
  const int nb = static_cast<int>(inst.psd_sides.size());
  const long ncols = inst.cols();
  const long nrows = static_cast<long>(inst.rows.size());
  const long cone_base = nf0 + nn;

  SDPSolution sol;
  sol.z.assign(ncols, 0.0);
  sol.y.assign(nrows, 0.0);
  sol.s.assign(ncols, 0.0);

  auto finish = [&](SolveStatus status, const std::string& message) {
    sol.status = status;
    sol.message = message;
    double pobj = 0, dobj = 0;
    for (long i = 0; i < ncols; ++i) pobj += inst.c[i] * sol.z[i];
    double bn = 0, cn2 = 0, pres = 0, dres = 0;
    for (long r = 0; r < nrows; ++r) {
      double ax = 0;
      for (const auto& [col, v] : inst.rows[r].entries) ax += v * sol.z[col];
      pres += (inst.rows[r].rhs - ax) * (inst.rows[r].rhs - ax);
      bn += inst.rows[r].rhs * inst.rows[r].rhs;
      dobj += inst.rows[r].rhs * sol.y[r];
    }
    std::vector<double> aty(ncols, 0.0);
    for (long r = 0; r < nrows; ++r)
      for (const auto& [col, v] : inst.rows[r].entries) aty[col] += v * sol.y[r];
    for (long i = 0; i < ncols; ++i) {
      double d = inst.c[i] - aty[i] - (i < nf0 ? 0.0 : sol.s[i]);
      dres += d * d;
      cn2 += inst.c[i] * inst.c[i];
    }
    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.primal_res = std::sqrt(pres) / (1 + std::sqrt(bn));
    sol.dual_res = std::sqrt(dres) / (1 + std::sqrt(cn2));
    sol.gap = std::abs(pobj - dobj) / (1 + std::max(std::abs(pobj), std::abs(dobj)));
    return sol;
  };

  // ---------- presolve: split rows, eliminate free-only equality rows ----------
  struct ORow {
    std::vector<std::pair<long, double>> fr;    // original free columns
    std::vector<std::pair<long, double>> cone;  // original cone columns (svec space)
    double rhs = 0;
  };
  std::vector<ORow> orows(nrows);
  for (long r = 0; r < nrows; ++r) {
    orows[r].rhs = inst.rows[r].rhs;
    for (const auto& [col, v] : inst.rows[r].entries) {
      if (col < 0 || col >= ncols) return finish(SolveStatus::NumericalTrouble, "row entry column out of range");
      if (v == 0.0) continue;
      if (col < nf0)
        orows[r].fr.emplace_back(col, v);
      else
        orows[r].cone.emplace_back(col, v);
    }
  }

  std::vector<EliminatedRow> elim;
  std::vector<char> row_kept(nrows, 1);
  for (long r = 0; r < nrows; ++r) {
    if (!orows[r].cone.empty()) continue;
    row_kept[r] = 0;
    std::map<long, double> row(orows[r].fr.begin(), orows[r].fr.end());
    double rhs = orows[r].rhs;
    double scale0 = 1.0;
    for (const auto& [c, v] : row) scale0 = std::max(scale0, std::abs(v));
    scale0 = std::max(scale0, std::abs(rhs));
    for (const auto& e : elim) {
      auto it = row.find(e.pivot);
      if (it == row.end()) continue;
      double f = it->second;
      row.erase(it);
      for (const auto& [c, v] : e.coeffs) {
        if (c == e.pivot) continue;
        row[c] -= f * v;
      }
      rhs -= f * e.rhs;
    }
    for (auto it = row.begin(); it != row.end();)
      it = (std::abs(it->second) <= 1e-12 * scale0) ? row.erase(it) : std::next(it);
    if (row.empty()) {
      if (std::abs(rhs) > 1e-9 * scale0)
        return finish(SolveStatus::PrimalInfeasible,
                      "presolve: equality rows over free variables are inconsistent");
      continue;  // redundant row, dual weight stays zero
    }
    auto pivot_it = row.begin();
    for (auto it = row.begin(); it != row.end(); ++it)
      if (std::abs(it->second) > std::abs(pivot_it->second)) pivot_it = it;
    double pv = pivot_it->second;
    long pivot = pivot_it->first;
    EliminatedRow er;
    er.orig_row = r;
    er.pivot = pivot;
    er.rhs = rhs / pv;
    for (const auto& [c, v] : row) er.coeffs[c] = v / pv;
    for (auto& e : elim) {
      auto it = e.coeffs.find(pivot);
      if (it == e.coeffs.end()) continue;
      double f = it->second;
      e.coeffs.erase(it);
      for (const auto& [c, v] : er.coeffs) {
        if (c == pivot) continue;
        e.coeffs[c] -= f * v;
        if (std::abs(e.coeffs[c]) <= 1e-14) e.coeffs.erase(c);
      }
      e.rhs -= f * er.rhs;
    }
    elim.push_back(std::move(er));
  }

  // Substitute eliminated pivots out of the kept rows and the objective.
  std::vector<char> is_pivot(nf0, 0);
  std::map<long, long> pivot_index;
  for (size_t e = 0; e < elim.size(); ++e) {
    is_pivot[elim[e].pivot] = 1;
    pivot_index[elim[e].pivot] = static_cast<long>(e);
  }
  std::vector<long> kept_rows;
  for (long r = 0; r < nrows; ++r)
    if (row_kept[r]) kept_rows.push_back(r);
  const long m = static_cast<long>(kept_rows.size());

  std::vector<std::map<long, double>> kept_fr(m);
  std::vector<double> kept_rhs(m);
  for (long k = 0; k < m; ++k) {
    const ORow& orow = orows[kept_rows[k]];
    std::map<long, double>& row = kept_fr[k];
    row.insert(orow.fr.begin(), orow.fr.end());
    double rhs = orow.rhs;
    for (const auto& e : elim) {
      auto it = row.find(e.pivot);
      if (it == row.end()) continue;
      double f = it->second;
      row.erase(it);
      for (const auto& [c, v] : e.coeffs) {
        if (c == e.pivot) continue;
        row[c] -= f * v;
      }
      rhs -= f * e.rhs;
    }
    for (auto it = row.begin(); it != row.end();)
      it = (it->second == 0.0) ? row.erase(it) : std::next(it);
    kept_rhs[k] = rhs;
  }
  std::vector<double> c_free(inst.c.begin(), inst.c.begin() + nf0);
  double obj_offset = 0;
  for (const auto& e : elim) {
    double f = c_free[e.pivot];
    if (f == 0.0) continue;
    c_free[e.pivot] = 0;
    obj_offset += f * e.rhs;
    for (const auto& [c, v] : e.coeffs) {
      if (c == e.pivot) continue;
      c_free[c] -= f * v;
    }
  }

  // Compress surviving free columns.
  std::vector<long> free_new(nf0, -1), free_old;
  for (long c = 0; c < nf0; ++c)
    if (!is_pivot[c]) {
      free_new[c] = static_cast<long>(free_old.size());
      free_old.push_back(c);
    }
  const long nf = static_cast<long>(free_old.size());

  if (m == 0) {
    // Nothing left but the eliminated chain: evaluate it and return.
    std::vector<double> z(ncols, 0.0);
    for (auto it = elim.rbegin(); it != elim.rend(); ++it) {
      double v = it->rhs;
      for (const auto& [c, w] : it->coeffs)
        if (c != it->pivot) v -= w * z[c];
      z[it->pivot] = v;
    }
    sol.z = z;
    // duals: match the objective on pivot columns
    if (!elim.empty()) {
      long ne = static_cast<long>(elim.size());
      MatrixXd Ae(ne, ne);
      VectorXd rhse(ne);
      for (long i = 0; i < ne; ++i) {
        for (long j = 0; j < ne; ++j) {
          double a = 0;
          for (const auto& [c, v] : orows[elim[i].orig_row].fr)
            if (c == elim[j].pivot) a = v;
          Ae(j, i) = a;
        }
        rhse(i) = inst.c[elim[i].pivot];
      }
      VectorXd ye = Ae.fullPivLu().solve(rhse);
      for (long i = 0; i < ne; ++i) sol.y[elim[i].orig_row] = ye(i);
    }
    return finish(SolveStatus::Optimal, "presolve removed every row");
  }

  // ---------- scaling ----------
  // Ruiz-style equilibration. Moment-style instances carry monomial weights
  // spanning many orders of magnitude; the Schur complement squares that
  // spread and the interior-point endgame then drowns in roundoff. Flatten
  // the nonzero magnitudes by alternately normalizing columns and rows.
  // Free and nonnegative columns rescale independently; the svec
  // coordinates of a PSD block must rescale as p_i*p_j (a diagonal
  // congruence X -> P X P) to preserve semidefiniteness, so their factors
  // come from a short fixed point on the per-index norms.
  struct PsdEntry {
    int bix;
    int i, j;
    double v;  // svec-metric value
  };
  std::vector<std::vector<std::pair<long, double>>> eqFr(m), eqNn(m);
  std::vector<std::vector<PsdEntry>> eqPsd(m);
  for (long k = 0; k < m; ++k) {
    for (const auto& [c, v] : kept_fr[k]) eqFr[k].emplace_back(free_new[c], v);
    for (const auto& [c, v] : orows[kept_rows[k]].cone) {
      if (c < cone_base) {
        eqNn[k].emplace_back(c - nf0, v);
      } else {
        int bix = 0;
        while (bix + 1 < nb && inst.psd_offsets[bix + 1] <= c) ++bix;
        long loc = c - inst.psd_offsets[bix];
        int s = inst.psd_sides[bix];
        // invert svec index
        int i = 0;
        long rowlen = s;
        long k2 = loc;
        while (k2 >= rowlen) {
          k2 -= rowlen;
          --rowlen;
          ++i;
        }
        eqPsd[k].push_back({bix, i, i + static_cast<int>(k2), v});
      }
    }
  }

  std::vector<double> row_scale(m, 1.0);
  std::vector<double> cm_free(nf, 1.0), cm_nn(nn, 1.0);
  std::vector<VectorXd> cm_psd(nb);
  for (int bix = 0; bix < nb; ++bix) cm_psd[bix] = VectorXd::Ones(inst.psd_sides[bix]);

  for (int pass = 0; pass < 3; ++pass) {
    // column norms at the current scaling
    std::vector<double> cf2(nf, 0.0), cn2v(nn, 0.0);
    std::vector<MatrixXd> pn2(nb);
    for (int bix = 0; bix < nb; ++bix)
      pn2[bix] = MatrixXd::Zero(inst.psd_sides[bix], inst.psd_sides[bix]);
    for (long k = 0; k < m; ++k) {
      for (const auto& [c, v] : eqFr[k]) cf2[c] += v * v;
      for (const auto& [c, v] : eqNn[k]) cn2v[c] += v * v;
      for (const auto& e : eqPsd[k]) pn2[e.bix](e.i, e.j) += e.v * e.v;
    }
    const bool colscale = !std::getenv("PEAKBOUND_NOCOLSCALE");
    std::vector<double> mf(nf, 1.0), mn(nn, 1.0);
    if (colscale) {
      for (long c = 0; c < nf; ++c)
        if (cf2[c] > 0) mf[c] = 1.0 / std::max(std::sqrt(std::sqrt(cf2[c])), 1e-8);
      for (long c = 0; c < nn; ++c)
        if (cn2v[c] > 0) mn[c] = 1.0 / std::max(std::sqrt(std::sqrt(cn2v[c])), 1e-8);
    }
    std::vector<VectorXd> mp(nb);
    for (int bix = 0; bix < nb; ++bix) {
      const int s = inst.psd_sides[bix];
      VectorXd l = VectorXd::Zero(s);
      if (colscale)
        for (int sweep = 0; sweep < 2; ++sweep)
          for (int i = 0; i < s; ++i) {
            double g = 0;
            for (int j = 0; j < s; ++j) {
              double n2 = pn2[bix](std::min(i, j), std::max(i, j));
              if (n2 > 0) g = std::max(g, std::sqrt(n2) * std::exp(l(i) + l(j)));
            }
            if (g > 0) l(i) -= 0.5 * std::log(g);
          }
      mp[bix] = l.array().exp().matrix();
    }
    for (long c = 0; c < nf; ++c) cm_free[c] *= mf[c];
    for (long c = 0; c < nn; ++c) cm_nn[c] *= mn[c];
    for (int bix = 0; bix < nb; ++bix) cm_psd[bix].array() *= mp[bix].array();
    for (long k = 0; k < m; ++k) {
      for (auto& [c, v] : eqFr[k]) v *= mf[c];
      for (auto& [c, v] : eqNn[k]) v *= mn[c];
      for (auto& e : eqPsd[k]) e.v *= mp[e.bix](e.i) * mp[e.bix](e.j);
      double n2 = 0;
      for (const auto& [c, v] : eqFr[k]) n2 += v * v;
      for (const auto& [c, v] : eqNn[k]) n2 += v * v;
      for (const auto& e : eqPsd[k]) n2 += e.v * e.v;
      double rs = std::max(std::sqrt(n2), 1e-10);
      row_scale[k] *= rs;
      for (auto& [c, v] : eqFr[k]) v /= rs;
      for (auto& [c, v] : eqNn[k]) v /= rs;
      for (auto& e : eqPsd[k]) e.v /= rs;
    }
  }

  double cnorm2 = 0;
  for (long c = 0; c < nf0; ++c)
    if (!is_pivot[c]) {
      double cv = c_free[c] * cm_free[free_new[c]];
      cnorm2 += cv * cv;
    }
  for (long k = 0; k < nn; ++k) {
    double cv = inst.c[nf0 + k] * cm_nn[k];
    cnorm2 += cv * cv;
  }
  for (int bix = 0; bix < nb; ++bix) {
    int s = inst.psd_sides[bix];
    long off = inst.psd_offsets[bix], k = 0;
    for (int i = 0; i < s; ++i)
      for (int j = i; j < s; ++j, ++k) {
        double cv = inst.c[off + k] * cm_psd[bix](i) * cm_psd[bix](j);
        cnorm2 += cv * cv;
      }
  }
  const double beta = std::max(1.0, std::sqrt(cnorm2));

  // ---------- scaled solver data ----------
  VectorXd b(m);
  for (long k = 0; k < m; ++k) b(k) = kept_rhs[k] / row_scale[k];

  VectorXd cf = VectorXd::Zero(nf);
  for (long c = 0; c < nf0; ++c)
    if (!is_pivot[c]) cf(free_new[c]) = c_free[c] * cm_free[free_new[c]] / beta;
  VectorXd cn = VectorXd::Zero(nn);
  for (long k = 0; k < nn; ++k) cn(k) = inst.c[nf0 + k] * cm_nn[k] / beta;
  std::vector<MatrixXd> Cb(nb);
  for (int bix = 0; bix < nb; ++bix) {
    int s = inst.psd_sides[bix];
    Cb[bix] = MatrixXd::Zero(s, s);
    long off = inst.psd_offsets[bix], k = 0;
    for (int i = 0; i < s; ++i)
      for (int j = i; j < s; ++j, ++k) {
        double v = inst.c[off + k] * cm_psd[bix](i) * cm_psd[bix](j) / beta;
        Cb[bix](i, j) = Cb[bix](j, i) = (i == j) ? v : v / kSqrt2;
      }
  }

  // per-row segment structure (scaled)
  std::vector<std::vector<std::pair<long, double>>> rowFr(m);  // reduced free col -> val
  std::vector<std::vector<std::pair<long, double>>> rowNn(m);  // nonneg idx -> val
  std::vector<std::vector<std::pair<int, std::vector<Trip>>>> rowPsd(m);
  std::vector<std::vector<std::pair<long, std::vector<Trip>>>> blockRows(nb);
  std::vector<std::vector<std::pair<long, double>>> nnByCol(nn);

  for (long k = 0; k < m; ++k) {
    rowFr[k] = eqFr[k];
    for (const auto& [idx, v] : eqNn[k]) {
      rowNn[k].emplace_back(idx, v);
      nnByCol[idx].emplace_back(k, v);
    }
    std::vector<std::vector<Trip>> perBlock(nb);
    for (const auto& e : eqPsd[k]) {
      double full = (e.i == e.j) ? e.v : e.v / kSqrt2;
      perBlock[e.bix].push_back({e.i, e.j, full});
    }
    for (int bix = 0; bix < nb; ++bix)
      if (!perBlock[bix].empty()) {
        rowPsd[k].emplace_back(bix, perBlock[bix]);
        blockRows[bix].emplace_back(k, std::move(perBlock[bix]));
      }
  }

  // ---------- connected components over cone items ----------
  UnionFind uf(static_cast<int>(nn) + nb);
  std::vector<int> row_item(m, -1);
  for (long k = 0; k < m; ++k) {
    int first = -1;
    for (const auto& [idx, v] : rowNn[k]) {
      if (first < 0) first = static_cast<int>(idx);
      else uf.unite(first, static_cast<int>(idx));
    }
    for (const auto& [bix, trips] : rowPsd[k]) {
      int item = static_cast<int>(nn) + bix;
      if (first < 0) first = item;
      else uf.unite(first, item);
    }
    if (first < 0)
      return finish(SolveStatus::NumericalTrouble, "internal: presolve left a row without cone support");
    row_item[k] = first;
  }

  struct Component {
    std::vector<long> rows;
    std::vector<int> blocks;
    std::vector<long> nncols;
    // sparse free block: (global reduced col, entries (local row, val))
    std::vector<std::pair<long, std::vector<std::pair<long, double>>>> freeCols;
    MatrixXd M;                  // exact assembled Schur block (for refinement)
    Eigen::LDLT<MatrixXd> fac;   // factorization used for the solves
  };
  std::map<int, int> comp_of_root;
  std::vector<Component> comps;
  for (long k = 0; k < m; ++k) {
    int root = uf.find(row_item[k]);
    auto [it, fresh] = comp_of_root.try_emplace(root, static_cast<int>(comps.size()));
    if (fresh) comps.emplace_back();
    comps[it->second].rows.push_back(k);
  }
  std::vector<int> comp_of_row(m, -1), local_of_row(m, -1);
  for (size_t ci = 0; ci < comps.size(); ++ci)
    for (size_t li = 0; li < comps[ci].rows.size(); ++li) {
      comp_of_row[comps[ci].rows[li]] = static_cast<int>(ci);
      local_of_row[comps[ci].rows[li]] = static_cast<int>(li);
    }
  for (long idx = 0; idx < nn; ++idx)
    if (!nnByCol[idx].empty()) {
      auto it = comp_of_root.find(uf.find(static_cast<int>(idx)));
      if (it != comp_of_root.end()) comps[it->second].nncols.push_back(idx);
    }
  for (int bix = 0; bix < nb; ++bix)
    if (!blockRows[bix].empty()) {
      auto it = comp_of_root.find(uf.find(static_cast<int>(nn) + bix));
      if (it != comp_of_root.end()) comps[it->second].blocks.push_back(bix);
    }
  for (auto& comp : comps) {
    std::map<long, std::vector<std::pair<long, double>>> cols;
    for (long li = 0; li < static_cast<long>(comp.rows.size()); ++li)
      for (const auto& [col, v] : rowFr[comp.rows[li]]) cols[col].emplace_back(li, v);
    comp.freeCols.assign(cols.begin(), cols.end());
  }

  // ---------- iterate storage ----------
  const double nu = std::accumulate(inst.psd_sides.begin(), inst.psd_sides.end(), 0.0) + nn;
  double bnorm = b.norm();
  double cnorm = std::sqrt(cf.squaredNorm() + cn.squaredNorm() +
                           std::accumulate(Cb.begin(), Cb.end(), 0.0,
                                           [](double acc, const MatrixXd& M) {
                                             return acc + M.squaredNorm();
                                           }));
  const double tau_p = std::max(1.0, bnorm / std::max(1.0, std::sqrt(nu)));
  const double tau_d = std::max(1.0, cnorm / std::max(1.0, std::sqrt(nu)));

  VectorXd y = VectorXd::Zero(m), zf = VectorXd::Zero(nf);
  VectorXd xn = VectorXd::Constant(nn, tau_p), sn = VectorXd::Constant(nn, tau_d);
  std::vector<MatrixXd> X(nb), S(nb);
  for (int bix = 0; bix < nb; ++bix) {
    X[bix] = tau_p * MatrixXd::Identity(inst.psd_sides[bix], inst.psd_sides[bix]);
    S[bix] = tau_d * MatrixXd::Identity(inst.psd_sides[bix], inst.psd_sides[bix]);
  }

  auto apply_A = [&](const VectorXd& zfv, const VectorXd& xnv,
                     const std::vector<MatrixXd>& Xv) {
    VectorXd out = VectorXd::Zero(m);
    for (long k = 0; k < m; ++k) {
      double a = 0;
      for (const auto& [c, v] : rowFr[k]) a += v * zfv(c);
      for (const auto& [idx, v] : rowNn[k]) a += v * xnv(idx);
      for (const auto& [bix, trips] : rowPsd[k])
        for (const Trip& t : trips)
          a += t.v * ((t.i == t.j) ? Xv[bix](t.i, t.i) : 2.0 * Xv[bix](t.i, t.j));
      out(k) = a;
    }
    return out;
  };

  std::vector<PsdScale> scale(nb);
  VectorXd wnn(nn);

  int stall_count = 0;
  long iter = 0;
  std::string trouble;

  // Best iterate seen, restored on non-optimal exits.
  double best_merit = std::numeric_limits<double>::infinity();
  VectorXd best_y, best_zf, best_xn, best_sn;
  std::vector<MatrixXd> best_X, best_S;

  // Give up once the merit stops improving for a sustained stretch; grinding
  // past that point just accumulates rounding noise around the same iterate.
  double stall_best = std::numeric_limits<double>::infinity();
  int no_progress = 0;

  // Reconstruction of the full-space solution from the current iterate,
  // undoing the equilibration: primal coordinates pick up the column
  // multipliers, dual slacks divide them out (and restore beta).
  auto reconstruct = [&]() {
    for (long c = 0; c < nf0; ++c)
      if (!is_pivot[c]) sol.z[c] = zf(free_new[c]) * cm_free[free_new[c]];
    for (auto it = elim.rbegin(); it != elim.rend(); ++it) {
      double v = it->rhs;
      for (const auto& [c, w] : it->coeffs)
        if (c != it->pivot) v -= w * sol.z[c];
      sol.z[it->pivot] = v;
    }
    for (long k = 0; k < nn; ++k) sol.z[nf0 + k] = xn(k) * cm_nn[k];
    for (int bix = 0; bix < nb; ++bix) {
      int s = inst.psd_sides[bix];
      long off = inst.psd_offsets[bix], k = 0;
      for (int i = 0; i < s; ++i)
        for (int j = i; j < s; ++j, ++k) {
          double pm = cm_psd[bix](i) * cm_psd[bix](j);
          sol.z[off + k] = pm * ((i == j) ? X[bix](i, i) : kSqrt2 * X[bix](i, j));
          sol.s[off + k] = beta / pm * ((i == j) ? S[bix](i, i) : kSqrt2 * S[bix](i, j));
        }
    }
    for (long k = 0; k < nn; ++k) sol.s[nf0 + k] = beta * sn(k) / cm_nn[k];
    for (long k = 0; k < m; ++k) sol.y[kept_rows[k]] = beta * y(k) / row_scale[k];
    if (!elim.empty()) {
      long ne = static_cast<long>(elim.size());
      // residual of the dual equation on pivot columns, to be matched by
      // the eliminated rows' duals
      VectorXd rhse(ne);
      for (long j = 0; j < ne; ++j) {
        long p = elim[j].pivot;
        double acc = inst.c[p];
        for (long k = 0; k < m; ++k)
          for (const auto& [c, v] : orows[kept_rows[k]].fr)
            if (c == p) acc -= v * sol.y[kept_rows[k]];
        rhse(j) = acc;
      }
      MatrixXd Ae = MatrixXd::Zero(ne, ne);
      for (long i = 0; i < ne; ++i)
        for (const auto& [c, v] : orows[elim[i].orig_row].fr) {
          auto it = pivot_index.find(c);
          if (it == pivot_index.end()) continue;
          Ae(it->second, i) = v;
        }
      VectorXd ye = Ae.fullPivLu().solve(rhse);
      for (long i = 0; i < ne; ++i) sol.y[elim[i].orig_row] = ye(i);
    }
  };

  for (iter = 0; iter < settings.max_iters; ++iter) {
    // residuals
    VectorXd rp = b - apply_A(zf, xn, X);
    VectorXd rdf = cf;
    VectorXd rdn = cn - sn;
    std::vector<MatrixXd> RdB(nb);
    for (int bix = 0; bix < nb; ++bix) RdB[bix] = Cb[bix] - S[bix];
    for (long k = 0; k < m; ++k) {
      for (const auto& [c, v] : rowFr[k]) rdf(c) -= v * y(k);
      for (const auto& [idx, v] : rowNn[k]) rdn(idx) -= v * y(k);
      for (const auto& [bix, trips] : rowPsd[k])
        for (const Trip& t : trips) {
          RdB[bix](t.i, t.j) -= t.v * y(k);
          if (t.i != t.j) RdB[bix](t.j, t.i) -= t.v * y(k);
        }
    }

    double gap = xn.dot(sn);
    for (int bix = 0; bix < nb; ++bix) gap += inner(X[bix], S[bix]);
    double mu = (nu > 0) ? gap / nu : 0;

    double pobj = cf.dot(zf) + cn.dot(xn);
    for (int bix = 0; bix < nb; ++bix) pobj += inner(Cb[bix], X[bix]);
    double dobj = b.dot(y);

    double pres = rp.norm() / (1 + bnorm);
    double dn2 = rdf.squaredNorm() + rdn.squaredNorm();
    for (int bix = 0; bix < nb; ++bix) dn2 += RdB[bix].squaredNorm();
    double dres = std::sqrt(dn2) / (1 + cnorm);
    double relgap = std::abs(pobj - dobj) / (1 + std::max(std::abs(pobj), std::abs(dobj)));

    if (settings.verbose) {
      std::fprintf(stderr, "iter %3ld  pobj % .8e  dobj % .8e  gap %.2e  pres %.2e  dres %.2e  mu %.2e\n",
                   iter, pobj, dobj, relgap, pres, dres, mu);
      if (std::getenv("PEAKBOUND_DEBUG")) {
        double rdbn = 0;
        for (int bix = 0; bix < nb; ++bix) rdbn += RdB[bix].squaredNorm();
        std::fprintf(stderr, "      |y| %.2e  |zf| %.2e  |rdf| %.2e  |rdn| %.2e  |RdB| %.2e\n",
                     y.norm(), zf.norm(), rdf.norm(), rdn.norm(), std::sqrt(rdbn));
      }
    }

    sol.iterations = static_cast<int>(iter);
    double merit = std::max({pres, dres, relgap});
    if (merit < best_merit) {
      best_merit = merit;
      best_y = y;
      best_zf = zf;
      best_xn = xn;
      best_sn = sn;
      best_X = X;
      best_S = S;
    }
    if (pres <= settings.feas_tol && dres <= settings.feas_tol && relgap <= settings.gap_tol) {
      reconstruct();
      return finish(SolveStatus::Optimal, "converged");
    }
    if (merit < 0.99 * stall_best) {
      stall_best = merit;
      no_progress = 0;
    } else if (++no_progress >= 25) {
      trouble = "no residual progress over 25 iterations";
      break;
    }
    if (iter > 0) {
      double bty = dobj;
      if (bty > 1e-10) {
        double n2 = (cf - rdf).squaredNorm() + (cn - rdn).squaredNorm();
        for (int bix = 0; bix < nb; ++bix) n2 += (Cb[bix] - RdB[bix]).squaredNorm();
        if (std::sqrt(n2) / bty <= settings.feas_tol * std::max(1.0, cnorm)) {
          reconstruct();
          return finish(SolveStatus::PrimalInfeasible,
                        "dual objective diverges with vanishing dual residual");
        }
      }
      if (pobj < -1e-10) {
        double azn = (b - rp).norm();
        if (azn / (-pobj) <= settings.feas_tol * std::max(1.0, bnorm)) {
          reconstruct();
          return finish(SolveStatus::DualInfeasible,
                        "primal objective diverges with vanishing primal residual");
        }
      }
    }

    // ---------- scaling point ----------
    bool ok = true;
    for (int bix = 0; bix < nb && ok; ++bix) ok = nt_scale(X[bix], S[bix], scale[bix]);
    if (!ok) {
      trouble = "interior point lost positive definiteness";
      break;
    }
    for (long k = 0; k < nn; ++k) wnn(k) = std::sqrt(xn(k) / sn(k));

    // ---------- KKT factorization ----------
    bool factor_ok = true;
    for (auto& comp : comps) {
      const long mc = static_cast<long>(comp.rows.size());
      comp.M = MatrixXd::Zero(mc, mc);
      for (int bix : comp.blocks) {
        const MatrixXd& W = scale[bix].W;
        const int s = inst.psd_sides[bix];
        MatrixXd U(s, s);
        const auto& brs = blockRows[bix];
        for (size_t jj = 0; jj < brs.size(); ++jj) {
          U.setZero();
          for (const Trip& t : brs[jj].second) {
            U.noalias() += t.v * (W.col(t.i) * W.col(t.j).transpose());
            if (t.i != t.j) U.noalias() += t.v * (W.col(t.j) * W.col(t.i).transpose());
          }
          const long lj = local_of_row[brs[jj].first];
          for (size_t ii = 0; ii <= jj; ++ii) {
            double acc = 0;
            for (const Trip& t : brs[ii].second)
              acc += t.v * ((t.i == t.j) ? U(t.i, t.i) : 2.0 * U(t.i, t.j));
            const long li = local_of_row[brs[ii].first];
            comp.M(li, lj) += acc;
            if (li != lj) comp.M(lj, li) += acc;
          }
        }
      }
      for (long idx : comp.nncols) {
        const double w2 = wnn(idx) * wnn(idx);
        const auto& colEntries = nnByCol[idx];
        for (size_t a = 0; a < colEntries.size(); ++a)
          for (size_t b2 = a; b2 < colEntries.size(); ++b2) {
            long li = local_of_row[colEntries[a].first];
            long lj = local_of_row[colEntries[b2].first];
            double v = w2 * colEntries[a].second * colEntries[b2].second;
            comp.M(li, lj) += v;
            if (li != lj) comp.M(lj, li) += v;
          }
      }
      double dscale = std::max(1.0, comp.M.diagonal().cwiseAbs().maxCoeff());
      double shift = 0.0;
      for (int attempt = 0; attempt < 5; ++attempt) {
        if (shift == 0.0)
          comp.fac.compute(comp.M);
        else
          comp.fac.compute(MatrixXd(comp.M + shift * MatrixXd::Identity(mc, mc)));
        if (comp.fac.info() == Eigen::Success && comp.fac.vectorD().minCoeff() > 0) break;
        shift = (shift == 0.0) ? 1e-13 * dscale : shift * 100;
      }
      if (comp.fac.info() != Eigen::Success) {
        factor_ok = false;
        break;
      }
    }
    if (!factor_ok) {
      trouble = "Schur complement factorization failed";
      break;
    }

    Eigen::LDLT<MatrixXd> facG;
    if (nf > 0) {
      MatrixXd G = MatrixXd::Zero(nf, nf);
      for (auto& comp : comps) {
        const long nact = static_cast<long>(comp.freeCols.size());
        if (nact == 0) continue;
        const long mc = static_cast<long>(comp.rows.size());
        MatrixXd Afc = MatrixXd::Zero(mc, nact);
        for (long a = 0; a < nact; ++a)
          for (const auto& [li, v] : comp.freeCols[a].second) Afc(li, a) += v;
        MatrixXd Bc = comp.fac.solve(Afc);
        for (long p = 0; p < nact; ++p) {
          const long gp = comp.freeCols[p].first;
          for (long q = p; q < nact; ++q) {
            double acc = 0;
            for (const auto& [li, v] : comp.freeCols[p].second) acc += v * Bc(li, q);
            const long gq = comp.freeCols[q].first;
            G(gp, gq) += acc;
            if (gp != gq) G(gq, gp) += acc;
          }
        }
      }
      double dscale = std::max(1.0, G.diagonal().cwiseAbs().maxCoeff());
      double shift = 0.0;
      for (int attempt = 0; attempt < 5; ++attempt) {
        if (shift == 0.0)
          facG.compute(G);
        else
          facG.compute(MatrixXd(G + shift * MatrixXd::Identity(nf, nf)));
        if (facG.info() == Eigen::Success && facG.vectorD().minCoeff() > 0) break;
        shift = (shift == 0.0) ? 1e-13 * dscale : shift * 100;
      }
      if (facG.info() != Eigen::Success) {
        trouble = "free-variable reduction factorization failed";
        break;
      }
    }

    double dbg_kkt_rn = 0, dbg_kkt_hn = 0;
    std::vector<double> dbg_ovn;
    auto kkt_solve = [&](const VectorXd& h1, const VectorXd& h2, VectorXd& dy, VectorXd& dzf) {
      auto once = [&](const VectorXd& g1, const VectorXd& g2, VectorXd& oy, VectorXd& ozf) {
        VectorXd rhs = -g2;
        for (size_t ci = 0; ci < comps.size(); ++ci) {
          const auto& comp = comps[ci];
          VectorXd h1c(comp.rows.size());
          for (size_t li = 0; li < comp.rows.size(); ++li) h1c(li) = g1(comp.rows[li]);
          VectorXd t1 = comp.fac.solve(h1c);
          for (const auto& [gcol, entries] : comp.freeCols)
            for (const auto& [li, v] : entries) rhs(gcol) += v * t1(li);
        }
        ozf = (nf > 0) ? VectorXd(facG.solve(rhs)) : VectorXd(0);
        oy = VectorXd::Zero(m);
        for (size_t ci = 0; ci < comps.size(); ++ci) {
          const auto& comp = comps[ci];
          VectorXd wv(comp.rows.size());
          for (size_t li = 0; li < comp.rows.size(); ++li) wv(li) = g1(comp.rows[li]);
          for (const auto& [gcol, entries] : comp.freeCols)
            for (const auto& [li, v] : entries) wv(li) -= v * ozf(gcol);
          VectorXd dyc = comp.fac.solve(wv);
          for (size_t li = 0; li < comp.rows.size(); ++li) oy(comp.rows[li]) = dyc(li);
        }
      };
      once(h1, h2, dy, dzf);
      // Iterative refinement against the exactly assembled blocks. Keep the
      // best iterate seen: a correction computed from a degenerate
      // factorization can make things worse, and we never want to return a
      // direction with a larger equation residual than the first solve.
      const double hn = std::sqrt(h1.squaredNorm() + h2.squaredNorm());
      VectorXd best_dy = dy, best_dzf = dzf;
      double best_rn = std::numeric_limits<double>::infinity();
      for (int pass = 0; pass < 6; ++pass) {
        VectorXd r1 = h1, r2 = h2;
        for (size_t ci = 0; ci < comps.size(); ++ci) {
          const auto& comp = comps[ci];
          VectorXd dyc(comp.rows.size());
          for (size_t li = 0; li < comp.rows.size(); ++li) dyc(li) = dy(comp.rows[li]);
          VectorXd Md = comp.M * dyc;
          for (size_t li = 0; li < comp.rows.size(); ++li) r1(comp.rows[li]) -= Md(li);
          for (const auto& [gcol, entries] : comp.freeCols)
            for (const auto& [li, v] : entries) {
              r1(comp.rows[li]) -= v * dzf(gcol);
              r2(gcol) -= v * dyc(li);
            }
        }
        double rn = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
        if (rn < best_rn) {
          best_rn = rn;
          best_dy = dy;
          best_dzf = dzf;
        }
        if (rn <= 1e-14 * (1 + hn)) break;
        VectorXd cy, czf;
        once(r1, r2, cy, czf);
        dy += cy;
        if (nf > 0) dzf += czf;
      }
      dy = best_dy;
      if (nf > 0) dzf = best_dzf;
      dbg_kkt_rn = best_rn;
      dbg_kkt_hn = hn;
    };

    // cached pieces reused by predictor and corrector
    std::vector<MatrixXd> WRdW(nb);
    for (int bix = 0; bix < nb; ++bix)
      WRdW[bix] = scale[bix].W * RdB[bix] * scale[bix].W;
    VectorXd w2rdn = (wnn.array().square() * rdn.array()).matrix();

    auto assemble_h1 = [&](const std::vector<MatrixXd>& Psi, const VectorXd& psi) {
      VectorXd h1 = rp;
      for (long k = 0; k < m; ++k) {
        double a = 0;
        for (const auto& [idx, v] : rowNn[k]) a += v * (psi(idx) - w2rdn(idx));
        for (const auto& [bix, trips] : rowPsd[k]) {
          const MatrixXd& E = Psi[bix];
          const MatrixXd& F = WRdW[bix];
          for (const Trip& t : trips) {
            double e = E(t.i, t.j) - F(t.i, t.j);
            a += t.v * ((t.i == t.j) ? e : 2.0 * e);
          }
        }
        h1(k) -= a;
      }
      return h1;
    };

    auto recover_direction = [&](const VectorXd& dy, const std::vector<MatrixXd>& Psi,
                                 const VectorXd& psi, std::vector<MatrixXd>& dS,
                                 std::vector<MatrixXd>& dX, VectorXd& dsn, VectorXd& dxn) {
      dS.assign(nb, MatrixXd());
      dX.assign(nb, MatrixXd());
      for (int bix = 0; bix < nb; ++bix) dS[bix] = RdB[bix];
      dsn = rdn;
      for (long k = 0; k < m; ++k) {
        for (const auto& [idx, v] : rowNn[k]) dsn(idx) -= v * dy(k);
        for (const auto& [bix, trips] : rowPsd[k])
          for (const Trip& t : trips) {
            dS[bix](t.i, t.j) -= t.v * dy(k);
            if (t.i != t.j) dS[bix](t.j, t.i) -= t.v * dy(k);
          }
      }
      for (int bix = 0; bix < nb; ++bix)
        dX[bix] = Psi[bix] - scale[bix].W * dS[bix] * scale[bix].W;
      dxn = (psi.array() - wnn.array().square() * dsn.array()).matrix();
    };

    auto step_bounds = [&](const std::vector<MatrixXd>& dX, const VectorXd& dxn,
                           const std::vector<MatrixXd>& dS, const VectorXd& dsn) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = ap;
      for (int bix = 0; bix < nb; ++bix) {
        ap = std::min(ap, psd_step_bound(scale[bix].Lx, dX[bix]));
        ad = std::min(ad, psd_step_bound(scale[bix].Ls, dS[bix]));
      }
      for (long k = 0; k < nn; ++k) {
        if (dxn(k) < 0) ap = std::min(ap, -xn(k) / dxn(k));
        if (dsn(k) < 0) ad = std::min(ad, -sn(k) / dsn(k));
      }
      return std::make_pair(ap, ad);
    };

    // ---------- predictor ----------
    std::vector<MatrixXd> PsiA(nb);
    for (int bix = 0; bix < nb; ++bix) PsiA[bix] = -X[bix];
    VectorXd psiA = -xn;
    VectorXd h1 = assemble_h1(PsiA, psiA);
    VectorXd dyA, dzfA;
    kkt_solve(h1, rdf, dyA, dzfA);
    std::vector<MatrixXd> dSA, dXA;
    VectorXd dsnA, dxnA;
    recover_direction(dyA, PsiA, psiA, dSA, dXA, dsnA, dxnA);
    auto [apA, adA] = step_bounds(dXA, dxnA, dSA, dsnA);
    double aP = std::min(1.0, apA), aD = std::min(1.0, adA);

    double gap_aff = (xn + aP * dxnA).dot(sn + aD * dsnA);
    for (int bix = 0; bix < nb; ++bix)
      gap_aff += inner(X[bix] + aP * dXA[bix], S[bix] + aD * dSA[bix]);
    gap_aff = std::max(gap_aff, 0.0);
    double sigma = (gap > 0) ? std::pow(gap_aff / gap, 3.0) : 0.0;
    sigma = std::min(1.0, std::max(0.0, sigma));

    // ---------- corrector ----------
    // For the NT scaling point the direction satisfies dX + W dS W = Psi
    // for any symmetric complementarity target Psi. Away from the solution
    // use the full Mehrotra target assembled in the scaled space, where the
    // second-order term is exact. Near the solution that form divides by
    // near-zero eigenvalue sums and its roundoff poisons the recovered
    // direction, so switch to the algebraically identical first-order part
    // Psi = sigma*mu*S^{-1} - X (S^{-1} = R Lam^{-1} R', X = R Lam R'),
    // dropping only the second-order heuristic, and keep some centering so
    // the iterate does not slide onto the cone boundary.
    const bool endgame = mu <= 1e-7;
    if (endgame) sigma = std::max(sigma, 0.05);
    std::vector<MatrixXd> Psi(nb);
    for (int bix = 0; bix < nb; ++bix) {
      const PsdScale& sc = scale[bix];
      const int s = inst.psd_sides[bix];
      if (endgame) {
        MatrixXd Sinv = MatrixXd::Identity(s, s);
        sc.Ls.triangularView<Eigen::Lower>().solveInPlace(Sinv);
        sc.Ls.triangularView<Eigen::Lower>().transpose().solveInPlace(Sinv);
        Sinv = 0.5 * (Sinv + Sinv.transpose()).eval();
        Psi[bix] = sigma * mu * Sinv - X[bix];
      } else {
        MatrixXd dXh = sc.Rinv * dXA[bix] * sc.Rinv.transpose();
        MatrixXd dSh = sc.R.transpose() * dSA[bix] * sc.R;
        MatrixXd Hc = 0.5 * (dXh * dSh + dSh * dXh);
        MatrixXd Gm(s, s);
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j) {
            double g = ((i == j) ? sigma * mu - sc.lam(i) * sc.lam(i) : 0.0) - Hc(i, j);
            Gm(i, j) = 2.0 * g / (sc.lam(i) + sc.lam(j));
          }
        Gm = 0.5 * (Gm + Gm.transpose()).eval();
        Psi[bix] = sc.R * Gm * sc.R.transpose();
      }
    }
    VectorXd psi(nn);
    for (long k = 0; k < nn; ++k)
      psi(k) = (sigma * mu - xn(k) * sn(k) - dxnA(k) * dsnA(k)) / sn(k);

    h1 = assemble_h1(Psi, psi);
    VectorXd dy, dzf;
    kkt_solve(h1, rdf, dy, dzf);
    std::vector<MatrixXd> dS, dX;
    VectorXd dsn, dxn;
    recover_direction(dy, Psi, psi, dS, dX, dsn, dxn);

    // Equation error of a candidate direction: how far (A dz - rp) and
    // (A_f' dy - rdf) are from zero. The other channels are exact by
    // construction.
    auto dir_err_of = [&](const VectorXd& dy_, const VectorXd& dzf_, const VectorXd& dxn_,
                          const std::vector<MatrixXd>& dX_, VectorXd& vp, VectorXd& vf) {
      vp = rp - apply_A(dzf_, dxn_, dX_);
      vf = VectorXd::Zero(nf);
      if (nf > 0) {
        vf = rdf;
        for (long k = 0; k < m; ++k)
          for (const auto& [c, v] : rowFr[k]) vf(c) -= v * dy_(k);
      }
      return std::sqrt(vp.squaredNorm() + vf.squaredNorm());
    };

    // Outer consistency refinement. The inner refinement controls the
    // Schur-system residual, but recovering dX through the scaling
    // sandwich reintroduces roundoff once W is nearly singular, and any
    // equation error left in the direction leaks into the residuals at
    // full steps (forcing the guards below to throttle the step instead).
    // Measure the violation of the recovered direction directly and solve
    // for a correction with zero dual/complementarity targets; keep the
    // best direction seen.
    {
      auto dir_err = [&](VectorXd& vp, VectorXd& vf) {
        return dir_err_of(dy, dzf, dxn, dX, vp, vf);
      };
      VectorXd b_dy = dy, b_dzf = dzf, b_dsn = dsn, b_dxn = dxn;
      std::vector<MatrixXd> b_dS = dS, b_dX = dX;
      double best_vn = std::numeric_limits<double>::infinity();
      dbg_ovn.clear();
      for (int opass = 0; opass < 3; ++opass) {
        VectorXd vp, vf;
        double vn = dir_err(vp, vf);
        dbg_ovn.push_back(vn);
        if (vn < best_vn) {
          best_vn = vn;
          b_dy = dy;
          b_dzf = dzf;
          b_dsn = dsn;
          b_dxn = dxn;
          b_dS = dS;
          b_dX = dX;
        }
        if (vn <= 1e-13 * (1 + bnorm) || vn > best_vn) break;
        VectorXd cy, czf;
        kkt_solve(vp, vf, cy, czf);
        VectorXd csn = VectorXd::Zero(nn);
        std::vector<MatrixXd> cS(nb);
        for (int bix = 0; bix < nb; ++bix)
          cS[bix] = MatrixXd::Zero(inst.psd_sides[bix], inst.psd_sides[bix]);
        for (long k = 0; k < m; ++k) {
          for (const auto& [idx, v] : rowNn[k]) csn(idx) -= v * cy(k);
          for (const auto& [bix, trips] : rowPsd[k])
            for (const Trip& t : trips) {
              cS[bix](t.i, t.j) -= t.v * cy(k);
              if (t.i != t.j) cS[bix](t.j, t.i) -= t.v * cy(k);
            }
        }
        dy += cy;
        if (nf > 0) dzf += czf;
        dsn += csn;
        dxn -= (wnn.array().square() * csn.array()).matrix();
        for (int bix = 0; bix < nb; ++bix) {
          dS[bix] += cS[bix];
          dX[bix] -= scale[bix].W * cS[bix] * scale[bix].W;
        }
      }
      dy = b_dy;
      if (nf > 0) dzf = b_dzf;
      dsn = b_dsn;
      dxn = b_dxn;
      dS = b_dS;
      dX = b_dX;
    }

    // Fallback: when the refined direction still violates the linearized
    // equations by more than the step guards can absorb, the
    // Schur-complement path has hit its precision wall — its matrix squares
    // the conditioning of the NT scaling, so near the optimum the
    // factorization stops contracting. Re-solve the same Newton system in
    // augmented (quasidefinite) form, whose conditioning grows only
    // linearly in the scaling spread, at the cost of one dense
    // factorization in the full variable dimension, and adopt whichever
    // direction is more consistent. Triggered by direction quality, not by
    // mu: the guards below choke the step exactly when the error exceeds
    // their slack, so that is the moment the extra cost pays for itself.
    {
      VectorXd vp0, vf0;
      const double vn0 = dir_err_of(dy, dzf, dxn, dX, vp0, vf0);
      const double rpn0 = rp.norm();
      const double rfn0 = (nf > 0) ? rdf.norm() : 0.0;
      const double ceil_p = 0.9 * settings.feas_tol * (1 + bnorm);
      const double ceil_f = 0.9 * settings.feas_tol * (1 + cnorm);
      const double slack_p = 0.25 * std::max(0.0, ceil_p - rpn0) + 1e-3 * ceil_p;
      const double slack_f = 0.25 * std::max(0.0, ceil_f - rfn0) + 1e-3 * ceil_f;
      long svt = nn;
      std::vector<long> svoff(nb);
      for (int b = 0; b < nb; ++b) {
        svoff[b] = svt;
        svt += static_cast<long>(inst.psd_sides[b]) * (inst.psd_sides[b] + 1) / 2;
      }
      const long fo = svt;
      const long yo = svt + nf;
      const long N = yo + m;
      if (settings.verbose && std::getenv("PEAKBOUND_DEBUG"))
        std::fprintf(stderr, "      aug? vn0 %.2e  thresh %.2e  N %ld\n", vn0,
                     0.5 * std::min(slack_p, slack_f), N);
      if (vn0 > 0.5 * std::min(slack_p, slack_f) && N <= 40000) {
        // Unknowns, in the scaled metric: [scaled nonneg dx | svec of the
        // scaled PSD dX | free dz | -dy]. In these variables the centrality
        // rows have an identity diagonal block and the constraint rows carry
        // the scaled coefficients (R' A R resp. w*a), so the matrix
        // conditioning grows only linearly with the scaling spread instead
        // of quadratically as in the unscaled metric or the Schur
        // complement. Solved with a pivoting sparse LU, which tolerates the
        // indefinite saddle structure and the zero free-column diagonal.
        const double kAugReg = 1e-10;
        std::vector<Eigen::Triplet<double>> kt;
        VectorXd g(N);
        for (long t = 0; t < nn; ++t) {
          kt.emplace_back(t, t, 1.0);
          g(t) = psi(t) / wnn(t) - wnn(t) * rdn(t);
        }
        for (int b = 0; b < nb; ++b) {
          const int s = inst.psd_sides[b];
          const long off = svoff[b];
          const long sv = static_cast<long>(s) * (s + 1) / 2;
          for (long a = 0; a < sv; ++a) kt.emplace_back(off + a, off + a, 1.0);
          MatrixXd G = scale[b].Rinv * Psi[b] * scale[b].Rinv.transpose() -
                       scale[b].R.transpose() * RdB[b] * scale[b].R;
          G = (0.5 * (G + G.transpose())).eval();
          long c2 = 0;
          for (int p = 0; p < s; ++p)
            for (int q = p; q < s; ++q, ++c2)
              g(off + c2) = (p == q) ? G(p, p) : kSqrt2 * G(p, q);
        }
        for (long c = 0; c < nf; ++c) {
          kt.emplace_back(fo + c, fo + c, kAugReg);
          g(fo + c) = -rdf(c);
        }
        for (long k = 0; k < m; ++k) {
          for (const auto& [c, v] : rowFr[k]) {
            kt.emplace_back(yo + k, fo + c, v);
            kt.emplace_back(fo + c, yo + k, v);
          }
          for (const auto& [idx, v] : rowNn[k]) {
            const double sv = wnn(idx) * v;
            kt.emplace_back(yo + k, idx, sv);
            kt.emplace_back(idx, yo + k, sv);
          }
          for (const auto& [bix, trips] : rowPsd[k]) {
            const int s = inst.psd_sides[bix];
            MatrixXd Mk = MatrixXd::Zero(s, s);
            for (const Trip& t : trips) {
              Mk(t.i, t.j) = t.v;
              Mk(t.j, t.i) = t.v;
            }
            MatrixXd T = scale[bix].R.transpose() * Mk * scale[bix].R;
            T = (0.5 * (T + T.transpose())).eval();
            const long off = svoff[bix];
            long a = 0;
            for (int i = 0; i < s; ++i)
              for (int j = i; j < s; ++j, ++a) {
                const double sv = (i == j) ? T(i, i) : kSqrt2 * T(i, j);
                if (sv == 0.0) continue;
                kt.emplace_back(yo + k, off + a, sv);
                kt.emplace_back(off + a, yo + k, sv);
              }
          }
          kt.emplace_back(yo + k, yo + k, -kAugReg);
          g(yo + k) = rp(k);
        }
        Eigen::SparseMatrix<double> K(N, N);
        K.setFromTriplets(kt.begin(), kt.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> slu;
        slu.compute(K);
        bool ok = slu.info() == Eigen::Success;
        VectorXd u;
        if (ok) {
          u = slu.solve(g);
          ok = u.allFinite();
        }
        if (settings.verbose && std::getenv("PEAKBOUND_DEBUG"))
          std::fprintf(stderr, "      aug fact %s  nnz %ld\n", ok ? "ok" : "FAIL",
                       static_cast<long>(K.nonZeros()));
        if (ok) {
          VectorXd ady(m), adzf(nf), adxn(nn);
          std::vector<MatrixXd> adX(nb);
          VectorXd b_ady, b_adzf, b_adxn;
          std::vector<MatrixXd> b_adX;
          double bvna = std::numeric_limits<double>::infinity();
          for (int pass = 0; pass < 10; ++pass) {
            for (long k = 0; k < m; ++k) ady(k) = -u(yo + k);
            for (long c = 0; c < nf; ++c) adzf(c) = u(fo + c);
            for (long t = 0; t < nn; ++t) adxn(t) = wnn(t) * u(t);
            for (int b = 0; b < nb; ++b) {
              const int s = inst.psd_sides[b];
              MatrixXd Xh(s, s);
              long c2 = svoff[b];
              for (int p = 0; p < s; ++p)
                for (int q = p; q < s; ++q, ++c2) {
                  const double v = u(c2);
                  if (p == q) {
                    Xh(p, p) = v;
                  } else {
                    Xh(p, q) = v / kSqrt2;
                    Xh(q, p) = v / kSqrt2;
                  }
                }
              adX[b] = scale[b].R * Xh * scale[b].R.transpose();
              adX[b] = (0.5 * (adX[b] + adX[b].transpose())).eval();
            }
            VectorXd vpa, vfa;
            const double vna = dir_err_of(ady, adzf, adxn, adX, vpa, vfa);
            if (vna < bvna) {
              bvna = vna;
              b_ady = ady;
              b_adzf = adzf;
              b_adxn = adxn;
              b_adX = adX;
            }
            if (vna <= 0.05 * std::min(slack_p, slack_f) || pass == 9) break;
            // Refine against the unregularized system so the proximal bias
            // is removed where the problem is nonsingular; the best-direction
            // tracking stops where a genuine near-null-space component
            // starts to grow instead.
            VectorXd r = g - K * u;
            for (long c = 0; c < nf; ++c) r(fo + c) += kAugReg * u(fo + c);
            for (long k = 0; k < m; ++k) r(yo + k) -= kAugReg * u(yo + k);
            VectorXd du = slu.solve(r);
            if (!du.allFinite()) break;
            u += du;
          }
          dbg_ovn.push_back(bvna);
          if (bvna < vn0) {
            dy = b_ady;
            if (nf > 0) dzf = b_adzf;
            dxn = b_adxn;
            dX = b_adX;
            dsn = rdn;
            for (int b = 0; b < nb; ++b) dS[b] = RdB[b];
            for (long k = 0; k < m; ++k) {
              for (const auto& [idx, v] : rowNn[k]) dsn(idx) -= v * dy(k);
              for (const auto& [bix, trips] : rowPsd[k])
                for (const Trip& t : trips) {
                  dS[bix](t.i, t.j) -= t.v * dy(k);
                  if (t.i != t.j) dS[bix](t.j, t.i) -= t.v * dy(k);
                }
            }
          }
        }
      }
    }
    auto [ap, ad] = step_bounds(dX, dxn, dS, dsn);
    double alphaP = std::min(1.0, settings.step_frac * ap);
    double alphaD = std::min(1.0, settings.step_frac * ad);

    // Direction-quality guard. The dual cone residual contracts exactly
    // under the update, but the primal one only does so as accurately as
    // the normal-equations solve; once the scaling degenerates the
    // direction can be large and inconsistent. Cap the primal step so the
    // new residual norm stays below (1 - alpha/2)*||rp|| plus a slack well
    // under the feasibility tolerance — monotone decrease with room to
    // converge, never growth.
    // Direction-consistency guards. Each step adds alpha*(equation error of
    // the direction) to the matching residual, so cap the step lengths so
    // that the injected error (a) keeps the residual decreasing while it is
    // large and (b) can never lift it above half the feasibility tolerance:
    // the injection budget is a fraction of the remaining headroom.
    double dbg_derr = 0, dbg_ferr = 0;
    {
      VectorXd adz = apply_A(dzf, dxn, dX);
      double derr = (adz - rp).norm();
      double rpn = rp.norm();
      double ceiling = 0.9 * settings.feas_tol * (1 + bnorm);
      double slack = 0.25 * std::max(0.0, ceiling - rpn) + 1e-3 * ceiling;
      if (derr > 0.5 * rpn + slack)
        alphaP = std::min(alphaP, slack / (derr - 0.5 * rpn));
      dbg_derr = derr;
    }
    // Same guard for the free-column dual residual: the cone parts of the
    // dual residual contract exactly (dS is defined as Rd - A^T dy), but the
    // free columns have no slack variable, so rdf inherits whatever error
    // the solve left in A_f^T dy = rdf. One over-long step along an
    // inconsistent direction would inject that error into rdf permanently.
    if (nf > 0) {
      VectorXd afy = VectorXd::Zero(nf);
      for (long k = 0; k < m; ++k)
        for (const auto& [c, v] : rowFr[k]) afy(c) += v * dy(k);
      double ferr = (afy - rdf).norm();
      double rfn = rdf.norm();
      double ceiling = 0.9 * settings.feas_tol * (1 + cnorm);
      double slack = 0.25 * std::max(0.0, ceiling - rfn) + 1e-3 * ceiling;
      if (ferr > 0.5 * rfn + slack)
        alphaD = std::min(alphaD, slack / (ferr - 0.5 * rfn));
      dbg_ferr = ferr;
    }

    // Near the solution, wildly unequal primal and dual steps destroy
    // centrality: one side races to its cone boundary while the other lags,
    // the iterate decenters, and the recentering directions blow up. Cap the
    // ratio between the two steps once mu is small so the pair moves roughly
    // together while the less constrained side can still make progress.
    if (endgame) {
      const double aP0 = alphaP, aD0 = alphaD;
      alphaP = std::min(aP0, 10.0 * aD0);
      alphaD = std::min(aD0, 10.0 * aP0);
    }

    if (settings.verbose && std::getenv("PEAKBOUND_DEBUG")) {
      std::fprintf(stderr, "      aP %.2e  aD %.2e  |dy| %.2e  |dzf| %.2e  sigma %.2e  derr %.2e  ferr %.2e\n",
                   alphaP, alphaD, dy.norm(), nf > 0 ? dzf.norm() : 0.0, sigma, dbg_derr, dbg_ferr);
      std::fprintf(stderr, "      kkt_rn %.2e  kkt_hn %.2e  ovn:", dbg_kkt_rn, dbg_kkt_hn);
      for (double v : dbg_ovn) std::fprintf(stderr, " %.2e", v);
      std::fprintf(stderr, "\n");
    }

    bool bad = !std::isfinite(alphaP) || !std::isfinite(alphaD);
    for (int bix = 0; bix < nb && !bad; ++bix)
      bad = !dX[bix].allFinite() || !dS[bix].allFinite();
    if (bad || !dy.allFinite() || (nf > 0 && !dzf.allFinite()) ||
        (nn > 0 && (!dxn.allFinite() || !dsn.allFinite()))) {
      trouble = "search direction is not finite";
      break;
    }

    if (alphaP < 1e-7 && alphaD < 1e-7) {
      if (++stall_count >= 3) {
        trouble = "step lengths collapsed";
        break;
      }
    } else {
      stall_count = 0;
    }

    zf += alphaP * dzf;
    xn += alphaP * dxn;
    for (int bix = 0; bix < nb; ++bix) X[bix] += alphaP * dX[bix];
    y += alphaD * dy;
    sn += alphaD * dsn;
    for (int bix = 0; bix < nb; ++bix) S[bix] += alphaD * dS[bix];
    // keep exact symmetry
    for (int bix = 0; bix < nb; ++bix) {
      X[bix] = 0.5 * (X[bix] + X[bix].transpose()).eval();
      S[bix] = 0.5 * (S[bix] + S[bix].transpose()).eval();
    }
  }

  sol.iterations = static_cast<int>(iter);
  if (std::isfinite(best_merit)) {
    y = best_y;
    zf = best_zf;
    xn = best_xn;
    sn = best_sn;
    X = best_X;
    S = best_S;
  }
  reconstruct();
  if (!trouble.empty()) return finish(SolveStatus::NumericalTrouble, trouble);
  return finish(SolveStatus::IterationLimit, "iteration limit reached");
}

MomentReport extract_duals(const SDPInstance& inst, const SDPSolution& sol) {
  MomentReport report;
  for (const auto& rec : inst.recovery.assertions) {
    std::map<Monomial, long, GrlexLess> row_of;
    for (size_t i = 0; i < rec.row_monomials.size(); ++i)
      row_of[rec.row_monomials[i]] = rec.rows[i];
    auto moment = [&](const Monomial& mono, bool& found) {
      auto it = row_of.find(mono);
      if (it == row_of.end()) {
        found = false;
        return 0.0;
      }
      return sol.y[it->second];
    };
    for (const auto& [name, weight] : rec.measures) {
      MeasureMoments mm;
      mm.name = name;
      bool all = true;
      double mass = 0;
      for (const auto& [mono, coef] : weight.terms()) {
        bool found = true;
        mass += coef * moment(mono, found);
        all = all && found;
      }
      mm.mass = mass;
      const bool plain = weight.terms().size() == 1 &&
                         weight.terms().begin()->first.degree() == 0;
      if (plain && all) {
        const auto& ctx = rec.set.ctx;
        mm.has_first_moments = true;
        for (int v = 0; v < ctx->size(); ++v) {
          Monomial mono;
          mono.exps.assign(ctx->size(), 0);
          mono.exps[v] = 1;
          bool found = true;
          double val = weight.terms().begin()->second * moment(mono, found);
          if (!found) {
            mm.has_first_moments = false;
            break;
          }
          mm.variable_names.push_back(ctx->names()[v]);
          mm.first_moments.push_back(val);
        }
        if (!mm.has_first_moments) {
          mm.variable_names.clear();
          mm.first_moments.clear();
        }
      }
      report.measures.push_back(std::move(mm));
    }
  }
  return report;
}

}  // namespace peakbound
