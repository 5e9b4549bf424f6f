// Primal-dual interior-point method for LP/SOC/PSD programs. Homogeneous
// self-dual embedding with Nesterov-Todd scaling and Mehrotra correction,
// solving a dense reduced KKT system each iteration.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "netdec/conic.hpp"
#include "netdec/errors.hpp"

namespace netdec {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

const double kSqrt2 = std::sqrt(2.0);

// ---------------------------------------------------------------------------
// cone layout and svec helpers

struct PsdIndex {
  int m = 0;
  std::vector<int> off;
  int size() const { return m * (m + 1) / 2; }
  int at(int i, int j) const {
    if (i < j) std::swap(i, j);
    return off[j] + i - j;
  }
};

PsdIndex make_psd_index(int m) {
  PsdIndex p;
  p.m = m;
  p.off.resize(m);
  int o = 0;
  for (int j = 0; j < m; ++j) {
    p.off[j] = o;
    o += m - j;
  }
  return p;
}

struct Layout {
  int l = 0;
  std::vector<int> q, q_off;
  std::vector<PsdIndex> s;
  std::vector<int> s_off;
  int total = 0;
  int degree = 0;
};

Mat to_mat(const PsdIndex& p, const double* v) {
  Mat X(p.m, p.m);
  for (int j = 0; j < p.m; ++j) {
    X(j, j) = v[p.off[j]];
    for (int i = j + 1; i < p.m; ++i) {
      double e = v[p.off[j] + i - j] / kSqrt2;
      X(i, j) = e;
      X(j, i) = e;
    }
  }
  return X;
}

void to_svec(const PsdIndex& p, const Mat& X, double* v) {
  for (int j = 0; j < p.m; ++j) {
    v[p.off[j]] = X(j, j);
    for (int i = j + 1; i < p.m; ++i) v[p.off[j] + i - j] = kSqrt2 * 0.5 * (X(i, j) + X(j, i));
  }
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling

struct Scaling {
  Vec d;                   // LP: W = diag(d)
  std::vector<Mat> qW, qWinv;
  std::vector<Mat> R, Rinv, Sigma;
  Vec lambda;              // scaled point, stacked
  std::vector<Vec> lam_s;  // PSD eigenvalues of the scaled point
};

bool soc_jnorm(const Vec& v, int off, int dim, double& out) {
  double t = v[off] * v[off];
  for (int k = 1; k < dim; ++k) t -= v[off + k] * v[off + k];
  if (!(t > 0.0) || v[off] <= 0.0) return false;
  out = std::sqrt(t);
  return true;
}

bool compute_scaling(const Layout& L, const Vec& s, const Vec& z, Scaling& w) {
  w.lambda.resize(L.total);
  w.d.resize(L.l);
  for (int i = 0; i < L.l; ++i) {
    if (!(s[i] > 0.0 && z[i] > 0.0)) return false;
    w.d[i] = std::sqrt(s[i] / z[i]);
    w.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  w.qW.resize(L.q.size());
  w.qWinv.resize(L.q.size());
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    int off = L.q_off[k], m = L.q[k];
    double aa, bb;
    if (!soc_jnorm(s, off, m, aa) || !soc_jnorm(z, off, m, bb)) return false;
    Vec sb = s.segment(off, m) / aa;
    Vec zb = z.segment(off, m) / bb;
    double beta = std::sqrt(aa / bb);
    double gamma = std::sqrt((sb.dot(zb) + 1.0) / 2.0);
    Vec wb = sb;
    wb[0] += zb[0];
    wb.tail(m - 1) -= zb.tail(m - 1);
    wb /= 2.0 * gamma;
    Vec v = wb;
    v[0] += 1.0;
    v /= std::sqrt(2.0 * v[0]);
    Mat J = Mat::Identity(m, m);
    J.bottomRightCorner(m - 1, m - 1) *= -1.0;
    w.qW[k] = beta * (2.0 * v * v.transpose() - J);
    Vec Jv = J * v;
    w.qWinv[k] = (2.0 * Jv * Jv.transpose() - J) / beta;
    w.lambda.segment(off, m) = w.qW[k] * z.segment(off, m);
  }
  w.R.resize(L.s.size());
  w.Rinv.resize(L.s.size());
  w.Sigma.resize(L.s.size());
  w.lam_s.resize(L.s.size());
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    const PsdIndex& P = L.s[k];
    int off = L.s_off[k];
    Eigen::LLT<Mat> cs(to_mat(P, s.data() + off));
    Eigen::LLT<Mat> cz(to_mat(P, z.data() + off));
    if (cs.info() != Eigen::Success || cz.info() != Eigen::Success) return false;
    Mat Ls = cs.matrixL();
    Mat Lz = cz.matrixL();
    Eigen::JacobiSVD<Mat> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec sv = svd.singularValues();
    if (!(sv.minCoeff() > 0.0)) return false;
    Vec isq = sv.cwiseSqrt().cwiseInverse();
    w.R[k] = Ls * svd.matrixV() * isq.asDiagonal();
    w.Rinv[k] = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    w.Sigma[k] = w.Rinv[k].transpose() * w.Rinv[k];
    w.lam_s[k] = sv;
    Mat Lam = sv.asDiagonal();
    to_svec(P, Lam, w.lambda.data() + off);
  }
  return true;
}

enum class Op { W, Wt, WtW, WtWinv, Wtinv };

Vec apply(const Layout& L, const Scaling& w, Op op, const Vec& v) {
  Vec out(L.total);
  for (int i = 0; i < L.l; ++i) {
    double d = w.d[i];
    switch (op) {
      case Op::W:
      case Op::Wt: out[i] = d * v[i]; break;
      case Op::WtW: out[i] = d * d * v[i]; break;
      case Op::WtWinv: out[i] = v[i] / (d * d); break;
      case Op::Wtinv: out[i] = v[i] / d; break;
    }
  }
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    int off = L.q_off[k], m = L.q[k];
    Vec seg = v.segment(off, m);
    switch (op) {
      case Op::W:
      case Op::Wt: out.segment(off, m) = w.qW[k] * seg; break;
      case Op::WtW: out.segment(off, m) = w.qW[k] * (w.qW[k] * seg); break;
      case Op::WtWinv: out.segment(off, m) = w.qWinv[k] * (w.qWinv[k] * seg); break;
      case Op::Wtinv: out.segment(off, m) = w.qWinv[k] * seg; break;
    }
  }
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    const PsdIndex& P = L.s[k];
    int off = L.s_off[k];
    Mat X = to_mat(P, v.data() + off);
    Mat Y;
    switch (op) {
      case Op::W: Y = w.R[k].transpose() * X * w.R[k]; break;
      case Op::Wt: Y = w.R[k] * X * w.R[k].transpose(); break;
      case Op::WtW: {
        Mat RRt = w.R[k] * w.R[k].transpose();
        Y = RRt * X * RRt;
        break;
      }
      case Op::WtWinv: Y = w.Sigma[k] * X * w.Sigma[k]; break;
      case Op::Wtinv: Y = w.Rinv[k] * X * w.Rinv[k].transpose(); break;
    }
    to_svec(P, Y, out.data() + off);
  }
  return out;
}

// Jordan product x o y
Vec jprod(const Layout& L, const Vec& x, const Vec& y) {
  Vec out(L.total);
  for (int i = 0; i < L.l; ++i) out[i] = x[i] * y[i];
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    int off = L.q_off[k], m = L.q[k];
    out[off] = x.segment(off, m).dot(y.segment(off, m));
    out.segment(off + 1, m - 1) =
        x[off] * y.segment(off + 1, m - 1) + y[off] * x.segment(off + 1, m - 1);
  }
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    const PsdIndex& P = L.s[k];
    int off = L.s_off[k];
    Mat X = to_mat(P, x.data() + off), Y = to_mat(P, y.data() + off);
    Mat Z = 0.5 * (X * Y + Y * X);
    to_svec(P, Z, out.data() + off);
  }
  return out;
}

// lambda \ d, i.e. u with lambda o u = d, using the scaled point
Vec jdiv(const Layout& L, const Scaling& w, const Vec& d) {
  const Vec& lam = w.lambda;
  Vec out(L.total);
  for (int i = 0; i < L.l; ++i) out[i] = d[i] / lam[i];
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    int off = L.q_off[k], m = L.q[k];
    double l0 = lam[off];
    auto l1 = lam.segment(off + 1, m - 1);
    double det = l0 * l0 - l1.squaredNorm();
    double u0 = (l0 * d[off] - l1.dot(d.segment(off + 1, m - 1))) / det;
    out[off] = u0;
    out.segment(off + 1, m - 1) = (d.segment(off + 1, m - 1) - u0 * l1) / l0;
  }
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    const PsdIndex& P = L.s[k];
    int off = L.s_off[k];
    const Vec& ev = w.lam_s[k];
    for (int j = 0; j < P.m; ++j)
      for (int i = j; i < P.m; ++i) {
        int idx = P.off[j] + i - j;
        out[off + idx] = 2.0 * d[off + idx] / (ev[i] + ev[j]);
      }
  }
  return out;
}

Vec identity(const Layout& L) {
  Vec e = Vec::Zero(L.total);
  for (int i = 0; i < L.l; ++i) e[i] = 1.0;
  for (std::size_t k = 0; k < L.q.size(); ++k) e[L.q_off[k]] = 1.0;
  for (std::size_t k = 0; k < L.s.size(); ++k)
    for (int j = 0; j < L.s[k].m; ++j) e[L.s_off[k] + L.s[k].off[j]] = 1.0;
  return e;
}

// smallest "eigenvalue" of v with respect to the cone
double cone_min(const Layout& L, const Vec& v) {
  double mn = kInf;
  for (int i = 0; i < L.l; ++i) mn = std::min(mn, v[i]);
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    int off = L.q_off[k], m = L.q[k];
    mn = std::min(mn, v[off] - v.segment(off + 1, m - 1).norm());
  }
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Mat> es(to_mat(L.s[k], v.data() + L.s_off[k]),
                                          Eigen::EigenvaluesOnly);
    mn = std::min(mn, es.eigenvalues().minCoeff());
  }
  return mn;
}

double soc_step(const double* x, const double* d, int m) {
  double a = d[0] * d[0], b = x[0] * d[0], c = x[0] * x[0];
  for (int k = 1; k < m; ++k) {
    a -= d[k] * d[k];
    b -= x[k] * d[k];
    c -= x[k] * x[k];
  }
  b *= 2.0;
  if (c <= 0.0) return 0.0;
  if (std::abs(a) < 1e-300 * std::max(1.0, c)) return b < 0.0 ? -c / b : kInf;
  double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kInf;
  double sq = std::sqrt(disc);
  double qq = -0.5 * (b + (b >= 0.0 ? sq : -sq));
  double best = kInf;
  for (double r : {qq / a, qq != 0.0 ? c / qq : kInf})
    if (r > 0.0) best = std::min(best, r);
  return best;
}

// max alpha with lambda + alpha * d in the cone (lambda is the scaled point)
double scaled_step(const Layout& L, const Scaling& w, const Vec& d) {
  const Vec& lam = w.lambda;
  double alpha = kInf;
  for (int i = 0; i < L.l; ++i)
    if (d[i] < 0.0) alpha = std::min(alpha, -lam[i] / d[i]);
  for (std::size_t k = 0; k < L.q.size(); ++k)
    alpha = std::min(alpha, soc_step(lam.data() + L.q_off[k], d.data() + L.q_off[k], L.q[k]));
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    Mat D = to_mat(L.s[k], d.data() + L.s_off[k]);
    Vec isq = w.lam_s[k].cwiseSqrt().cwiseInverse();
    Mat M = isq.asDiagonal() * D * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Mat> es(M, Eigen::EigenvaluesOnly);
    double mn = es.eigenvalues().minCoeff();
    if (mn < 0.0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// standard form  min c'x  s.t.  Ax = b,  Gx + s = h,  s in K

struct StandardForm {
  int n = 0;
  SpMat A, G;
  Vec b, h, c;
  Layout L;
  Vec col_scale, a_scale, g_scale;
};

StandardForm build_standard_form(const ConicProgram& p) {
  StandardForm F;
  F.n = p.num_vars();
  std::vector<Triplet> at, gt_lp, gt_q, gt_s;
  std::vector<double> b, h_lp, h_q, h_s;
  int arow = 0;
  int lrow = 0;
  auto eq = [&](const std::vector<Term>& terms, double rhs) {
    for (const auto& t : terms) at.emplace_back(arow, t.var, t.coef);
    b.push_back(rhs);
    ++arow;
  };
  // a'x <= u  ->  a'x + s = u
  auto le = [&](const std::vector<Term>& terms, double sign, double rhs) {
    for (const auto& t : terms) gt_lp.emplace_back(lrow, t.var, sign * t.coef);
    h_lp.push_back(sign * rhs);
    ++lrow;
  };
  for (int i = 0; i < F.n; ++i) {
    double lo = p.lower(i), up = p.upper(i);
    std::vector<Term> t{{i, 1.0}};
    if (lo == up) {
      eq(t, lo);
      continue;
    }
    if (std::isfinite(lo)) le(t, -1.0, lo);
    if (std::isfinite(up)) le(t, 1.0, up);
  }
  for (const auto& r : p.rows()) {
    if (r.lower == r.upper) {
      eq(r.terms, r.lower);
      continue;
    }
    if (std::isfinite(r.lower)) le(r.terms, -1.0, r.lower);
    if (std::isfinite(r.upper)) le(r.terms, 1.0, r.upper);
  }
  int qrow = 0;
  for (const auto& s : p.socs()) {
    F.L.q.push_back(static_cast<int>(s.entries.size()));
    for (const auto& e : s.entries) {
      for (const auto& t : e.terms) gt_q.emplace_back(qrow, t.var, -t.coef);
      h_q.push_back(e.constant);
      ++qrow;
    }
  }
  int srow = 0;
  for (const auto& blk : p.psds()) {
    PsdIndex P = make_psd_index(blk.dim);
    for (const auto& e : blk.entries) {
      double sc = e.row == e.col ? 1.0 : kSqrt2;
      int idx = srow + P.at(e.row, e.col);
      for (const auto& t : e.expr.terms) gt_s.emplace_back(idx, t.var, -sc * t.coef);
    }
    h_s.resize(srow + P.size(), 0.0);
    for (const auto& e : blk.entries) {
      double sc = e.row == e.col ? 1.0 : kSqrt2;
      h_s[srow + P.at(e.row, e.col)] += sc * e.expr.constant;
    }
    srow += P.size();
    F.L.s.push_back(P);
  }

  Layout& L = F.L;
  L.l = lrow;
  int off = lrow;
  for (int m : L.q) {
    L.q_off.push_back(off);
    off += m;
  }
  for (const auto& P : L.s) {
    L.s_off.push_back(off);
    off += P.size();
  }
  L.total = off;
  L.degree = L.l + static_cast<int>(L.q.size());
  for (const auto& P : L.s) L.degree += P.m;

  std::vector<Triplet> gt = gt_lp;
  for (const auto& t : gt_q) gt.emplace_back(t.row() + lrow, t.col(), t.value());
  for (const auto& t : gt_s) gt.emplace_back(t.row() + lrow + qrow, t.col(), t.value());
  F.A.resize(arow, F.n);
  F.A.setFromTriplets(at.begin(), at.end());
  F.G.resize(L.total, F.n);
  F.G.setFromTriplets(gt.begin(), gt.end());
  F.A.prune(0.0);
  F.G.prune(0.0);
  F.b = Eigen::Map<Vec>(b.data(), b.size());
  F.h.resize(L.total);
  for (int i = 0; i < lrow; ++i) F.h[i] = h_lp[i];
  for (int i = 0; i < qrow; ++i) F.h[lrow + i] = h_q[i];
  for (int i = 0; i < srow; ++i) F.h[lrow + qrow + i] = h_s[i];
  F.c = Eigen::Map<const Vec>(p.objective().data(), F.n);
  return F;
}

// Ruiz-style equilibration. Rows of one cone block share a single factor so
// cone membership is preserved.
void equilibrate(StandardForm& F, int passes = 10) {
  const int n = F.n;
  const Layout& L = F.L;
  F.col_scale = Vec::Ones(n);
  F.a_scale = Vec::Ones(F.A.rows());
  F.g_scale = Vec::Ones(L.total);
  std::vector<int> block_of(L.total);
  int nblocks = 0;
  for (int i = 0; i < L.l; ++i) block_of[i] = nblocks++;
  for (std::size_t k = 0; k < L.q.size(); ++k) {
    for (int i = 0; i < L.q[k]; ++i) block_of[L.q_off[k] + i] = nblocks;
    ++nblocks;
  }
  for (std::size_t k = 0; k < L.s.size(); ++k) {
    for (int i = 0; i < L.s[k].size(); ++i) block_of[L.s_off[k] + i] = nblocks;
    ++nblocks;
  }
  for (int pass = 0; pass < passes; ++pass) {
    Vec cmax = Vec::Zero(n);
    Vec amax = Vec::Zero(F.A.rows());
    Vec bmax = Vec::Zero(nblocks);
    for (int r = 0; r < F.A.outerSize(); ++r)
      for (SpMat::InnerIterator it(F.A, r); it; ++it) {
        double v = std::abs(it.value());
        cmax[it.col()] = std::max(cmax[it.col()], v);
        amax[r] = std::max(amax[r], v);
      }
    for (int r = 0; r < F.G.outerSize(); ++r)
      for (SpMat::InnerIterator it(F.G, r); it; ++it) {
        double v = std::abs(it.value());
        cmax[it.col()] = std::max(cmax[it.col()], v);
        bmax[block_of[r]] = std::max(bmax[block_of[r]], v);
      }
    auto fac = [](double m) { return m > 0.0 ? 1.0 / std::sqrt(m) : 1.0; };
    Vec dc(n), da(F.A.rows()), dg(L.total);
    for (int j = 0; j < n; ++j) dc[j] = fac(cmax[j]);
    for (int r = 0; r < F.A.rows(); ++r) da[r] = fac(amax[r]);
    for (int r = 0; r < L.total; ++r) dg[r] = fac(bmax[block_of[r]]);
    F.A = da.asDiagonal() * F.A * dc.asDiagonal();
    F.G = dg.asDiagonal() * F.G * dc.asDiagonal();
    F.col_scale = F.col_scale.cwiseProduct(dc);
    F.a_scale = F.a_scale.cwiseProduct(da);
    F.g_scale = F.g_scale.cwiseProduct(dg);
  }
  F.c = F.c.cwiseProduct(F.col_scale);
  F.b = F.b.cwiseProduct(F.a_scale);
  F.h = F.h.cwiseProduct(F.g_scale);
}

// ---------------------------------------------------------------------------
// KKT system  [0 A' G'; A 0 0; G 0 -W'W]

struct PsdColumn {
  int var;
  std::vector<std::tuple<int, int, double>> pos;  // full (row, col, value)
};

class KktSolver {
 public:
  explicit KktSolver(const StandardForm& F) : F_(F), n_(F.n), p_(static_cast<int>(F.A.rows())) {
    const Layout& L = F.L;
    Gt_ = F.G.transpose();
    // per-SOC column lists
    for (std::size_t k = 0; k < L.q.size(); ++k) {
      std::vector<int> cols;
      for (int r = L.q_off[k]; r < L.q_off[k] + L.q[k]; ++r)
        for (SpMat::InnerIterator it(F.G, r); it; ++it) cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      Mat sub = Mat::Zero(L.q[k], cols.size());
      for (int r = 0; r < L.q[k]; ++r)
        for (SpMat::InnerIterator it(F.G, L.q_off[k] + r); it; ++it) {
          auto pos = std::lower_bound(cols.begin(), cols.end(), it.col()) - cols.begin();
          sub(r, pos) = it.value();
        }
      soc_cols_.push_back(std::move(cols));
      soc_sub_.push_back(std::move(sub));
    }
    for (std::size_t k = 0; k < L.s.size(); ++k) {
      const PsdIndex& P = L.s[k];
      std::vector<int> row_i(P.size()), row_j(P.size());
      for (int j = 0; j < P.m; ++j)
        for (int i = j; i < P.m; ++i) {
          row_i[P.off[j] + i - j] = i;
          row_j[P.off[j] + i - j] = j;
        }
      std::vector<PsdColumn> cols;
      std::vector<int> where(n_, -1);
      for (int r = 0; r < P.size(); ++r)
        for (SpMat::InnerIterator it(F.G, L.s_off[k] + r); it; ++it) {
          int v = static_cast<int>(it.col());
          if (where[v] < 0) {
            where[v] = static_cast<int>(cols.size());
            cols.push_back({v, {}});
          }
          auto& pos = cols[where[v]].pos;
          int i = row_i[r], j = row_j[r];
          if (i == j) {
            pos.emplace_back(i, i, it.value());
          } else {
            pos.emplace_back(i, j, it.value() / kSqrt2);
            pos.emplace_back(j, i, it.value() / kSqrt2);
          }
        }
      psd_cols_.push_back(std::move(cols));
    }
  }

  bool factor(const Scaling& w) {
    w_ = &w;
    const Layout& L = F_.L;
    Mat H = Mat::Zero(n_, n_);
    for (int r = 0; r < L.l; ++r) {
      double d = 1.0 / (w.d[r] * w.d[r]);
      for (SpMat::InnerIterator a(F_.G, r); a; ++a)
        for (SpMat::InnerIterator b(F_.G, r); b; ++b) H(a.col(), b.col()) += d * a.value() * b.value();
    }
    for (std::size_t k = 0; k < L.q.size(); ++k) {
      Mat Y = w.qWinv[k] * soc_sub_[k];
      Mat HY = Y.transpose() * Y;
      const auto& cols = soc_cols_[k];
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) H(cols[a], cols[b]) += HY(a, b);
    }
    for (std::size_t k = 0; k < L.s.size(); ++k) {
      const Mat& S = w.Sigma[k];
      const auto& cols = psd_cols_[k];
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a; b < cols.size(); ++b) {
          double v = 0.0;
          for (const auto& [p, q, al] : cols[a].pos)
            for (const auto& [r, s, be] : cols[b].pos) v += al * be * S(q, r) * S(s, p);
          H(cols[a].var, cols[b].var) += v;
          if (a != b) H(cols[b].var, cols[a].var) += v;
        }
    }
    reg_ = 1e-10;
    K_.setZero(n_ + p_, n_ + p_);
    K_.topLeftCorner(n_, n_) = H;
    if (p_ > 0) {
      Mat Ad = Mat(F_.A);
      K_.block(0, n_, n_, p_) = Ad.transpose();
      K_.block(n_, 0, p_, n_) = Ad;
    }
    Mat Kr = K_;
    Kr.topLeftCorner(n_, n_).diagonal().array() += reg_;
    Kr.bottomRightCorner(p_, p_).diagonal().array() -= reg_;
    lu_.compute(Kr);
    return std::isfinite(Kr.norm());
  }

  // Solves K [x; y; z] = [r1; r2; r3] with iterative refinement on the full system.
  void solve(const Vec& r1, const Vec& r2, const Vec& r3, Vec& x, Vec& y, Vec& z) const {
    const Layout& L = F_.L;
    x = Vec::Zero(n_);
    y = Vec::Zero(p_);
    z = Vec::Zero(L.total);
    Vec e1 = r1, e2 = r2, e3 = r3;
    double first = -1.0;
    for (int it = 0; it < 10; ++it) {
      Vec rhs(n_ + p_);
      rhs.head(n_) = e1 + Gt_ * apply(L, *w_, Op::WtWinv, e3);
      rhs.tail(p_) = e2;
      Vec sol = lu_.solve(rhs);
      Vec dx = sol.head(n_), dy = sol.tail(p_);
      Vec dz = apply(L, *w_, Op::WtWinv, F_.G * dx - e3);
      x += dx;
      y += dy;
      z += dz;
      e1 = r1 - F_.A.transpose() * y - Gt_ * z;
      e2 = r2 - F_.A * x;
      e3 = r3 - F_.G * x + apply(L, *w_, Op::WtW, z);
      double err = std::max({e1.lpNorm<Eigen::Infinity>(), e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0,
                             e3.size() ? e3.lpNorm<Eigen::Infinity>() : 0.0});
      if (first < 0.0) first = err;
      double scale = 1.0 + std::max({r1.lpNorm<Eigen::Infinity>(),
                                     r2.size() ? r2.lpNorm<Eigen::Infinity>() : 0.0,
                                     r3.size() ? r3.lpNorm<Eigen::Infinity>() : 0.0});
      if (err <= 1e-14 * scale) break;
    }
  }

 private:
  const StandardForm& F_;
  int n_, p_;
  SpMat Gt_;
  std::vector<std::vector<int>> soc_cols_;
  std::vector<Mat> soc_sub_;
  std::vector<std::vector<PsdColumn>> psd_cols_;
  const Scaling* w_ = nullptr;
  Mat K_;
  double reg_ = 0.0;
  Eigen::PartialPivLU<Mat> lu_;
};

double norm_or0(const Vec& v) { return v.size() ? v.norm() : 0.0; }

}  // namespace

Solution solve(const ConicProgram& program, const SolverSettings& set) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  program.validate();
  Solution sol;
  StandardForm F;
  try {
    F = build_standard_form(program);
    equilibrate(F);
  } catch (const std::exception& e) {
    throw BackendFailure(std::string("conic setup failed: ") + e.what());
  }
  const Layout& L = F.L;
  const int n = F.n;

  auto finish = [&](SolveStatus st, const Vec& xs, double pobj, double dobj) {
    sol.status = st;
    sol.solve_time = elapsed();
    if (st == SolveStatus::OPTIMAL || st == SolveStatus::NUMERICAL_LIMIT) {
      sol.primal.resize(n);
      for (int i = 0; i < n; ++i) sol.primal[i] = xs[i] * F.col_scale[i];
      sol.objective = program.objective_value(sol.primal);
      (void)pobj;
    }
    sol.dual_objective = dobj + program.objective_constant();
    return sol;
  };

  // a program without cones: only equalities
  Vec x = Vec::Zero(n), y = Vec::Zero(F.A.rows()), s(L.total), z(L.total);

  KktSolver kkt(F);
  Scaling w;
  const Vec e = identity(L);
  {
    // W = I
    Vec ones = Vec::Zero(L.total);
    compute_scaling(L, e, e, w);
  }
  if (!kkt.factor(w)) throw BackendFailure("initial KKT factorization failed");
  {
    Vec xx, yy, zz;
    kkt.solve(Vec::Zero(n), F.b, F.h, xx, yy, zz);
    x = xx;
    s = -zz;
    kkt.solve(-F.c, Vec::Zero(F.A.rows()), Vec::Zero(L.total), xx, yy, zz);
    y = yy;
    z = zz;
    if (L.total > 0) {
      double ts = -cone_min(L, s);
      if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
      double tz = -cone_min(L, z);
      if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
    }
  }
  double tau = 1.0, kappa = 1.0;

  const double resx0 = std::max(1.0, F.c.norm());
  const double resy0 = std::max(1.0, norm_or0(F.b));
  const double resz0 = std::max(1.0, norm_or0(F.h));
  const double D = L.degree;
  const Vec At_y0 = Vec::Zero(n);

  double pres = kInf, dres = kInf, pcost = 0.0, dcost = 0.0;
  struct Best {
    double merit = kInf;
    Vec x;
    double pcost = 0.0, dcost = -kInf, pres = kInf, dres = kInf;
  } best;
  best.x = Vec::Zero(n);
  for (int iter = 0;; ++iter) {
    sol.iterations = iter;
    Vec Aty = F.A.transpose() * y;
    Vec Gtz = F.G.transpose() * z;
    Vec Ax = F.A * x;
    Vec Gx = F.G * x;
    double cx = F.c.dot(x), by = F.b.dot(y), hz = F.h.dot(z);
    Vec rx = Aty + Gtz + F.c * tau;
    Vec ry = F.b * tau - Ax;
    Vec rz = F.h * tau - Gx - s;
    double rt = kappa + cx + by + hz;

    pcost = cx / tau;
    dcost = -(by + hz) / tau;
    double gap = s.dot(z) / (tau * tau);
    pres = std::max(norm_or0(ry) / tau / resy0, norm_or0(rz) / tau / resz0);
    dres = rx.norm() / tau / resx0;
    double relgap = gap / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    sol.primal_residual = pres;
    sol.dual_residual = dres;

    if (set.verbose)
      std::fprintf(stderr, "%3d  %+.8e  %+.8e  %.2e  %.2e  %.2e  tau %.2e kap %.2e\n", iter,
                   pcost, dcost, gap, pres, dres, tau, kappa);

    double obj_scale_check = std::max(std::abs(pcost), std::abs(dcost));
    const double gm = std::min(relgap, gap / std::max(1.0, obj_scale_check));
    if (pres <= set.feas_tol && dres <= set.feas_tol && gm <= set.gap_tol)
      return finish(SolveStatus::OPTIMAL, x / tau, pcost, dcost);
    const double merit = std::max({pres / set.feas_tol, dres / set.feas_tol, gm / set.gap_tol});
    if (!(merit >= best.merit)) best = {merit, x / tau, pcost, dcost, pres, dres};

    // certificates only once the embedding leans towards kappa
    const double cert_tol = std::min(set.feas_tol, 1e-8);
    if (by + hz < 0.0 && tau < kappa) {
      double pinf = (Aty + Gtz).norm() / (-(by + hz)) / resx0;
      if (pinf <= cert_tol) {
        sol.status = SolveStatus::INFEASIBLE;
        sol.solve_time = elapsed();
        return sol;
      }
    }
    if (cx < 0.0 && tau < kappa) {
      double dinf = std::max(norm_or0(Ax) / resy0, norm_or0(Gx + s) / resz0) / (-cx);
      if (dinf <= cert_tol) {
        sol.status = SolveStatus::UNBOUNDED;
        sol.solve_time = elapsed();
        return sol;
      }
    }

    auto stalled = [&] {
      sol.primal_residual = best.pres;
      sol.dual_residual = best.dres;
      sol.dual_certified = best.dres <= std::max(1e-6, 100.0 * set.feas_tol);
      return finish(SolveStatus::NUMERICAL_LIMIT, best.x, best.pcost, best.dcost);
    };
    if (iter >= set.max_iter || elapsed() > set.time_limit) {
      sol.status = SolveStatus::ITERATION_LIMIT;
      sol.solve_time = elapsed();
      sol.dual_objective = dcost + program.objective_constant();
      return sol;
    }

    if (!compute_scaling(L, s, z, w)) return stalled();
    if (!kkt.factor(w)) return stalled();

    const double mu = (s.dot(z) + tau * kappa) / (D + 1.0);

    Vec x1, y1, z1;
    kkt.solve(-F.c, F.b, F.h, x1, y1, z1);
    const double den = F.c.dot(x1) + F.b.dot(y1) + F.h.dot(z1) - kappa / tau;

    Vec lamsq = jprod(L, w.lambda, w.lambda);

    struct Dir {
      Vec dx, dy, dz, ds, ds_scaled, dz_scaled;
      double dtau, dkappa;
    };
    auto direction = [&](double theta, const Vec& ds, double dk) {
      // theta scales the residuals, ds/dk are the complementarity targets
      Vec dxr = -theta * rx, dyr = -theta * ry, dzr = -theta * rz;
      double dtr = -theta * rt;
      Vec lds = jdiv(L, w, ds);
      Vec x2, y2, z2;
      kkt.solve(dxr, -dyr, -dzr - apply(L, w, Op::Wt, lds), x2, y2, z2);
      Dir d;
      d.dtau = (dtr - dk / tau - F.c.dot(x2) - F.b.dot(y2) - F.h.dot(z2)) / den;
      d.dx = x2 + d.dtau * x1;
      d.dy = y2 + d.dtau * y1;
      d.dz = z2 + d.dtau * z1;
      d.dz_scaled = apply(L, w, Op::W, d.dz);
      d.ds = theta * rz + d.dtau * F.h - F.G * d.dx;
      d.ds_scaled = apply(L, w, Op::Wtinv, d.ds);
      d.dkappa = (dk - kappa * d.dtau) / tau;
      return d;
    };
    auto max_step = [&](const Dir& d) {
      double a = std::min(scaled_step(L, w, d.ds_scaled), scaled_step(L, w, d.dz_scaled));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    Dir aff = direction(1.0, -lamsq, -tau * kappa);
    double alpha_a = std::min(1.0, max_step(aff));
    double sigma = std::pow(std::max(0.0, 1.0 - alpha_a), 3);

    Vec ds = -lamsq - jprod(L, aff.ds_scaled, aff.dz_scaled) + sigma * mu * e;
    double dk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    Dir dir = direction(1.0 - sigma, ds, dk);
    double alpha = std::min(1.0, 0.99 * max_step(dir));
    if (!(alpha > 1e-12) || !std::isfinite(alpha)) return stalled();

    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
    if (!x.allFinite() || !z.allFinite() || !s.allFinite() || !(tau > 0.0)) return stalled();
  }
}

}  // namespace netdec
