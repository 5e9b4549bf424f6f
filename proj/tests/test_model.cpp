#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>

#include "netdec/errors.hpp"
#include "netdec/model.hpp"

using namespace netdec;
using cd = std::complex<double>;

namespace {

std::string data(const std::string& rel) { return std::string(NETDEC_DATA_DIR) + "/" + rel; }

Eigen::MatrixXd eval_block(const PsdBlock& blk, const std::vector<double>& x) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(blk.dim, blk.dim);
  for (const auto& e : blk.entries) {
    M(e.row, e.col) = e.expr.eval(x);
    M(e.col, e.row) = M(e.row, e.col);
  }
  return M;
}

// Extends a lifted point with the variables real_embedding adds for pairs
// that were not materialized, in the order it creates them.
void extend_for_embedding(const WIndex& w, const std::vector<cd>& v, std::vector<double>& x) {
  const int n = static_cast<int>(w.buses.size());
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (w.pairs.count({a, b})) continue;
      cd wab = v[w.buses[a]] * std::conj(v[w.buses[b]]);
      x.push_back(wab.real());
      x.push_back(wab.imag());
    }
}

// An exact AC operating point: random voltages, loads at generator-free buses
// adjusted so that the balance holds, dispatch taken from the injections.
struct AcPoint {
  NetworkCase c;
  std::vector<cd> v;
  std::vector<double> pg, qg;
};

AcPoint make_ac_point(NetworkCase c, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int N = static_cast<int>(c.buses.size());
  AcPoint pt;
  pt.v.resize(N);
  for (int i = 0; i < N; ++i) {
    const Bus& b = c.buses[i];
    double vm = b.vmin + (0.2 + 0.6 * u01(rng)) * (b.vmax - b.vmin);
    double va = i == 0 ? 0.0 : (u01(rng) - 0.5) * 0.02;
    pt.v[i] = std::polar(vm, va);
  }
  std::vector<cd> s(N);
  for (int i = 0; i < N; ++i) s[i] = std::norm(pt.v[i]) * cd(c.buses[i].gs, -c.buses[i].bs);
  for (auto& br : c.branches) {
    br.s_max = 0.0;
    br.angmin = -std::numbers::pi / 3;
    br.angmax = std::numbers::pi / 3;
    if (!br.in_service) continue;
    int i = c.bus_index(br.from_bus), j = c.bus_index(br.to_bus);
    auto y = admittance_parameters(br);
    s[i] += pt.v[i] * std::conj(y.y_ff * pt.v[i] + y.y_ft * pt.v[j]);
    s[j] += pt.v[j] * std::conj(y.y_tf * pt.v[i] + y.y_tt * pt.v[j]);
  }
  std::vector<std::vector<int>> at(N);
  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g)
    if (c.generators[g].in_service) at[c.bus_index(c.generators[g].bus)].push_back(g);
  pt.pg.assign(c.generators.size(), 0.0);
  pt.qg.assign(c.generators.size(), 0.0);
  for (int i = 0; i < N; ++i) {
    Bus& b = c.buses[i];
    if (at[i].empty()) {
      b.pd = -s[i].real();
      b.qd = -s[i].imag();
      continue;
    }
    const double share = 1.0 / at[i].size();
    for (int g : at[i]) {
      Generator& G = c.generators[g];
      pt.pg[g] = share * (s[i].real() + b.pd);
      pt.qg[g] = share * (s[i].imag() + b.qd);
      G.pmin = std::min(G.pmin, pt.pg[g]);
      G.pmax = std::max(G.pmax, pt.pg[g]);
      G.qmin = std::min(G.qmin, pt.qg[g]);
      G.qmax = std::max(G.qmax, pt.qg[g]);
    }
  }
  pt.c = std::move(c);
  return pt;
}

}  // namespace

TEST(Embedding, RankOneVoltageGivesRankTwoBlock) {
  NetworkCase c;
  c.buses = {{.id = 1, .type = BusType::REF, .vmin = 0.9, .vmax = 1.1}, {.id = 2, .vmin = 0.9, .vmax = 1.1}};
  c.branches = {{.from_bus = 1, .to_bus = 2, .r = 0.01, .x = 0.1, .angmin = -1.0, .angmax = 1.0}};
  c.reindex();
  SubModel m = build_fullmodel(c);
  std::vector<cd> v{1.0, std::polar(1.0, std::numbers::pi / 4)};
  std::vector<double> x = lift_operating_point(m, c, v, {}, {});
  PsdBlock blk = real_embedding(m.windex, m.program);
  Eigen::MatrixXd M = eval_block(blk, x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  auto ev = es.eigenvalues();
  EXPECT_NEAR(ev[0], 0.0, 1e-12);
  EXPECT_NEAR(ev[1], 0.0, 1e-12);
  EXPECT_NEAR(ev[2], 2.0, 1e-12);
  EXPECT_NEAR(ev[3], 2.0, 1e-12);
  // [[Wr, -Wi], [Wi, Wr]] with W = v v^H
  EXPECT_NEAR(M(0, 1), std::cos(std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(M(2, 1), std::sin(-std::numbers::pi / 4), 1e-15);
  EXPECT_NEAR(M(3, 0), -M(2, 1), 1e-15);
}

TEST(Embedding, FillsMissingPairs) {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case5_pjm.m"));
  SubModel m = build_fullmodel(c);
  const int before = m.program.num_vars();
  PsdBlock blk = real_embedding(m.windex, m.program);
  EXPECT_EQ(blk.dim, 10);
  // 10 pairs among 5 buses, 6 carried by lines
  EXPECT_EQ(m.program.num_vars() - before, 2 * (10 - 6));
  std::set<std::pair<int, int>> seen;
  for (const auto& e : blk.entries) {
    EXPECT_GE(e.row, e.col);
    EXPECT_TRUE(seen.insert({e.row, e.col}).second);
  }
  EXPECT_EQ(seen.size(), 55u - 5u);  // lower triangle minus the zero diagonal of the Wi block
}

TEST(WIndex, ImaginaryPartIsAntisymmetric) {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case5_pjm.m"));
  SubModel m = build_fullmodel(c);
  for (const auto& br : c.branches) {
    int i = c.bus_index(br.from_bus), j = c.bus_index(br.to_bus);
    Term a = m.windex.wi(i, j), b = m.windex.wi(j, i);
    EXPECT_EQ(a.var, b.var);
    EXPECT_EQ(a.coef, -b.coef);
    EXPECT_EQ(m.windex.wr(i, j), m.windex.wr(j, i));
  }
  EXPECT_EQ(m.windex.wi(0, 0).var, -1);
}

TEST(Model, Case5Sizes) {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case5_pjm.m"));
  SubModel m = build_fullmodel(c);
  EXPECT_EQ(m.windex.diag.size(), 5u);
  EXPECT_EQ(m.windex.pairs.size(), 6u);
  EXPECT_EQ(m.generators.size(), c.generators.size());
  EXPECT_EQ(m.lines.size(), 6u);
  EXPECT_TRUE(m.coupling_slots.empty());
  EXPECT_EQ(m.row_labels.size(), m.program.rows().size());
  EXPECT_EQ(m.cone_labels.size(), m.program.socs().size());
  EXPECT_NO_THROW(m.program.validate());
}

TEST(Model, ObjectiveTouchesOnlyDispatchAndEpigraphs) {
  for (const char* f : {"pglib/pglib_opf_case5_pjm.m", "pglib/pglib_opf_case14_ieee__api.m"}) {
    NetworkCase c = load_matpower(data(f));
    SubModel m = build_fullmodel(c);
    std::set<int> allowed(m.gen_p.begin(), m.gen_p.end());
    for (int e : m.gen_epi)
      if (e >= 0) allowed.insert(e);
    const auto& obj = m.program.objective();
    for (int i = 0; i < m.program.num_vars(); ++i)
      if (obj[i] != 0.0) EXPECT_TRUE(allowed.count(i)) << m.program.name(i);
  }
}

TEST(Model, NoThermalConesWithoutRating) {
  NetworkCase c = load_matpower(data("cases/two_bus.m"));
  ASSERT_EQ(c.branches[0].s_max, 0.0);
  SubModel m = build_fullmodel(c);
  for (const auto& label : m.cone_labels) EXPECT_EQ(label.find("thermal"), std::string::npos);
  c.branches[0].s_max = 1.5;
  SubModel r = build_fullmodel(c);
  int thermal = 0;
  for (const auto& label : r.cone_labels) thermal += label.find("thermal") != std::string::npos;
  EXPECT_EQ(thermal, 2);
}

TEST(Model, TwoBusSplit) {
  NetworkCase c = load_matpower(data("cases/two_bus_oracle.m"));
  Partition p = compute_cuts(c, {0, 1});
  SubModel m = build_submodel(c, p, 0);
  ASSERT_EQ(m.windex.buses, (std::vector<int>{0, 1}));
  EXPECT_EQ(m.interior, (std::vector<int>{0}));
  // boundary bus keeps its voltage bounds
  const int w22 = m.windex.diag[1];
  EXPECT_DOUBLE_EQ(m.program.lower(w22), c.buses[1].vmin * c.buses[1].vmin);
  EXPECT_DOUBLE_EQ(m.program.upper(w22), c.buses[1].vmax * c.buses[1].vmax);
  int balance = 0;
  for (const auto& label : m.row_labels) {
    if (label.find("balance") != std::string::npos) {
      ++balance;
      EXPECT_NE(label.find("bus 1"), std::string::npos) << label;
    }
  }
  EXPECT_EQ(balance, 2);
  // generators only at the interior bus
  for (int g : m.generators) EXPECT_EQ(c.generators[g].bus, 1);
  ASSERT_EQ(m.coupling_slots.size(), 4u);
  EXPECT_EQ(m.program.name(m.coupling_slots[0]), "pf(1)");
  EXPECT_EQ(m.program.name(m.coupling_slots[1]), "pt(1)");
  EXPECT_EQ(m.program.name(m.coupling_slots[2]), "qf(1)");
  EXPECT_EQ(m.program.name(m.coupling_slots[3]), "qt(1)");
  std::string text = dump(m, c);
  EXPECT_NE(text.find("buses 1 2*"), std::string::npos) << text;
}

TEST(Model, CouplingSlotsFollowGlobalCutOrder) {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case14_ieee__api.m"));
  Partition p = partition_greedy(c, 3);
  for (int k = 0; k < p.num_parts; ++k) {
    SubModel m = build_submodel(c, p, k);
    ASSERT_EQ(m.coupling_slots.size(), 4 * p.part_cuts[k].size());
    for (std::size_t i = 0; i < m.cuts.size(); ++i) {
      if (i > 0) EXPECT_LT(m.cuts[i - 1], m.cuts[i]);
      const std::string line = std::to_string(p.cuts[m.cuts[i]].branch + 1);
      const char* comp[] = {"pf(", "pt(", "qf(", "qt("};
      for (int j = 0; j < 4; ++j)
        EXPECT_EQ(m.program.name(m.coupling_slots[4 * i + j]), comp[j] + line + ")");
    }
  }
}

TEST(Model, InvalidCaseIsRejected) {
  NetworkCase c = load_matpower(data("cases/two_bus.m"));
  c.buses[1].vmin = 1.2;
  EXPECT_THROW(build_fullmodel(c), InvalidCase);
}

// An exact AC point is feasible for the full model, its SOC strengthening,
// the PSD embedding and every part of a partition.
TEST(Model, AcPointIsFeasible) {
  for (const char* f : {"pglib/pglib_opf_case5_pjm.m", "pglib/pglib_opf_case14_ieee__api.m",
                        "pglib/pglib_opf_case30_ieee.m"}) {
    SCOPED_TRACE(f);
    AcPoint pt = make_ac_point(load_matpower(data(f)), 11);
    const NetworkCase& c = pt.c;

    SubModel full = build_fullmodel(c);
    std::vector<double> x = lift_operating_point(full, c, pt.v, pt.pg, pt.qg);
    EXPECT_TRUE(check_solution(full.program, x).within(1e-8)) << check_solution(full.program, x).worst();
    // the model objective equals the generation cost
    double cost = 0.0;
    for (std::size_t g = 0; g < c.generators.size(); ++g)
      if (c.generators[g].in_service) cost += c.generators[g].cost(pt.pg[g]);
    EXPECT_NEAR(full.program.objective_value(x), cost, 1e-9 * (1.0 + std::abs(cost)));

    SubModel soc = full;
    add_pair_socs(soc);
    EXPECT_TRUE(check_solution(soc.program, x).within(1e-8));

    SubModel sdp = full;
    sdp.program.add_psd(real_embedding(sdp.windex, sdp.program));
    std::vector<double> xs = x;
    extend_for_embedding(sdp.windex, pt.v, xs);
    EXPECT_TRUE(check_solution(sdp.program, xs).within(1e-8)) << check_solution(sdp.program, xs).psd;

    Partition p = partition_greedy(c, 2);
    for (int k = 0; k < 2; ++k) {
      SubModel m = build_submodel(c, p, k);
      std::vector<double> xk = lift_operating_point(m, c, pt.v, pt.pg, pt.qg);
      EXPECT_TRUE(check_solution(m.program, xk).within(1e-8));
    }
  }
}

TEST(Model, VariableBoundsAreVoltageSquares) {
  NetworkCase c = load_matpower(data("pglib/pglib_opf_case14_ieee__api.m"));
  SubModel m = build_fullmodel(c);
  for (std::size_t a = 0; a < m.windex.buses.size(); ++a) {
    const Bus& b = c.buses[m.windex.buses[a]];
    EXPECT_DOUBLE_EQ(m.program.lower(m.windex.diag[a]), b.vmin * b.vmin);
    EXPECT_DOUBLE_EQ(m.program.upper(m.windex.diag[a]), b.vmax * b.vmax);
  }
}
