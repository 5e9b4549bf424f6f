#include "netdec/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "netdec/errors.hpp"

namespace netdec {

int WIndex::local(int bus_pos) const {
  auto it = std::lower_bound(buses.begin(), buses.end(), bus_pos);
  return it != buses.end() && *it == bus_pos ? static_cast<int>(it - buses.begin()) : -1;
}

int WIndex::wr(int i, int j) const {
  int a = local(i), b = local(j);
  if (a < 0 || b < 0) return -1;
  if (a == b) return diag[a];
  auto it = pairs.find({std::min(a, b), std::max(a, b)});
  return it == pairs.end() ? -1 : it->second.first;
}

Term WIndex::wi(int i, int j) const {
  int a = local(i), b = local(j);
  if (a < 0 || b < 0 || a == b) return {-1, 0.0};
  auto it = pairs.find({std::min(a, b), std::max(a, b)});
  if (it == pairs.end()) return {-1, 0.0};
  return {it->second.second, a < b ? 1.0 : -1.0};
}

namespace {

std::string bus_label(const NetworkCase& c, int pos) { return std::to_string(c.buses[pos].id); }

void ensure_valid(const NetworkCase& c) {
  auto diags = validate_case(c);
  if (diags.empty()) return;
  std::string msg = "case failed validation:";
  for (const auto& d : diags)
    msg += " [" + std::string(to_string(d.code)) + " at " + d.location + "]";
  throw InvalidCase(msg);
}

SubModel build(const NetworkCase& c, int part, const std::vector<int>& interior,
               const std::vector<int>& lines, const Partition* partition) {
  ensure_valid(c);
  SubModel m;
  m.part = part;
  m.interior = interior;
  m.lines = lines;
  ConicProgram& prog = m.program;

  std::set<int> bus_set(interior.begin(), interior.end());
  for (int l : lines) {
    bus_set.insert(c.bus_index(c.branches[l].from_bus));
    bus_set.insert(c.bus_index(c.branches[l].to_bus));
  }
  WIndex& w = m.windex;
  w.buses.assign(bus_set.begin(), bus_set.end());
  for (int pos : w.buses) {
    const Bus& b = c.buses[pos];
    std::string id = bus_label(c, pos);
    w.diag.push_back(prog.add_variable(b.vmin * b.vmin, b.vmax * b.vmax, "Wr(" + id + "," + id + ")"));
  }
  for (int l : lines) {
    const Branch& br = c.branches[l];
    int a = w.local(c.bus_index(br.from_bus)), b = w.local(c.bus_index(br.to_bus));
    if (a == b) continue;
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (w.pairs.count(key)) continue;
    std::string tag = bus_label(c, w.buses[key.first]) + "," + bus_label(c, w.buses[key.second]);
    int wr = prog.add_variable(0.0, kInf, "Wr(" + tag + ")");
    int wi = prog.add_variable(-kInf, kInf, "Wi(" + tag + ")");
    w.pairs[key] = {wr, wi};
  }

  // generators at interior buses
  std::vector<std::vector<int>> gens_at(c.buses.size());
  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
    const Generator& gen = c.generators[g];
    if (!gen.in_service) continue;
    int pos = c.bus_index(gen.bus);
    if (!std::binary_search(interior.begin(), interior.end(), pos)) continue;
    std::string tag = std::to_string(g + 1);
    int p = prog.add_variable(gen.pmin, gen.pmax, "pg(" + tag + ")");
    int q = prog.add_variable(gen.qmin, gen.qmax, "qg(" + tag + ")");
    int epi = -1;
    const CostPoly& cp = gen.cost;
    if (cp.c2 > 0.0) {
      epi = prog.add_variable(-kInf, kInf, "cost(" + tag + ")");
      prog.set_objective(epi, 1.0);
      // (t - c1 p - c0) / c2 >= p^2
      Affine x = Affine::var(epi, 1.0 / cp.c2);
      x.add(p, -cp.c1 / cp.c2);
      x.constant = -cp.c0 / cp.c2;
      prog.add_rotated_soc(x, Affine(1.0), {Affine::var(p)});
      m.cone_labels.push_back("cost gen " + tag);
    } else {
      prog.add_objective(p, cp.c1);
      prog.add_objective_constant(cp.c0);
    }
    m.generators.push_back(g);
    m.gen_p.push_back(p);
    m.gen_q.push_back(q);
    m.gen_epi.push_back(epi);
    gens_at[pos].push_back(static_cast<int>(m.generators.size()) - 1);
  }

  auto row = [&](std::vector<Term> t, double lo, double up, std::string label) {
    prog.add_row(std::move(t), lo, up);
    m.row_labels.push_back(std::move(label));
  };

  for (int l : lines) {
    const Branch& br = c.branches[l];
    const int i = c.bus_index(br.from_bus), j = c.bus_index(br.to_bus);
    const std::string tag = std::to_string(l + 1);
    FlowVars f;
    f.pf = prog.add_variable(-kInf, kInf, "pf(" + tag + ")");
    f.qf = prog.add_variable(-kInf, kInf, "qf(" + tag + ")");
    f.pt = prog.add_variable(-kInf, kInf, "pt(" + tag + ")");
    f.qt = prog.add_variable(-kInf, kInf, "qt(" + tag + ")");
    m.flows.push_back(f);

    const BranchAdmittance y = admittance_parameters(br);
    const double gff = y.y_ff.real(), bff = y.y_ff.imag();
    const double gft = y.y_ft.real(), bft = y.y_ft.imag();
    const double gtf = y.y_tf.real(), btf = y.y_tf.imag();
    const double gtt = y.y_tt.real(), btt = y.y_tt.imag();
    const int wii = w.wr(i, i), wjj = w.wr(j, j), wij = w.wr(i, j);
    const Term wi = w.wi(i, j);
    const double s = wi.coef;
    row({{f.pf, 1.0}, {wii, -gff}, {wij, -gft}, {wi.var, -s * bft}}, 0.0, 0.0, "flow pf line " + tag);
    row({{f.qf, 1.0}, {wii, bff}, {wi.var, -s * gft}, {wij, bft}}, 0.0, 0.0, "flow qf line " + tag);
    row({{f.pt, 1.0}, {wjj, -gtt}, {wij, -gtf}, {wi.var, s * btf}}, 0.0, 0.0, "flow pt line " + tag);
    row({{f.qt, 1.0}, {wjj, btt}, {wi.var, s * gtf}, {wij, btf}}, 0.0, 0.0, "flow qt line " + tag);

    if (br.s_max > 0.0) {
      prog.add_soc({Affine(br.s_max), Affine::var(f.pf), Affine::var(f.qf)});
      m.cone_labels.push_back("thermal from line " + tag);
      prog.add_soc({Affine(br.s_max), Affine::var(f.pt), Affine::var(f.qt)});
      m.cone_labels.push_back("thermal to line " + tag);
    }
    // tan(angmin) Wr <= Wi <= tan(angmax) Wr
    row({{wi.var, s}, {wij, -std::tan(br.angmax)}}, -kInf, 0.0, "angle max line " + tag);
    row({{wi.var, s}, {wij, -std::tan(br.angmin)}}, 0.0, kInf, "angle min line " + tag);
  }

  for (int pos : interior) {
    const Bus& b = c.buses[pos];
    std::vector<Term> pr, qr;
    for (int g : gens_at[pos]) {
      pr.push_back({m.gen_p[g], 1.0});
      qr.push_back({m.gen_q[g], 1.0});
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const Branch& br = c.branches[lines[k]];
      if (c.bus_index(br.from_bus) == pos) {
        pr.push_back({m.flows[k].pf, -1.0});
        qr.push_back({m.flows[k].qf, -1.0});
      }
      if (c.bus_index(br.to_bus) == pos) {
        pr.push_back({m.flows[k].pt, -1.0});
        qr.push_back({m.flows[k].qt, -1.0});
      }
    }
    int wii = w.wr(pos, pos);
    if (b.gs != 0.0) pr.push_back({wii, -b.gs});
    if (b.bs != 0.0) qr.push_back({wii, b.bs});
    row(std::move(pr), b.pd, b.pd, "balance p bus " + bus_label(c, pos));
    row(std::move(qr), b.qd, b.qd, "balance q bus " + bus_label(c, pos));
  }

  if (partition) {
    for (int cut : partition->part_cuts[part]) {
      int l = partition->cuts[cut].branch;
      auto it = std::find(lines.begin(), lines.end(), l);
      const FlowVars& f = m.flows[it - lines.begin()];
      m.cuts.push_back(cut);
      m.coupling_slots.insert(m.coupling_slots.end(), {f.pf, f.pt, f.qf, f.qt});
    }
  }
  return m;
}

}  // namespace

SubModel build_submodel(const NetworkCase& c, const Partition& p, int k) {
  if (k < 0 || k >= p.num_parts)
    throw DimensionMismatch("part " + std::to_string(k + 1) + " out of range");
  return build(c, k, p.part_buses[k], p.part_lines[k], &p);
}

SubModel build_fullmodel(const NetworkCase& c) {
  std::vector<int> all(c.buses.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<int> lines;
  for (std::size_t l = 0; l < c.branches.size(); ++l)
    if (c.branches[l].in_service) lines.push_back(static_cast<int>(l));
  return build(c, -1, all, lines, nullptr);
}

PsdBlock real_embedding(const WIndex& w, ConicProgram& prog) {
  const int n = static_cast<int>(w.buses.size());
  PsdBlock blk;
  blk.dim = 2 * n;
  for (int a = 0; a < n; ++a) {
    blk.entries.push_back({a, a, Affine::var(w.diag[a])});
    blk.entries.push_back({n + a, n + a, Affine::var(w.diag[a])});
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      int wr, wi;
      auto it = w.pairs.find({a, b});
      if (it != w.pairs.end()) {
        wr = it->second.first;
        wi = it->second.second;
      } else {
        wr = prog.add_variable();
        wi = prog.add_variable();
      }
      blk.entries.push_back({b, a, Affine::var(wr)});
      blk.entries.push_back({n + b, n + a, Affine::var(wr)});
      blk.entries.push_back({n + a, b, Affine::var(wi)});
      blk.entries.push_back({n + b, a, Affine::var(wi, -1.0)});
    }
  return blk;
}

void add_pair_socs(SubModel& m) {
  const WIndex& w = m.windex;
  for (const auto& [key, vars] : w.pairs) {
    int wii = w.diag[key.first], wjj = w.diag[key.second];
    Affine head = Affine::var(wii);
    head.add(wjj, 1.0);
    Affine diff = Affine::var(wii);
    diff.add(wjj, -1.0);
    m.program.add_soc({head, Affine::var(vars.first, 2.0), Affine::var(vars.second, 2.0), diff});
    m.cone_labels.push_back("pair soc");
  }
}

std::vector<double> lift_operating_point(const SubModel& m, const NetworkCase& c,
                                         const std::vector<std::complex<double>>& v,
                                         const std::vector<double>& pg,
                                         const std::vector<double>& qg) {
  std::vector<double> x(m.program.num_vars(), 0.0);
  const WIndex& w = m.windex;
  for (std::size_t a = 0; a < w.buses.size(); ++a) x[w.diag[a]] = std::norm(v[w.buses[a]]);
  for (const auto& [key, vars] : w.pairs) {
    std::complex<double> wab = v[w.buses[key.first]] * std::conj(v[w.buses[key.second]]);
    x[vars.first] = wab.real();
    x[vars.second] = wab.imag();
  }
  for (std::size_t k = 0; k < m.lines.size(); ++k) {
    const Branch& br = c.branches[m.lines[k]];
    auto y = admittance_parameters(br);
    auto vi = v[c.bus_index(br.from_bus)], vj = v[c.bus_index(br.to_bus)];
    std::complex<double> sf = vi * std::conj(y.y_ff * vi + y.y_ft * vj);
    std::complex<double> st = vj * std::conj(y.y_tf * vi + y.y_tt * vj);
    x[m.flows[k].pf] = sf.real();
    x[m.flows[k].qf] = sf.imag();
    x[m.flows[k].pt] = st.real();
    x[m.flows[k].qt] = st.imag();
  }
  for (std::size_t g = 0; g < m.generators.size(); ++g) {
    int gi = m.generators[g];
    x[m.gen_p[g]] = pg[gi];
    x[m.gen_q[g]] = qg[gi];
    if (m.gen_epi[g] >= 0) x[m.gen_epi[g]] = c.generators[gi].cost(pg[gi]);
  }
  return x;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string terms_text(const ConicProgram& p, const std::vector<Term>& terms) {
  std::string s;
  for (const auto& t : terms) {
    if (!s.empty()) s += t.coef < 0 ? " - " : " + ";
    else if (t.coef < 0) s += "-";
    double a = std::abs(t.coef);
    if (a != 1.0) s += num(a) + "*";
    s += p.name(t.var).empty() ? "x" + std::to_string(t.var) : p.name(t.var);
  }
  return s.empty() ? "0" : s;
}

std::string affine_text(const ConicProgram& p, const Affine& a) {
  std::string s = a.terms.empty() ? "" : terms_text(p, a.terms);
  if (a.constant != 0.0 || s.empty()) s += (s.empty() ? "" : (a.constant < 0 ? " - " : " + ")) +
                                           num(s.empty() ? a.constant : std::abs(a.constant));
  return s;
}

}  // namespace

std::string dump(const SubModel& m, const NetworkCase& c) {
  const ConicProgram& p = m.program;
  std::ostringstream os;
  os << "submodel " << (m.part < 0 ? std::string("full") : std::to_string(m.part + 1)) << "\n";
  os << "buses";
  for (int pos : m.windex.buses) {
    bool inner = std::binary_search(m.interior.begin(), m.interior.end(), pos);
    os << " " << c.buses[pos].id << (inner ? "" : "*");
  }
  os << "\nvariables " << p.num_vars() << "\n";
  for (int i = 0; i < p.num_vars(); ++i) {
    os << "  " << i << " " << (p.name(i).empty() ? "x" + std::to_string(i) : p.name(i)) << " ["
       << num(p.lower(i)) << ", " << num(p.upper(i)) << "]";
    if (p.objective()[i] != 0.0) os << " obj " << num(p.objective()[i]);
    os << "\n";
  }
  if (p.objective_constant() != 0.0) os << "objective constant " << num(p.objective_constant()) << "\n";
  os << "rows " << p.rows().size() << "\n";
  for (std::size_t r = 0; r < p.rows().size(); ++r) {
    const auto& row = p.rows()[r];
    os << "  " << m.row_labels[r] << ": ";
    if (row.lower == row.upper)
      os << terms_text(p, row.terms) << " = " << num(row.lower);
    else
      os << num(row.lower) << " <= " << terms_text(p, row.terms) << " <= " << num(row.upper);
    os << "\n";
  }
  os << "cones " << p.socs().size() << "\n";
  for (std::size_t k = 0; k < p.socs().size(); ++k) {
    const auto& e = p.socs()[k].entries;
    os << "  " << m.cone_labels[k] << ": ||(";
    for (std::size_t j = 1; j < e.size(); ++j) os << (j > 1 ? ", " : "") << affine_text(p, e[j]);
    os << ")|| <= " << affine_text(p, e[0]) << "\n";
  }
  os << "coupling";
  for (int v : m.coupling_slots) os << " " << p.name(v);
  os << "\n";
  return os.str();
}

}  // namespace netdec
