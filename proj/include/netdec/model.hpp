#pragma once

#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "netdec/case.hpp"
#include "netdec/conic.hpp"
#include "netdec/partition.hpp"

namespace netdec {

/// Variables of the voltage-product matrix over a bus set. Only entries used
/// by some constraint are materialized; `real_embedding` adds the rest.
struct WIndex {
  std::vector<int> buses;  // case bus positions, ascending
  std::vector<int> diag;   // variable of Wr(i,i) per local bus
  /// (a, b) with a < b local indices -> variables of Wr(a,b) and Wi(a,b)
  std::map<std::pair<int, int>, std::pair<int, int>> pairs;

  int local(int bus_pos) const;
  /// Wr(i,j) for case bus positions; -1 when not materialized.
  int wr(int i, int j) const;
  /// Wi(i,j) as a signed term (Wi(j,i) = -Wi(i,j)); var -1 when absent.
  Term wi(int i, int j) const;
};

struct FlowVars {
  int pf, qf, pt, qt;
};

/// W-space feasible set of one part (or of the whole network). The program
/// holds everything except the PSD constraint.
struct SubModel {
  int part = -1;  // -1 for the monolithic model
  WIndex windex;
  ConicProgram program;
  std::vector<std::string> row_labels;  // parallel to program.rows()
  std::vector<std::string> cone_labels; // parallel to program.socs()

  std::vector<int> generators;  // case generator indices
  std::vector<int> gen_p, gen_q, gen_epi;  // epigraph var or -1
  std::vector<int> lines;       // case branch indices (the part's line set)
  std::vector<FlowVars> flows;  // parallel to lines
  std::vector<int> interior;    // bus positions with balance rows

  std::vector<int> cuts;            // global cut indices, ascending
  std::vector<int> coupling_slots;  // 4 per cut: pf, pt, qf, qt
};

/// Throws InvalidCase when validate_case reports problems.
SubModel build_submodel(const NetworkCase& c, const Partition& p, int k);
SubModel build_fullmodel(const NetworkCase& c);

/// Symmetric template of [[Wr, -Wi], [Wi, Wr]] over the bus set (side
/// 2|buses|). Pairs not yet materialized get fresh variables in `program`.
PsdBlock real_embedding(const WIndex& w, ConicProgram& program);

/// Adds ||(2 Wr_ij, 2 Wi_ij, Wr_ii - Wr_jj)|| <= Wr_ii + Wr_jj for every
/// materialized pair.
void add_pair_socs(SubModel& m);

/// Model variables for an AC operating point: W = v v^H, flows from the
/// branch equations, generator dispatch and exact epigraph values.
std::vector<double> lift_operating_point(const SubModel& m, const NetworkCase& c,
                                         const std::vector<std::complex<double>>& v,
                                         const std::vector<double>& pg,
                                         const std::vector<double>& qg);

/// Structured text listing of variables, rows and cones.
std::string dump(const SubModel& m, const NetworkCase& c);

}  // namespace netdec
