#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace netdec {

enum class BusType { PQ = 1, PV = 2, REF = 3, ISOLATED = 4 };

/// Bus data in per-unit. `gs`/`bs` are the shunt admittance at 1.0 p.u. voltage.
struct Bus {
  int id = 0;
  BusType type = BusType::PQ;
  double pd = 0.0;
  double qd = 0.0;
  double gs = 0.0;
  double bs = 0.0;
  double vmin = 0.9;
  double vmax = 1.1;
};

/// Polynomial generation cost c2*p^2 + c1*p + c0 with p in per-unit and the
/// result in $/hr.
struct CostPoly {
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double operator()(double p) const { return (c2 * p + c1) * p + c0; }
};

struct Generator {
  int bus = 0;
  double pmin = 0.0;
  double pmax = 0.0;
  double qmin = 0.0;
  double qmax = 0.0;
  CostPoly cost;
  bool in_service = true;
};

/// Pi-model branch. `tap == 0` means a nominal ratio of 1, `s_max == 0` means
/// no thermal limit. Angles are radians.
struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double b_charge = 0.0;
  double tap = 0.0;
  double shift = 0.0;
  double s_max = 0.0;
  double angmin = 0.0;
  double angmax = 0.0;
  bool in_service = true;
};

struct BranchAdmittance {
  std::complex<double> y_ff;
  std::complex<double> y_ft;
  std::complex<double> y_tf;
  std::complex<double> y_tt;
};

/// Per-unit network model. Out-of-service equipment stays in the vectors with
/// its status flag cleared; formulations skip it.
struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Generator> generators;
  std::vector<Branch> branches;

  /// Position of a bus id in `buses`, or -1.
  int bus_index(int id) const;
  /// Rebuilds the id lookup; call after editing `buses` by hand.
  void reindex();

 private:
  std::unordered_map<int, int> index_;
};

bool structurally_equal(const NetworkCase& a, const NetworkCase& b, double rel_tol = 1e-12);

/// Parses the MATPOWER subset used by PGLib-OPF. Throws SyntaxError or
/// SemanticError.
NetworkCase parse_matpower(std::string_view text);
NetworkCase load_matpower(const std::string& path);

/// Writes the case back as a MATPOWER file (engineering units). Reparsing the
/// output reproduces the model.
std::string to_matpower(const NetworkCase& c);

/// Throws ZeroImpedance for r = x = 0.
BranchAdmittance admittance_parameters(const Branch& branch);

enum class DiagnosticCode {
  BadBaseMva,
  DuplicateBusId,
  DanglingBusRef,
  BadVoltageBounds,
  BadGeneratorLimits,
  NegativeQuadraticCost,
  ZeroImpedance,
  BadAngleBounds,
  NoBuses,
  DisconnectedGraph,
};

std::string_view to_string(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  std::string location;  // e.g. "branch 3", "bus 7"
  int ref = 0;           // offending bus id where applicable
  std::string message;
};

std::vector<Diagnostic> validate_case(const NetworkCase& c);

/// Adjacency over in-service branches, indexed by bus position.
std::vector<std::vector<int>> bus_adjacency(const NetworkCase& c);

}  // namespace netdec
