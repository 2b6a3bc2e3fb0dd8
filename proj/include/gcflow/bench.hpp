#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "gcflow/forms.hpp"
#include "gcflow/mesh.hpp"
#include "gcflow/stepper.hpp"

namespace gcflow::bench {

/// Benchmark scenarios offered by the command-line harness.
enum class Scenario { Converge, ChannelCompare, Dfg };
const char* scenario_name(Scenario s);
Scenario scenario_from_name(std::string_view name);

/// One run of the harness.  `tau` is the coarsest-level step size for the
/// convergence study and the plain step size everywhere else; `levels` only
/// applies to the study, `level` picks the channel mesh for the other two
/// scenarios.
struct RunConfig {
  Scenario scenario = Scenario::Converge;
  forms::Scheme scheme = forms::Scheme::Gcc13;
  forms::BcMode bcMode = forms::BcMode::Nitsche;
  int levels = 3;
  int level = 0;
  int degree = 4;  ///< velocity degree r; the pressure degree is r - 1
  double tau = 1.0;
  double finalTime = 1.0;
  double nu = 1.0;
  double eta1 = 35.0;
  double eta2 = 35.0;
  double linfSampleStep = 0.001;  ///< time-sample spacing as a fraction of tau
  int kappaStep = 1;   ///< 1-based step whose system gets a condition number; 0 = never
  int kappaCap = 5000; ///< dense-SVD size cap for condition numbers
  std::string outDir = ".";
  bool deterministic = false;  ///< single-threaded assembly
};

/// Scenario presets: study on the unit square (Q4-Q3, nu = 1, three joint
/// refinements), laminar channel comparison (nu = 0.01, 20 steps to T = 1),
/// ramped-inflow channel run (nu = 0.001, 200 steps of 0.01).
RunConfig scenario_defaults(Scenario s);

/// Apply `key = value` configuration text (one pair per line, '#' comments).
/// Every RunConfig field is addressable; unknown keys or malformed values
/// throw std::invalid_argument.
void apply_config_text(RunConfig& config, const std::string& text);
void apply_config_file(RunConfig& config, const std::string& path);

/// Numeric table with named columns, written as CSV with 17 significant
/// digits so values round-trip exactly.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const;  ///< index; throws if absent
};
void write_csv(const Table& table, const std::string& path);
Table read_csv(const std::string& path);

/// Experimental order of convergence between two errors at jointly halved
/// (tau, h).
double eoc(double coarse, double fine);

/// Reference space-time fields an approximate trajectory is compared against.
struct SpaceTimeField {
  std::function<std::array<double, 2>(const mesh::Point&, double)> velocity;
  std::function<double(const mesh::Point&, double)> pressure;
};

struct NormOptions {
  double sampleStep = 0.001;  ///< max-in-time sample spacing (fraction of tau)
  bool zeroMeanPressure = false;  ///< gauge-align the pressure error per time
};

struct ErrorNorms {
  double velocityL2L2 = 0.0;
  double pressureL2L2 = 0.0;
  double velocityLinfL2 = 0.0;
  double pressureLinfL2 = 0.0;
};

/// Space-time error norms of a trajectory: L2-in-time composed with the
/// spatial L2 norm (5-point Gauss per interval), and the max over sampled
/// times of the spatial L2 norm.  Throws std::invalid_argument when the
/// trajectory does not match the discretization's dof counts.
ErrorNorms error_norms(const forms::Discretization& disc,
                       const stepper::Trajectory& trajectory,
                       const SpaceTimeField& exact, const NormOptions& options = {});

/// Kinetic energy (1/2) * integral of |v_h|^2 over the mesh.
double kinetic_energy(const forms::Discretization& disc,
                      const Eigen::VectorXd& velocityCoeffs);

struct ErrorRow {
  int level = 0;
  double tau = 0.0;
  double h = 0.0;
  int dofPerInterval = 0;
  double kappa2 = 0.0;  ///< NaN when not measured
  ErrorNorms norms;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  /// Tabular form including the four EOC columns (NaN on the first row).
  Table table() const;
};

struct StudyResult {
  ErrorReport report;
  Table diagnostics;
  bool allConverged = false;
};

/// Manufactured-solution refinement study: level j runs 2^j steps of size
/// tau / 2^j on the 2^(j+1) x 2^(j+1) unit-square mesh.  Writes errors.csv
/// and diagnostics.csv into the output directory.  Solver failures mark the
/// level's error columns NaN and the study continues.
StudyResult run_convergence_study(const RunConfig& config);

/// Forces and coefficients on the circular obstacle.
struct DragLift {
  double FD = 0.0;
  double FL = 0.0;
  double cD = 0.0;
  double cL = 0.0;
};

/// Line integrals of the traction components over the obstacle polygon; the
/// surface normal points from the obstacle into the fluid.  Coefficients are
/// scaled by the benchmark reference velocity 0.2 and length 0.1.  Throws
/// std::invalid_argument when the mesh has no facets on the obstacle circle.
DragLift drag_lift(const mesh::Mesh& m, const fem::TaylorHoodPair& pair,
                   const Eigen::VectorXd& velocityCoeffs,
                   const Eigen::VectorXd& pressureCoeffs, double nu,
                   const mesh::ChannelGeometry& geometry);

struct ChannelCompareResult {
  Table crossSection;
  double relVelocityDiff = 0.0;  ///< on velocity magnitude over the samples
  double relPressureDiff = 0.0;
  double reynolds = 0.0;
  double kineticEnergyStrong = 0.0;
  double kineticEnergyNitsche = 0.0;
  int maxNewtonIterations = 0;
  bool completed = false;
};

/// Runs the same laminar channel flow once with strong and once with weak
/// boundary treatment and samples both solutions along the vertical line
/// x = 0.2 at the final time (points inside the obstacle excluded).  Writes
/// crosssection.csv and diagnostics.csv.
ChannelCompareResult run_channel_compare(const RunConfig& config);

/// Inlet profile of the ramped channel benchmark: parabola peaking at 1.5,
/// smoothly increased until t = 1 and constant afterwards.
double dfg_inflow(double y, double t);
double dfg_inflow_rate(double y, double t);

struct DfgResult {
  Table dragLiftSeries;
  bool completed = false;
  int steps = 0;
};

/// Ramped-inflow flow around the cylinder; emits the drag/lift coefficient
/// series per step (draglift.csv) plus diagnostics.csv.
DfgResult run_dfg(const RunConfig& config);

}  // namespace gcflow::bench
