#include "gcflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "gcflow/fem.hpp"
#include "gcflow/manufactured.hpp"

namespace gcflow::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Benchmark reference velocity and length for the force coefficients.
constexpr double kRefVelocity = 0.2;
constexpr double kRefLength = 0.1;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double x = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw std::invalid_argument("config value for '" + key + "' is not a number: " + value);
  return x;
}

int parse_int(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw std::invalid_argument("config value for '" + key + "' is not an integer: " + value);
  return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config value for '" + key + "' is not a boolean: " + value);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Converge: return "converge";
    case Scenario::ChannelCompare: return "channel-compare";
    case Scenario::Dfg: return "dfg";
  }
  throw std::invalid_argument("unknown scenario");
}

Scenario scenario_from_name(std::string_view name) {
  if (name == "converge") return Scenario::Converge;
  if (name == "channel-compare") return Scenario::ChannelCompare;
  if (name == "dfg") return Scenario::Dfg;
  throw std::invalid_argument("unknown scenario name: " + std::string(name));
}

RunConfig scenario_defaults(Scenario s) {
  RunConfig c;  // field defaults are the convergence-study setup
  c.scenario = s;
  switch (s) {
    case Scenario::Converge:
      break;
    case Scenario::ChannelCompare:
      c.degree = 2;
      c.nu = 0.01;
      c.tau = 0.05;
      c.finalTime = 1.0;
      break;
    case Scenario::Dfg:
      c.degree = 2;
      c.nu = 0.001;
      c.tau = 0.01;
      c.finalTime = 2.0;
      break;
  }
  return c;
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineNumber = 0;
  while (std::getline(in, line)) {
    ++lineNumber;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineNumber) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "scenario") {
      config.scenario = scenario_from_name(value);
    } else if (key == "scheme") {
      config.scheme = forms::scheme_from_name(value);
    } else if (key == "bc") {
      config.bcMode = forms::bc_from_name(value);
    } else if (key == "levels") {
      config.levels = parse_int(key, value);
      require(config.levels >= 1, "levels must be >= 1");
    } else if (key == "level") {
      config.level = parse_int(key, value);
      require(config.level >= 0, "level must be >= 0");
    } else if (key == "degree") {
      config.degree = parse_int(key, value);
      require(config.degree >= 2, "degree must be >= 2");
    } else if (key == "tau") {
      config.tau = parse_double(key, value);
      require(config.tau > 0.0, "tau must be positive");
    } else if (key == "final_time") {
      config.finalTime = parse_double(key, value);
      require(config.finalTime > 0.0, "final_time must be positive");
    } else if (key == "nu") {
      config.nu = parse_double(key, value);
      require(config.nu > 0.0, "nu must be positive");
    } else if (key == "eta1") {
      config.eta1 = parse_double(key, value);
      require(config.eta1 >= 0.0, "eta1 must be nonnegative");
    } else if (key == "eta2") {
      config.eta2 = parse_double(key, value);
      require(config.eta2 >= 0.0, "eta2 must be nonnegative");
    } else if (key == "linf_sample_step") {
      config.linfSampleStep = parse_double(key, value);
      require(config.linfSampleStep > 0.0 && config.linfSampleStep <= 1.0,
              "linf_sample_step must lie in (0, 1]");
    } else if (key == "kappa_step") {
      config.kappaStep = parse_int(key, value);
      require(config.kappaStep >= 0, "kappa_step must be >= 0");
    } else if (key == "kappa_cap") {
      config.kappaCap = parse_int(key, value);
      require(config.kappaCap >= 1, "kappa_cap must be >= 1");
    } else if (key == "out") {
      config.outDir = value;
    } else if (key == "deterministic") {
      config.deterministic = parse_bool(key, value);
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(config, buffer.str());
}

int Table::column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("table has no column named " + std::string(name));
}

void write_csv(const Table& table, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  for (size_t i = 0; i < table.header.size(); ++i)
    std::fprintf(f, "%s%c", table.header[i].c_str(),
                 i + 1 < table.header.size() ? ',' : '\n');
  for (const auto& row : table.rows)
    for (size_t i = 0; i < row.size(); ++i)
      std::fprintf(f, "%.17g%c", row[i], i + 1 < row.size() ? ',' : '\n');
  std::fclose(f);
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read csv file: " + path);
  Table table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = cells;
      first = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) row.push_back(parse_double("csv cell", cell));
    table.rows.push_back(std::move(row));
  }
  return table;
}

double eoc(double coarse, double fine) { return std::log2(coarse / fine); }

namespace {

/// Integrals at a fixed time: squared velocity error, squared pressure
/// error, and the plain pressure error (for the gauge shift).
struct SpatialAccum {
  double v2 = 0.0;
  double p2 = 0.0;
  double p1 = 0.0;
};

SpatialAccum spatial_error(const forms::Discretization& disc, const Eigen::VectorXd& vC,
                           const Eigen::VectorXd& pC, const SpaceTimeField& exact,
                           double t) {
  SpatialAccum acc;
  const auto& vspace = disc.pair.velocity;
  const auto& pspace = disc.pair.pressure;
  for (int c = 0; c < disc.mesh->numCells(); ++c) {
    const auto& cd = disc.cells[c];
    const auto& vdofs = vspace.cellDofs[c];
    const auto& pdofs = pspace.cellDofs[c];
    for (size_t q = 0; q < cd.jxw.size(); ++q) {
      double v1h = 0.0, v2h = 0.0, ph = 0.0;
      for (size_t a = 0; a < vdofs.size(); ++a) {
        const double s = disc.vShape[q][a];
        v1h += s * vC[2 * vdofs[a]];
        v2h += s * vC[2 * vdofs[a] + 1];
      }
      for (size_t b = 0; b < pdofs.size(); ++b) ph += disc.pShape[q][b] * pC[pdofs[b]];
      const auto ve = exact.velocity ? exact.velocity(cd.xq[q], t)
                                     : std::array<double, 2>{0.0, 0.0};
      const double pe = exact.pressure ? exact.pressure(cd.xq[q], t) : 0.0;
      const double e1 = v1h - ve[0], e2 = v2h - ve[1], dp = ph - pe;
      acc.v2 += cd.jxw[q] * (e1 * e1 + e2 * e2);
      acc.p2 += cd.jxw[q] * dp * dp;
      acc.p1 += cd.jxw[q] * dp;
    }
  }
  return acc;
}

double mesh_area(const forms::Discretization& disc) {
  double area = 0.0;
  for (const auto& cd : disc.cells)
    for (const double w : cd.jxw) area += w;
  return area;
}

/// Squared pressure error with the spatial mean of the error removed:
/// integral of (dp - mean)^2 collapsed to a single pass.
double gauge_corrected(const SpatialAccum& acc, double area, bool zeroMean) {
  if (!zeroMean) return acc.p2;
  return std::max(0.0, acc.p2 - acc.p1 * acc.p1 / area);
}

}  // namespace

ErrorNorms error_norms(const forms::Discretization& disc,
                       const stepper::Trajectory& trajectory,
                       const SpaceTimeField& exact, const NormOptions& options) {
  if (trajectory.intervals.empty())
    throw std::invalid_argument("trajectory has no intervals");
  if (trajectory.intervals.front().v2.size() != disc.velocityDofs() ||
      trajectory.intervals.front().p2.size() != disc.pressureDofs())
    throw std::invalid_argument("trajectory does not match the discretization");
  if (!(options.sampleStep > 0.0 && options.sampleStep <= 1.0))
    throw std::invalid_argument("sample step must lie in (0, 1]");

  const double area = mesh_area(disc);
  const auto timeRule = fem::gauss_legendre(5);
  double v2 = 0.0, p2 = 0.0;
  double vInf = 0.0, pInf = 0.0;

  const int samples = std::max(1, static_cast<int>(std::lround(1.0 / options.sampleStep)));
  for (int n = 0; n < trajectory.steps(); ++n) {
    const auto& interval = trajectory.intervals[n];
    for (size_t q = 0; q < timeRule.points.size(); ++q) {
      const double s = timeRule.points[q];
      const double t = interval.t0 + s * interval.tau;
      const auto acc = spatial_error(disc, trajectory.velocity(n, s),
                                     trajectory.pressure(n, s), exact, t);
      v2 += interval.tau * timeRule.weights[q] * acc.v2;
      p2 += interval.tau * timeRule.weights[q] *
            gauge_corrected(acc, area, options.zeroMeanPressure);
    }
    const bool last = n + 1 == trajectory.steps();
    for (int d = 0; d <= (last ? samples : samples - 1); ++d) {
      const double s = std::min(1.0, d * options.sampleStep);
      const double t = interval.t0 + s * interval.tau;
      const auto acc = spatial_error(disc, trajectory.velocity(n, s),
                                     trajectory.pressure(n, s), exact, t);
      vInf = std::max(vInf, acc.v2);
      pInf = std::max(pInf, gauge_corrected(acc, area, options.zeroMeanPressure));
    }
  }
  return {std::sqrt(v2), std::sqrt(p2), std::sqrt(vInf), std::sqrt(pInf)};
}

double kinetic_energy(const forms::Discretization& disc,
                      const Eigen::VectorXd& velocityCoeffs) {
  if (velocityCoeffs.size() != disc.velocityDofs())
    throw std::invalid_argument("velocity vector does not match the discretization");
  const SpaceTimeField zero{};
  const auto acc = spatial_error(disc, velocityCoeffs,
                                 Eigen::VectorXd::Zero(disc.pressureDofs()), zero, 0.0);
  return 0.5 * acc.v2;
}

Table ErrorReport::table() const {
  Table t;
  t.header = {"level",
              "tau",
              "h",
              "dof_per_interval",
              "kappa2",
              "velocity_l2l2",
              "pressure_l2l2",
              "velocity_linfl2",
              "pressure_linfl2",
              "eoc_velocity_l2l2",
              "eoc_pressure_l2l2",
              "eoc_velocity_linfl2",
              "eoc_pressure_linfl2"};
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    std::array<double, 4> cur = {r.norms.velocityL2L2, r.norms.pressureL2L2,
                                 r.norms.velocityLinfL2, r.norms.pressureLinfL2};
    std::array<double, 4> rates = {kNaN, kNaN, kNaN, kNaN};
    if (i > 0) {
      const auto& p = rows[i - 1].norms;
      const std::array<double, 4> prev = {p.velocityL2L2, p.pressureL2L2,
                                          p.velocityLinfL2, p.pressureLinfL2};
      for (int k = 0; k < 4; ++k) rates[k] = eoc(prev[k], cur[k]);
    }
    t.rows.push_back({static_cast<double>(r.level), r.tau, r.h,
                      static_cast<double>(r.dofPerInterval), r.kappa2, cur[0], cur[1],
                      cur[2], cur[3], rates[0], rates[1], rates[2], rates[3]});
  }
  return t;
}

namespace {

forms::ProblemData manufactured_problem(double nu) {
  forms::ProblemData data;
  data.nu = nu;
  data.f = [nu](const mesh::Point& x, double t) { return manufactured::force(x, t, nu); };
  data.df = [nu](const mesh::Point& x, double t) {
    return manufactured::force_rate(x, t, nu);
  };
  data.g = [](const mesh::Point& x, double t) { return manufactured::velocity(x, t); };
  data.dg = [](const mesh::Point& x, double t) {
    return manufactured::velocity_rate(x, t);
  };
  return data;
}

stepper::InitialCondition manufactured_initial() {
  stepper::InitialCondition init;
  init.v = [](const mesh::Point& x) { return manufactured::velocity(x, 0.0); };
  init.dv = [](const mesh::Point& x) { return manufactured::velocity_rate(x, 0.0); };
  init.p = [](const mesh::Point& x) { return manufactured::pressure(x, 0.0); };
  init.dp = [](const mesh::Point& x) { return manufactured::pressure_rate(x, 0.0); };
  return init;
}

void append_step_rows(Table& diagnostics, const std::vector<stepper::StepRecord>& records,
                      double leadingValue, bool withLeading) {
  for (const auto& rec : records) {
    std::vector<double> row;
    if (withLeading) row.push_back(leadingValue);
    row.insert(row.end(),
               {static_cast<double>(rec.step), rec.time,
                static_cast<double>(rec.newtonIterations), rec.initialResidual,
                rec.residualNorm, rec.converged ? 1.0 : 0.0, rec.kappa2});
    diagnostics.rows.push_back(std::move(row));
  }
}

std::string joined(const std::string& dir, const char* file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace

StudyResult run_convergence_study(const RunConfig& config) {
  require(config.levels >= 1, "levels must be >= 1");
  require(config.degree >= 2, "degree must be >= 2");
  require(config.tau > 0.0 && config.finalTime > 0.0, "tau and final_time must be positive");

  StudyResult result;
  result.allConverged = true;
  result.diagnostics.header = {"level",          "step",
                               "time",           "newton_iterations",
                               "initial_residual", "final_residual",
                               "converged",      "kappa2"};

  const SpaceTimeField exact{
      [](const mesh::Point& x, double t) { return manufactured::velocity(x, t); },
      [](const mesh::Point& x, double t) { return manufactured::pressure(x, t); }};

  for (int j = 0; j < config.levels; ++j) {
    const int n = 2 << j;
    const double tau = config.tau / (1 << j);
    const int steps = std::max(1, static_cast<int>(std::lround(config.finalTime / tau)));
    const auto m = mesh::generate_unit_square(n);
    const forms::Discretization disc(m, config.degree, config.scheme, config.bcMode,
                                     {config.eta1, config.eta2});
    ErrorRow row;
    row.level = j;
    row.tau = tau;
    row.h = std::sqrt(2.0) / n;
    row.dofPerInterval = disc.dim();
    row.kappa2 = kNaN;
    row.norms = {kNaN, kNaN, kNaN, kNaN};

    stepper::MarchConfig mc;
    mc.grid = {0.0, tau, steps};
    mc.solver.threadedAssembly = !config.deterministic;
    mc.initial = manufactured_initial();
    mc.kappaStep = config.kappaStep;
    mc.kappaCap = config.kappaCap;

    try {
      const auto data = manufactured_problem(config.nu);
      const auto res = stepper::march(disc, data, mc);
      append_step_rows(result.diagnostics, res.records, j, true);
      for (const auto& rec : res.records)
        if (!std::isnan(rec.kappa2)) row.kappa2 = rec.kappa2;
      if (res.completed) {
        row.norms = error_norms(disc, res.trajectory, exact,
                                {config.linfSampleStep, true});
      } else {
        result.allConverged = false;
      }
    } catch (const std::exception&) {
      result.allConverged = false;
    }
    result.report.rows.push_back(row);
  }

  std::filesystem::create_directories(config.outDir);
  write_csv(result.report.table(), joined(config.outDir, "errors.csv"));
  write_csv(result.diagnostics, joined(config.outDir, "diagnostics.csv"));
  return result;
}

DragLift drag_lift(const mesh::Mesh& m, const fem::TaylorHoodPair& pair,
                   const Eigen::VectorXd& velocityCoeffs,
                   const Eigen::VectorXd& pressureCoeffs, double nu,
                   const mesh::ChannelGeometry& geometry) {
  if (velocityCoeffs.size() != pair.numVelocityDofs() ||
      pressureCoeffs.size() != pair.numPressureDofs())
    throw std::invalid_argument("coefficient vectors do not match the spaces");
  const double R = geometry.obstacleRadius;
  require(R > 0.0, "obstacle radius must be positive");
  const double cx = geometry.obstacleCenter[0], cy = geometry.obstacleCenter[1];
  const double tol = 1e-8 * R;

  const auto onCircle = [&](const mesh::Point& p) {
    return std::abs(std::hypot(p[0] - cx, p[1] - cy) - R) <= tol;
  };

  const auto rule = fem::gauss_legendre(pair.velocity.element.degree + 2);
  double FD = 0.0, FL = 0.0;
  bool found = false;
  for (const auto& facet : m.facets) {
    if (facet.marker != mesh::FacetMarker::Wall) continue;
    const auto ends = m.facetNodes(facet);
    if (!onCircle(m.nodes[ends[0]]) || !onCircle(m.nodes[ends[1]])) continue;
    found = true;

    const auto& pa = m.nodes[ends[0]];
    const auto& pb = m.nodes[ends[1]];
    const double len = std::hypot(pb[0] - pa[0], pb[1] - pa[1]);
    const auto nf = m.facetNormal(facet);  // outward from the fluid
    const std::array<double, 2> nrm = {-nf[0], -nf[1]};  // into the fluid
    const std::array<double, 2> tvec = {nrm[1], -nrm[0]};
    const auto geom = fem::cell_geometry(m, facet.cell);
    const auto& vdofs = pair.velocity.cellDofs[facet.cell];
    const auto& pdofs = pair.pressure.cellDofs[facet.cell];

    for (size_t k = 0; k < rule.points.size(); ++k) {
      const double sq = rule.points[k];
      mesh::Point ref;
      switch (facet.localEdge) {
        case 0: ref = {sq, 0.0}; break;
        case 1: ref = {1.0, sq}; break;
        case 2: ref = {1.0 - sq, 1.0}; break;
        default: ref = {0.0, 1.0 - sq}; break;
      }
      const Eigen::Matrix2d Jinv = geom.jacobian(ref[0], ref[1]).inverse();
      double grad[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (size_t a = 0; a < vdofs.size(); ++a) {
        const auto g = pair.velocity.element.shapeGrad(a, ref[0], ref[1]);
        const double gx = Jinv(0, 0) * g[0] + Jinv(1, 0) * g[1];
        const double gy = Jinv(0, 1) * g[0] + Jinv(1, 1) * g[1];
        for (int c = 0; c < 2; ++c) {
          const double coef = velocityCoeffs[2 * vdofs[a] + c];
          grad[c][0] += coef * gx;
          grad[c][1] += coef * gy;
        }
      }
      double ph = 0.0;
      for (size_t b = 0; b < pdofs.size(); ++b)
        ph += pair.pressure.element.shapeValue(b, ref[0], ref[1]) * pressureCoeffs[pdofs[b]];

      double dvtdn = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int d = 0; d < 2; ++d) dvtdn += tvec[i] * grad[i][d] * nrm[d];

      const double w = rule.weights[k] * len;
      FD += w * (nu * dvtdn * nrm[1] - ph * nrm[0]);
      FL -= w * (nu * dvtdn * nrm[0] - ph * nrm[1]);
    }
  }
  if (!found)
    throw std::invalid_argument("mesh has no facets on the obstacle circle");
  const double factor = 2.0 / (kRefVelocity * kRefVelocity * kRefLength);
  return {FD, FL, factor * FD, factor * FL};
}

namespace {

/// Split an interleaved velocity vector into per-component scalar fields.
std::array<Eigen::VectorXd, 2> split_components(const Eigen::VectorXd& v) {
  const Eigen::Index J = v.size() / 2;
  std::array<Eigen::VectorXd, 2> parts = {Eigen::VectorXd(J), Eigen::VectorXd(J)};
  for (Eigen::Index i = 0; i < J; ++i) {
    parts[0][i] = v[2 * i];
    parts[1][i] = v[2 * i + 1];
  }
  return parts;
}

}  // namespace

ChannelCompareResult run_channel_compare(const RunConfig& config) {
  require(config.degree >= 2, "degree must be >= 2");
  require(config.tau > 0.0 && config.finalTime > 0.0, "tau and final_time must be positive");
  const mesh::ChannelGeometry geometry{};
  const auto m = mesh::generate_channel_cylinder(geometry, config.level);
  const int steps = std::max(1, static_cast<int>(std::lround(config.finalTime / config.tau)));

  forms::ProblemData data;
  data.nu = config.nu;
  data.g = [](const mesh::Point& x, double t) -> std::array<double, 2> {
    if (x[0] > 1e-12) return {0.0, 0.0};
    return {-7.13861 * (x[1] - 0.41) * x[1] * t * t, 0.0};
  };
  data.dg = [](const mesh::Point& x, double t) -> std::array<double, 2> {
    if (x[0] > 1e-12) return {0.0, 0.0};
    return {-7.13861 * (x[1] - 0.41) * x[1] * 2.0 * t, 0.0};
  };

  stepper::MarchConfig mc;
  mc.grid = {0.0, config.tau, steps};
  mc.solver.threadedAssembly = !config.deterministic;

  ChannelCompareResult out;
  out.reynolds = kRefVelocity * kRefLength / config.nu;

  const forms::Discretization discStrong(m, config.degree, config.scheme,
                                         forms::BcMode::Strong, {config.eta1, config.eta2});
  const forms::Discretization discNitsche(m, config.degree, config.scheme,
                                          forms::BcMode::Nitsche,
                                          {config.eta1, config.eta2});
  const auto resStrong = stepper::march(discStrong, data, mc);
  const auto resNitsche = stepper::march(discNitsche, data, mc);
  out.completed = resStrong.completed && resNitsche.completed;

  Table diagnostics;
  diagnostics.header = {"run",           "step",
                        "time",          "newton_iterations",
                        "initial_residual", "final_residual",
                        "converged",     "kappa2"};
  append_step_rows(diagnostics, resStrong.records, 0.0, true);
  append_step_rows(diagnostics, resNitsche.records, 1.0, true);
  for (const auto& rec : resStrong.records)
    out.maxNewtonIterations = std::max(out.maxNewtonIterations, rec.newtonIterations);
  for (const auto& rec : resNitsche.records)
    out.maxNewtonIterations = std::max(out.maxNewtonIterations, rec.newtonIterations);

  out.crossSection.header = {"y",          "v1_strong",   "v2_strong",
                             "p_strong",   "v1_nitsche",  "v2_nitsche",
                             "p_nitsche",  "vmag_strong", "vmag_nitsche"};

  if (resStrong.trajectory.steps() == steps && resNitsche.trajectory.steps() == steps) {
    const int last = steps - 1;
    const auto vStrong = split_components(resStrong.trajectory.velocity(last, 1.0));
    const auto vNitsche = split_components(resNitsche.trajectory.velocity(last, 1.0));
    const Eigen::VectorXd pStrong = resStrong.trajectory.pressure(last, 1.0);
    const Eigen::VectorXd pNitsche = resNitsche.trajectory.pressure(last, 1.0);
    out.kineticEnergyStrong =
        kinetic_energy(discStrong, resStrong.trajectory.velocity(last, 1.0));
    out.kineticEnergyNitsche =
        kinetic_energy(discNitsche, resNitsche.trajectory.velocity(last, 1.0));

    const double xLine = geometry.obstacleCenter[0];
    const double cy = geometry.obstacleCenter[1];
    const double margin = geometry.obstacleRadius + 1e-3;
    const int nSegments = 82;
    double magDiff2 = 0.0, magRef2 = 0.0, pDiff2 = 0.0, pRef2 = 0.0;
    for (int i = 0; i <= nSegments; ++i) {
      const double y = geometry.height * i / nSegments;
      if (std::abs(y - cy) <= margin) continue;  // inside or too near the obstacle
      const mesh::Point pt = {xLine, y};
      const double v1s = fem::evaluate(discStrong.pair.velocity, vStrong[0], pt).value;
      const double v2s = fem::evaluate(discStrong.pair.velocity, vStrong[1], pt).value;
      const double ps = fem::evaluate(discStrong.pair.pressure, pStrong, pt).value;
      const double v1n = fem::evaluate(discNitsche.pair.velocity, vNitsche[0], pt).value;
      const double v2n = fem::evaluate(discNitsche.pair.velocity, vNitsche[1], pt).value;
      const double pn = fem::evaluate(discNitsche.pair.pressure, pNitsche, pt).value;
      const double magS = std::hypot(v1s, v2s);
      const double magN = std::hypot(v1n, v2n);
      out.crossSection.rows.push_back({y, v1s, v2s, ps, v1n, v2n, pn, magS, magN});
      magDiff2 += (magS - magN) * (magS - magN);
      magRef2 += magS * magS;
      pDiff2 += (ps - pn) * (ps - pn);
      pRef2 += ps * ps;
    }
    out.relVelocityDiff = std::sqrt(magDiff2 / magRef2);
    out.relPressureDiff = std::sqrt(pDiff2 / pRef2);
  } else {
    out.relVelocityDiff = kNaN;
    out.relPressureDiff = kNaN;
    out.kineticEnergyStrong = kNaN;
    out.kineticEnergyNitsche = kNaN;
  }

  std::filesystem::create_directories(config.outDir);
  write_csv(out.crossSection, joined(config.outDir, "crosssection.csv"));
  write_csv(diagnostics, joined(config.outDir, "diagnostics.csv"));
  return out;
}

double dfg_inflow(double y, double t) {
  const double profile = 4.0 * 1.5 * y * (0.41 - y) / (0.41 * 0.41);
  const double ramp = t >= 1.0 ? 1.0 : (3.0 - 2.0 * t) * t * t;
  return profile * ramp;
}

double dfg_inflow_rate(double y, double t) {
  const double profile = 4.0 * 1.5 * y * (0.41 - y) / (0.41 * 0.41);
  const double rampRate = t >= 1.0 ? 0.0 : 6.0 * t * (1.0 - t);
  return profile * rampRate;
}

DfgResult run_dfg(const RunConfig& config) {
  require(config.degree >= 2, "degree must be >= 2");
  require(config.tau > 0.0 && config.finalTime > 0.0, "tau and final_time must be positive");
  const mesh::ChannelGeometry geometry{};
  const auto m = mesh::generate_channel_cylinder(geometry, config.level);
  const int steps = std::max(1, static_cast<int>(std::lround(config.finalTime / config.tau)));
  const forms::Discretization disc(m, config.degree, config.scheme, config.bcMode,
                                   {config.eta1, config.eta2});

  forms::ProblemData data;
  data.nu = config.nu;
  data.g = [](const mesh::Point& x, double t) -> std::array<double, 2> {
    if (x[0] > 1e-12) return {0.0, 0.0};
    return {dfg_inflow(x[1], t), 0.0};
  };
  data.dg = [](const mesh::Point& x, double t) -> std::array<double, 2> {
    if (x[0] > 1e-12) return {0.0, 0.0};
    return {dfg_inflow_rate(x[1], t), 0.0};
  };

  stepper::MarchConfig mc;
  mc.grid = {0.0, config.tau, steps};
  mc.solver.threadedAssembly = !config.deterministic;

  const auto res = stepper::march(disc, data, mc);

  DfgResult out;
  out.completed = res.completed;
  out.steps = res.trajectory.steps();
  out.dragLiftSeries.header = {"step", "time", "FD", "FL", "cD", "cL",
                               "newton_iterations"};
  for (int i = 0; i < res.trajectory.steps(); ++i) {
    const auto dl = drag_lift(m, disc.pair, res.trajectory.velocity(i, 1.0),
                              res.trajectory.pressure(i, 1.0), config.nu, geometry);
    out.dragLiftSeries.rows.push_back(
        {static_cast<double>(i + 1), res.records[i].time, dl.FD, dl.FL, dl.cD, dl.cL,
         static_cast<double>(res.records[i].newtonIterations)});
  }

  Table diagnostics;
  diagnostics.header = {"step",           "time",          "newton_iterations",
                        "initial_residual", "final_residual", "converged",
                        "kappa2"};
  append_step_rows(diagnostics, res.records, 0.0, false);

  std::filesystem::create_directories(config.outDir);
  write_csv(out.dragLiftSeries, joined(config.outDir, "draglift.csv"));
  write_csv(diagnostics, joined(config.outDir, "diagnostics.csv"));
  return out;
}

}  // namespace gcflow::bench
