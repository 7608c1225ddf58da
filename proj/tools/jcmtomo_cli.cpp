// jcmtomo: determinant scans, design systems, synthetic experiments and
// maximum-likelihood reconstruction from the command line.
//
// Exit codes: 0 ok, 1 unexpected error, 2 invalid arguments, 3 singular
// design, 4 ML fit did not converge, 5 no spin convention matches.

#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "jcmtomo/analytic_moments.hpp"
#include "jcmtomo/fock_oracle.hpp"
#include "jcmtomo/io.hpp"
#include "jcmtomo/ml_reconstruct.hpp"
#include "jcmtomo/tomography.hpp"

using namespace jcmtomo;
using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitSingular = 3;
constexpr int kExitNonConvergence = 4;
constexpr int kExitNoConvention = 5;

struct Physics {
  double nbar = 2.0;
  double g = 50.0;
  double delta = 0.0;
  double nu = 0.0;
  int cutoff = 0;  // 0 = automatic

  JcmConfig config() const {
    if (!(nbar >= 0.0) || !std::isfinite(nbar)) throw InvalidArgument("--nbar must be a finite value >= 0");
    JcmConfig c = JcmConfig::from_nbar(nbar, g, delta);
    c.nu = nu;
    if (cutoff > 0) c.fock_cutoff = cutoff;
    c.validate();
    return c;
  }
};

struct Grid {
  double tmin = 0.0;
  double tmax = 400.0;
  int steps = 4000;

  TimeGrid grid() const {
    TimeGrid g{tmin, tmax, steps};
    g.validate();
    return g;
  }
};

struct Output {
  std::string path;
  std::string format;
};

void add_physics(CLI::App* cmd, Physics& p, bool with_mode = true) {
  cmd->add_option("--nbar", p.nbar, "mean photon number of the coherent field")->capture_default_str();
  cmd->add_option("--g", p.g, "coupling, angular kHz")->capture_default_str();
  cmd->add_option("--delta", p.delta, "detuning, angular kHz")->capture_default_str();
  if (with_mode)
    cmd->add_option("--nu", p.nu, "mode frequency, angular kHz (0 = interaction picture)")->capture_default_str();
  cmd->add_option("--cutoff", p.cutoff, "Fock cutoff (0 = automatic)")->capture_default_str();
}

void add_grid(CLI::App* cmd, Grid& g) {
  cmd->add_option("--tmin", g.tmin, "first time, us")->capture_default_str();
  cmd->add_option("--tmax", g.tmax, "last time, us")->capture_default_str();
  cmd->add_option("--steps", g.steps, "number of intervals")->capture_default_str();
}

void add_output(CLI::App* cmd, Output& o, const std::string& default_format) {
  o.format = default_format;
  cmd->add_option("--out", o.path, "output file (default: standard output)");
  cmd->add_option("--format", o.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void add_bloch(CLI::App* cmd, BlochVector& s) {
  cmd->add_option("--x", s.x, "initial <sigma_x>")->capture_default_str();
  cmd->add_option("--y", s.y, "initial <sigma_y>")->capture_default_str();
  cmd->add_option("--z", s.z, "initial <sigma_z>")->capture_default_str();
}

// Writes to --out or standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw InvalidArgument("cannot open '" + path + "' for writing");
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }
  bool to_stdout() const { return !file_; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<std::string> config_metadata(const JcmConfig& c) {
  return {fmt::format("nbar={} g_khz={} delta_khz={} nu_khz={} cutoff={}", io::format_double(c.nbar()),
                      io::format_double(c.g), io::format_double(c.delta), io::format_double(c.nu), c.cutoff())};
}

void print_json(std::ostream& os, const json& j) { os << j.dump(2) << '\n'; }

// ---- scan-det ---------------------------------------------------------------

int run_scan_det(const Physics& ph, const Grid& gr, std::optional<double> sigma, const Output& out) {
  const JcmConfig cfg = ph.config();
  const DeterminantScan scan = scan_determinant(cfg, gr.grid(), sigma);
  const std::string summary = fmt::format("argmax {}={} |{}|={}", scan.averaged ? "t0_us" : "t_us",
                                          io::format_double(scan.peak().t), scan.averaged ? "D_bar" : "D",
                                          io::format_double(std::abs(scan.peak().value)));
  Sink sink(out.path);
  if (out.format == "json") {
    json j = io::scan_to_json(scan);
    j["config"] = config_metadata(cfg)[0];
    if (sigma) j["sigma_us2"] = *sigma;
    print_json(sink.os(), j);
  } else {
    std::vector<std::string> meta{"jcmtomo scan-det"};
    for (auto& m : config_metadata(cfg)) meta.push_back(m);
    if (sigma) meta.push_back("sigma_us2=" + io::format_double(*sigma));
    meta.push_back(summary);
    io::write_scan_csv(sink.os(), scan, meta);
  }
  if (!sink.to_stdout()) std::cout << "# " << summary << '\n';
  return 0;
}

// ---- design -----------------------------------------------------------------

int run_design(const Physics& ph, double t, const std::string& form, bool allow_singular, const Output& out) {
  const JcmConfig cfg = ph.config();
  const DesignSystem d = build_design(cfg, t, design_form_from_string(form));
  if (d.singular() && !allow_singular) {
    std::cerr << fmt::format("error: design is singular at t={} us (det={}); pass --allow-singular to emit it\n",
                             io::format_double(t), io::format_double(d.det));
    return kExitSingular;
  }
  Sink sink(out.path);
  print_json(sink.os(), io::design_to_json(d));
  return 0;
}

DesignSystem load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read design file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("design file '" + path + "' is not valid JSON: " + e.what());
  }
  return io::design_from_json(j);
}

// ---- moments ----------------------------------------------------------------

int run_moments(const Physics& ph, const BlochVector& s, std::optional<double> t, const Grid& gr,
                const std::string& form, bool use_oracle, const Output& out) {
  const JcmConfig cfg = ph.config();
  if (!s.is_physical() && use_oracle) throw UnphysicalBloch(fmt::format("|s| = {} exceeds 1", s.norm()));
  const std::vector<double> times = t ? std::vector<double>{*t} : gr.grid().points();
  const DesignForm df = design_form_from_string(form);
  std::optional<JointState> s0;
  if (use_oracle) s0 = initial_state(s, cfg);

  std::vector<std::array<double, 4>> rows;
  for (double ti : times) {
    MomentVector m;
    if (use_oracle) {
      m = oracle_moments(evolve_analytic(*s0, cfg, ti), SpinConvention::pauli);
    } else {
      const DesignSystem d = build_design(cfg, ti, df);
      const Eigen::Vector3d v = d.m * Eigen::Vector3d(s.x, s.y, s.z) + d.b;
      m = {v(0), v(1), v(2)};
    }
    rows.push_back({ti, m.sz, m.n, m.szn});
  }

  Sink sink(out.path);
  const std::string source = use_oracle ? "oracle" : form;
  if (out.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back({{"t_us", r[0]}, {"sz", r[1]}, {"n", r[2]}, {"szn", r[3]}});
    print_json(sink.os(), {{"source", source}, {"bloch", io::bloch_to_json(s)}, {"moments", arr}});
  } else {
    sink.os() << "# jcmtomo moments source=" << source << '\n';
    sink.os() << "t_us,sz,n,szn\n";
    for (const auto& r : rows)
      sink.os() << io::format_double(r[0]) << ',' << io::format_double(r[1]) << ',' << io::format_double(r[2]) << ','
                << io::format_double(r[3]) << '\n';
  }
  return 0;
}

// ---- invert -----------------------------------------------------------------

int run_invert(const DesignSystem& d, const MomentVector& m, const Output& out) {
  if (d.singular()) {
    std::cerr << "error: design is singular (det=" << io::format_double(d.det) << ")\n";
    return kExitSingular;
  }
  const InversionResult r = invert_moments(m, d);
  Sink sink(out.path);
  if (out.format == "csv") {
    sink.os() << "x,y,z,norm,physical\n"
              << io::format_double(r.bloch.x) << ',' << io::format_double(r.bloch.y) << ','
              << io::format_double(r.bloch.z) << ',' << io::format_double(r.norm) << ',' << (r.physical ? 1 : 0)
              << '\n';
  } else {
    print_json(sink.os(), {{"bloch", io::bloch_to_json(r.bloch)},
                           {"norm", r.norm},
                           {"physical", r.physical},
                           {"cond", r.condition},
                           {"det", r.det}});
  }
  if (!r.physical) std::cerr << "warning: reconstructed Bloch vector lies outside the unit ball\n";
  return 0;
}

// ---- simulate ---------------------------------------------------------------

int run_simulate(const Physics& ph, const BlochVector& s, double t, std::int64_t shots, std::uint64_t seed,
                 const Output& out) {
  const JcmConfig cfg = ph.config();
  if (shots < 1) throw InvalidArgument("--shots must be >= 1");
  if (!s.is_physical()) throw UnphysicalBloch(fmt::format("|s| = {} exceeds 1", io::format_double(s.norm())));
  const JointState st = evolve_numeric(initial_state(s, cfg), cfg, t);
  CountRecord counts = sample_counts(joint_distribution(st), shots, seed);

  Sink sink(out.path);
  std::vector<std::string> meta{"jcmtomo simulate"};
  for (auto& m : config_metadata(cfg)) meta.push_back(m);
  meta.push_back(fmt::format("t_us={} bloch={},{},{}", io::format_double(t), io::format_double(s.x),
                             io::format_double(s.y), io::format_double(s.z)));
  meta.push_back(fmt::format("shots={} seed={} readout=pauli", shots, seed));
  io::write_counts_csv(sink.os(), counts, meta);
  return 0;
}

// ---- mlfit ------------------------------------------------------------------

int run_table1(const DesignSystem& d, const Output& out) {
  const std::vector<double> values{0.05, 0.15, 0.25, 0.30};
  const auto cells = run_symmetric_grid(d, values);
  bool all_converged = true;
  Sink sink(out.path);
  if (out.format == "csv") {
    sink.os() << "nu1,nu2,delta,status\n";
    for (const auto& c : cells) {
      sink.os() << io::format_double(c.nu1) << ',' << io::format_double(c.nu2) << ',';
      if (c.fit) {
        all_converged = all_converged && c.fit->converged;
        sink.os() << io::format_double(c.fit->delta) << ',' << (c.fit->converged ? "ok" : "not converged") << '\n';
      } else {
        sink.os() << ",unphysical input\n";
      }
    }
  } else {
    json arr = json::array();
    for (const auto& c : cells) {
      json j{{"nu1", c.nu1}, {"nu2", c.nu2}};
      if (c.fit) {
        all_converged = all_converged && c.fit->converged;
        j["delta"] = c.fit->delta;
        j["constraint_active"] = c.fit->constraint_active;
        j["converged"] = c.fit->converged;
        j["status"] = c.fit->converged ? "ok" : "not converged";
      } else {
        j["delta"] = nullptr;
        j["status"] = "unphysical input";
      }
      arr.push_back(j);
    }
    print_json(sink.os(), {{"cells", arr}});
  }
  return all_converged ? 0 : kExitNonConvergence;
}

int run_mlfit(const DesignSystem& d, const CountRecord& nu, const Output& out) {
  if (d.singular()) {
    std::cerr << "error: design is singular (det=" << io::format_double(d.det) << ")\n";
    return kExitSingular;
  }
  const MlSolution s = ml_fit(nu, d);
  Sink sink(out.path);
  if (out.format == "csv") {
    sink.os() << "# bloch=" << io::format_double(s.bloch.x) << ',' << io::format_double(s.bloch.y) << ','
              << io::format_double(s.bloch.z) << " delta=" << io::format_double(s.delta)
              << " constraint_active=" << (s.constraint_active ? 1 : 0) << " converged=" << (s.converged ? 1 : 0)
              << " iterations=" << s.iterations << '\n';
    sink.os() << "m,a,p\n";
    for (const auto& e : s.p.entries) sink.os() << e.m << ',' << e.a << ',' << io::format_double(e.value) << '\n';
  } else {
    print_json(sink.os(), io::ml_solution_to_json(s));
  }
  if (!s.converged) {
    std::cerr << "error: maximum-likelihood fit did not converge; best iterate written\n";
    return kExitNonConvergence;
  }
  return 0;
}

// ---- oracle-check -----------------------------------------------------------

SeriesEvaluator check_evaluator(SeriesForm form) {
#ifdef JCMTOMO_CORRUPT_SERIES
  // Negative control: perturb one term of the photon-number series.
  return [form](const BlochVector& s, const JcmConfig& c, double t) {
    MomentVector m = series_moments(s, c, t, form);
    m.n += 1e-3 * s.z;
    return m;
  };
#else
  return [form](const BlochVector& s, const JcmConfig& c, double t) { return series_moments(s, c, t, form); };
#endif
}

int run_oracle_check(const std::vector<double>& nbars, const std::vector<double>& deltas, double g, const Grid& gr,
                     const std::string& series, double tol) {
  const SeriesForm form = series_form_from_string(series);
  const SeriesEvaluator eval = check_evaluator(form);
  bool ok = true;
  std::array<double, 3> worst{0.0, 0.0, 0.0};
  for (double nbar : nbars) {
    for (double delta : deltas) {
      const JcmConfig cfg = JcmConfig::from_nbar(nbar, g, delta);
      const CalibrationReport r = calibration_report(cfg, gr.grid(), eval, tol);
      std::cout << fmt::format("nbar={} delta_khz={}\n", io::format_double(nbar), io::format_double(delta))
                << r.summary() << '\n';
      ok = ok && r.matched;
      if (r.matched) {
        const ConventionDeviation& d = r.chosen == SpinConvention::pauli ? r.pauli : r.half;
        for (int i = 0; i < 3; ++i) worst[static_cast<std::size_t>(i)] = std::max(worst[static_cast<std::size_t>(i)], d.per_moment[static_cast<std::size_t>(i)]);
      }
    }
  }
  if (!ok) {
    std::cout << "result: FAIL (no spin convention reproduces the series)\n";
    return kExitNoConvention;
  }
  std::cout << fmt::format("result: PASS max|dev| sz={:.3e} n={:.3e} szn={:.3e}\n", worst[0], worst[1], worst[2]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JC-model single-apparatus spin tomography"};
  app.require_subcommand(1);

  Physics ph;
  Grid gr;
  Output out_scan, out_design, out_moments, out_invert, out_simulate, out_mlfit;
  BlochVector s;
  double t = 20.0;
  std::optional<double> t_opt;
  std::optional<double> sigma;
  std::string form = "printed";
  bool allow_singular = false;

  auto* scan = app.add_subcommand("scan-det", "determinant of the design matrix over a time grid");
  add_physics(scan, ph);
  add_grid(scan, gr);
  scan->add_option("--sigma", sigma, "variance of the interaction time, us^2 (averaged determinant)");
  add_output(scan, out_scan, "csv");

  auto* design = app.add_subcommand("design", "design matrix, offset, inverse and constraint matrix at one time");
  add_physics(design, ph);
  design->add_option("--t", t, "interaction time, us")->capture_default_str();
  design->add_option("--form", form, "printed or calibrated")->check(CLI::IsMember({"printed", "calibrated"}))->capture_default_str();
  design->add_flag("--allow-singular", allow_singular, "emit a singular design instead of failing");
  add_output(design, out_design, "json");

  bool use_oracle = false;
  auto* moments = app.add_subcommand("moments", "closed-form (or oracle) moments for an initial Bloch vector");
  add_physics(moments, ph);
  add_bloch(moments, s);
  moments->add_option("--t", t_opt, "single interaction time, us (otherwise the grid)");
  add_grid(moments, gr);
  moments->add_option("--form", form, "printed or calibrated")->check(CLI::IsMember({"printed", "calibrated"}))->capture_default_str();
  moments->add_flag("--oracle", use_oracle, "propagate the truncated Fock state instead (Pauli readout)");
  add_output(moments, out_moments, "json");

  MomentVector mom;
  std::string design_path;
  auto* invert = app.add_subcommand("invert", "Bloch vector from measured moments");
  add_physics(invert, ph);
  invert->add_option("--t", t, "interaction time, us")->capture_default_str();
  invert->add_option("--form", form, "printed or calibrated")->check(CLI::IsMember({"printed", "calibrated"}))->capture_default_str();
  invert->add_option("--design", design_path, "design JSON instead of physical parameters");
  invert->add_option("--sz", mom.sz, "<sigma_z>(t)")->required();
  invert->add_option("--n", mom.n, "<n>(t)")->required();
  invert->add_option("--szn", mom.szn, "<sigma_z n>(t)")->required();
  add_output(invert, out_invert, "json");

  std::int64_t shots = 100000;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "sample joint (photon number, atom) counts from the oracle");
  add_physics(simulate, ph);
  add_bloch(simulate, s);
  simulate->add_option("--t", t, "interaction time, us")->capture_default_str();
  simulate->add_option("--shots", shots, "number of repetitions")->capture_default_str();
  simulate->add_option("--seed", seed, "random seed")->capture_default_str();
  add_output(simulate, out_simulate, "csv");

  std::string counts_path, nu_text;
  bool table1 = false;
  auto* mlfit = app.add_subcommand("mlfit", "maximum-likelihood probabilities under the Bloch-ball constraint");
  add_physics(mlfit, ph, false);  // --nu is taken by the frequencies; the design ignores the mode frequency
  mlfit->add_option("--t", t, "interaction time, us")->capture_default_str();
  mlfit->add_option("--form", form, "printed or calibrated")->check(CLI::IsMember({"printed", "calibrated"}))->capture_default_str();
  mlfit->add_option("--design", design_path, "design JSON instead of physical parameters");
  auto* counts_opt = mlfit->add_option("--counts", counts_path, "counts CSV (m,a,count[,frequency])");
  auto* nu_opt = mlfit->add_option("--nu", nu_text, "inline frequencies m:a:value,...");
  auto* table_opt = mlfit->add_flag("--table1", table1, "symmetric-frequency distance table");
  counts_opt->excludes(nu_opt)->excludes(table_opt);
  nu_opt->excludes(table_opt);
  add_output(mlfit, out_mlfit, "json");

  std::vector<double> check_nbar{0.5, 2.0, 5.0}, check_delta{0.0, 10.0, 100.0};
  double check_g = 50.0, tol = 1e-6;
  std::string series = "exact";
  Grid check_grid{0.0, 300.0, 60};
  auto* check = app.add_subcommand("oracle-check", "compare the closed-form series with the Fock-space oracle");
  check->add_option("--nbar", check_nbar, "mean photon numbers to sweep")->capture_default_str();
  check->add_option("--delta", check_delta, "detunings to sweep, angular kHz")->capture_default_str();
  check->add_option("--g", check_g, "coupling, angular kHz")->capture_default_str();
  add_grid(check, check_grid);
  check->add_option("--series", series, "printed or exact")->check(CLI::IsMember({"printed", "exact"}))->capture_default_str();
  check->add_option("--tol", tol, "maximum allowed deviation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    const auto design_for = [&](double time) {
      return design_path.empty() ? build_design(ph.config(), time, design_form_from_string(form))
                                 : load_design(design_path);
    };
    if (*scan) return run_scan_det(ph, gr, sigma, out_scan);
    if (*design) return run_design(ph, t, form, allow_singular, out_design);
    if (*moments) return run_moments(ph, s, t_opt, gr, form, use_oracle, out_moments);
    if (*invert) return run_invert(design_for(t), mom, out_invert);
    if (*simulate) return run_simulate(ph, s, t, shots, seed, out_simulate);
    if (*mlfit) {
      const DesignSystem d = design_for(t);
      if (table1) {
        if (d.singular()) {
          std::cerr << "error: design is singular\n";
          return kExitSingular;
        }
        return run_table1(d, out_mlfit);
      }
      CountRecord nu;
      if (!counts_path.empty()) {
        std::ifstream in(counts_path);
        if (!in) throw InvalidArgument("cannot read counts file '" + counts_path + "'");
        nu = io::read_counts_csv(in);
      } else if (!nu_text.empty()) {
        nu = io::parse_outcome_list(nu_text);
      } else {
        throw InvalidArgument("mlfit needs --counts, --nu or --table1");
      }
      return run_mlfit(d, nu, out_mlfit);
    }
    if (*check) return run_oracle_check(check_nbar, check_delta, check_g, check_grid, series, tol);
  } catch (const SingularDesign& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSingular;
  } catch (const NoConventionMatches& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNoConvention;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const UnphysicalBloch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const EmptySupport& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
