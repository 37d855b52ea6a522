// SPDX-License-Identifier: Apache-2.0
//
// dkplab: command-line front end.  Subcommands: analyze, decompose,
// conjugate, solve, probe, report.  Configuration comes from a TOML-style
// key-value file with CLI flag overrides (flags > file > defaults).
// Exit codes: 0 success, 2 validation error, 3 numerical error.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "dkp/carleson.hpp"
#include "dkp/chgvar.hpp"
#include "dkp/codim.hpp"
#include "dkp/config.hpp"
#include "dkp/elliptic.hpp"
#include "dkp/field.hpp"
#include "dkp/functionals.hpp"
#include "dkp/mesh.hpp"
#include "dkp/probes.hpp"
#include "dkp/report.hpp"
#include "dkp/smoothing.hpp"

namespace {

using namespace dkp;
namespace fs = std::filesystem;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

struct CliState {
  std::string config_path;
  std::string timestamp;
  KeyValueConfig overrides;

  ExperimentConfig load() const {
    KeyValueConfig kv;
    if (!config_path.empty()) kv = KeyValueConfig::parse_file(config_path);
    for (const auto& [k, v] : overrides.values()) kv.set(k, v);
    return ExperimentConfig::from(kv);
  }
  std::string stamp() const {
    return timestamp.empty() ? utc_now() : timestamp;
  }
};

void add_common_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--config", st.config_path, "TOML-style config file");
  cmd->add_option("--timestamp", st.timestamp,
                  "override the generated_at stamp (for reproducible output)");
  auto opt = [cmd, &st](const std::string& flag, const std::string& key,
                        const std::string& help) {
    cmd->add_option_function<std::string>(
        flag, [&st, key](const std::string& v) { st.overrides.set(key, v); },
        help);
  };
  opt("--n", "mesh.n", "ambient dimension (2 or 3)");
  opt("--J", "mesh.J", "resolution exponent");
  opt("--preset", "field.preset", "coefficient field preset");
  opt("--delta", "field.delta", "preset amplitude");
  opt("--ell", "field.ell", "vertical decay scale of dkp_smooth");
  opt("--E", "field.E", "perturbation direction (e11|cross|mix)");
  opt("--field-seed", "field.seed", "preset seed");
  opt("--p", "probe.p", "Lebesgue exponent p");
  opt("--q", "probe.q", "Lebesgue exponent q");
  opt("--eps", "probe.eps", "target for sup |t grad B|");
  opt("--family", "probe.family", "data family (trig | trig+bumps)");
  opt("--seed", "probe.seed", "probe seed");
  opt("--trials", "probe.trials", "randomized trial count");
  opt("--data", "probe.data", "boundary data (cos:k | sin:k | bump:c)");
  opt("--norm", "probe.norm", "analyze norm (weak_dkp|dkp|linfty|cm)");
  opt("--scalar", "probe.scalar", "scalar field for cm norm (zero|one|sqrt_t)");
  opt("--detect", "probe.detect", "1 to run divergence detection");
  opt("--out", "output.dir", "output directory");
}

MatrixField field_from(const ExperimentConfig& c) {
  std::map<std::string, double> p = {{"delta", c.delta},
                                     {"ell", c.ell},
                                     {"seed", static_cast<double>(c.field_seed)}};
  return make_preset(c.preset, c.n, p, c.ename);
}

TrigPoly data_from(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg =
      (colon == std::string::npos) ? "" : spec.substr(colon + 1);
  if (kind == "cos" || kind == "sin") {
    const int k = arg.empty() ? 1 : std::stoi(arg);
    if (k < 1 || k > 64) throw ConfigError("data: mode k must be in [1,64]");
    TrigPoly f;
    if (kind == "cos")
      f.modes.push_back({k, 1.0, 0.0});
    else
      f.modes.push_back({k, 0.0, 1.0});
    return f;
  }
  if (kind == "bump") {
    const double c = arg.empty() ? 0.5 : std::stod(arg);
    return TrigPoly::from_samples([c](double x) {
      double d = x - c;
      d -= std::round(d);
      const double u = d / 0.18;
      return (std::fabs(u) < 1.0) ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
    });
  }
  throw ConfigError("unknown data spec: " + spec);
}

std::vector<DataCase> family_from(const ExperimentConfig& c) {
  if (c.family == "trig") return standard_family(false);
  if (c.family == "trig+bumps") return standard_family(true);
  throw ConfigError("unknown family: " + c.family);
}

ScalarField scalar_from(const std::string& name) {
  if (name == "zero") return [](const Vec&, double) { return 0.0; };
  if (name == "one") return [](const Vec&, double) { return 1.0; };
  if (name == "sqrt_t") return [](const Vec&, double t) { return std::sqrt(t); };
  throw ConfigError("unknown scalar preset: " + name);
}

// ------------------------------------------------------------ commands

int cmd_analyze(const CliState& st) {
  const ExperimentConfig cfg = st.load();
  HalfSpaceMesh mesh(cfg.n, cfg.J);
  DivergenceOptions opts{cfg.detect, true};
  CarlesonReport rep;
  if (cfg.norm == "cm") {
    rep = cm_norm(scalar_from(cfg.scalar), mesh, opts);
  } else {
    const MatrixField a = field_from(cfg);
    if (cfg.norm == "weak_dkp")
      rep = weak_dkp_norm(a, mesh, opts);
    else if (cfg.norm == "dkp")
      rep = dkp_norm(a, mesh, opts);
    else if (cfg.norm == "linfty")
      rep = linfty_whitney_norm(a, mesh, opts);
    else
      throw ConfigError("unknown norm: " + cfg.norm);
  }
  Json body = carleson_report_json(rep);
  body["command"] = "analyze";
  body["norm_kind"] = cfg.norm;
  body["preset"] = cfg.preset;
  body["J"] = cfg.J;
  write_report_json(cfg.out_dir, body, st.stamp());
  write_tent_csv(cfg.out_dir, rep);
  std::cout << body.dump(2) << "\n";
  return 0;
}

int cmd_decompose(const CliState& st, bool dump) {
  const ExperimentConfig cfg = st.load();
  const MatrixField a = field_from(cfg);
  HalfSpaceMesh mesh(cfg.n, cfg.J);
  const Decomposition dec = decompose(a, cfg.eps, mesh);
  Json body;
  body["command"] = "decompose";
  body["preset"] = cfg.preset;
  body["lambda"] = dec.lambda;
  body["eps_achieved"] = dec.eps_achieved;
  body["eps_initial"] = dec.eps_initial;
  body["M_B"] = dec.m_b;
  body["M_C"] = dec.m_c;
  body["ellipticity"] = dec.ellipticity;
  write_report_json(cfg.out_dir, body, st.stamp());
  if (dump) {
    std::ostringstream os;
    os.precision(12);
    os << "x,t";
    for (int r = 0; r < a.n; ++r)
      for (int c = 0; c < a.n; ++c) os << ",B" << r << c;
    for (int r = 0; r < a.n; ++r)
      for (int c = 0; c < a.n; ++c) os << ",C" << r << c;
    os << "\n";
    for (int k = 0; k < mesh.N; ++k)
      for (int i = 0; i < mesh.N; ++i) {
        const Vec x = mesh.cell_center_x(i);
        const double t = mesh.cell_t(k);
        const Mat b = dec.b.eval(x, t), c = dec.c.eval(x, t);
        os << x[0] << "," << t;
        for (int r = 0; r < a.n; ++r)
          for (int cc = 0; cc < a.n; ++cc) os << "," << b(r, cc);
        for (int r = 0; r < a.n; ++r)
          for (int cc = 0; cc < a.n; ++cc) os << "," << c(r, cc);
        os << "\n";
      }
    fs::create_directories(cfg.out_dir);
    write_text(fs::path(cfg.out_dir) / "decomposition.csv", os.str());
  }
  std::cout << body.dump(2) << "\n";
  return 0;
}

int cmd_conjugate(const CliState& st) {
  const ExperimentConfig cfg = st.load();
  const MatrixField a = field_from(cfg);
  HalfSpaceMesh mesh(cfg.n, std::min(cfg.J, 5));
  const Decomposition dec = decompose(a, cfg.eps, HalfSpaceMesh(cfg.n, 4));
  const ChangeOfVariable rho = build_rho(dec.b, 2000);
  const MatrixField a_rho = conjugate(a, rho);
  const StructureDiagnostics diag = structure_check(a_rho, mesh, cfg.J <= 4);
  Json body;
  body["command"] = "conjugate";
  body["preset"] = cfg.preset;
  body["lambda"] = dec.lambda;
  body["eps_achieved"] = dec.eps_achieved;
  body["invertible"] = rho.invertible;
  body["sup_jacobian"] = rho.sup_jac;
  body["sup_jacobian_inverse"] = rho.sup_jac_inv;
  body["last_row_deviation"] = carleson_report_json(diag.last_row_deviation);
  if (cfg.J <= 4)
    body["upper_block_dkp"] = carleson_report_json(diag.upper_block_dkp);
  write_report_json(cfg.out_dir, body, st.stamp());
  std::cout << body.dump(2) << "\n";
  return 0;
}

int cmd_solve(const CliState& st) {
  const ExperimentConfig cfg = st.load();
  const MatrixField a = field_from(cfg);
  HalfSpaceMesh mesh(cfg.n, cfg.J);
  const TrigPoly f = data_from(cfg.data);
  const DiscreteSolution sol = solve_dirichlet(a, f, mesh);
  Json body;
  body["command"] = "solve";
  body["preset"] = cfg.preset;
  body["data"] = cfg.data;
  body["J"] = cfg.J;
  body["residual"] = sol.residual;
  body["iterations"] = sol.iterations;
  body["method"] = sol.method;
  body["energy"] = energy(a, mesh, sol);
  write_report_json(cfg.out_dir, body, st.stamp());
  std::ostringstream os;
  os.precision(12);
  os << "x,t,u\n";
  for (int l = 0; l <= mesh.N; ++l)
    for (int i = 0; i < mesh.N; ++i)
      os << i * mesh.h << "," << l * mesh.h << ","
         << sol.nodal[static_cast<std::size_t>(l) * mesh.N + i] << "\n";
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / "u.csv", os.str());
  std::cout << body.dump(2) << "\n";
  return 0;
}

int cmd_probe(const CliState& st, const std::string& name) {
  const ExperimentConfig cfg = st.load();
  Json body;
  ProbeReport rep;
  bool have_probe_report = true;
  if (name == "dirichlet") {
    rep = dirichlet_probe(field_from(cfg), cfg.p, family_from(cfg), cfg.J);
  } else if (name == "regularity") {
    rep = regularity_probe(field_from(cfg), cfg.p, family_from(cfg), cfg.J);
  } else if (name == "perturbation") {
    const MatrixField c =
        make_carleson_bump(cfg.n, cfg.delta, cfg.field_seed, cfg.ename);
    rep = perturbation_probe(field_from(cfg), c, cfg.p, cfg.J);
  } else if (name == "bilipschitz") {
    const BilipschitzReport br =
        bilipschitz_stability_probe(field_from(cfg), cfg.eps, cfg.J);
    rep = br.ratios;
    for (const auto& c : br.l2) {
      ProbeCase lc = c;
      lc.id = "l2:" + lc.id;
      rep.cases.push_back(lc);
    }
    rep.params["lambda"] = br.lambda;
    rep.params["sup_h"] = br.sup_h;
  } else if (name == "ibp") {
    std::vector<int> Js;
    for (int j = 4; j <= cfg.J; ++j) Js.push_back(j);
    if (Js.empty()) Js.push_back(cfg.J);
    const auto cases = ibp_identity_probe(Js);
    rep.probe = "ibp";
    rep.preset = "smooth-bump";
    rep.params = {{"J", static_cast<double>(cfg.J)}};
    for (const auto& c : cases) {
      ProbeCase pc;
      pc.id = "i" + std::to_string(c.i) + "j" + std::to_string(c.j) + "@J" +
              std::to_string(c.J);
      pc.num = c.residual;
      pc.den = std::fabs(c.t_direct);
      pc.ratio = (pc.den > 0) ? pc.num / pc.den : 0.0;
      rep.cases.push_back(pc);
    }
    rep.finalize();
  } else if (name == "moser") {
    const MoserReport mr = moser_probe(field_from(cfg), data_from(cfg.data), cfg.J);
    rep.probe = "moser";
    rep.preset = cfg.preset;
    rep.params = {{"J", static_cast<double>(cfg.J)}};
    ProbeCase pc;
    pc.id = "max";
    pc.num = mr.max_ratio;
    pc.den = 1.0;
    pc.ratio = mr.max_ratio;
    rep.cases.push_back(pc);
    rep.finalize();
  } else if (name == "poisson-duality") {
    const PoissonDualityReport pr =
        poisson_duality_probe(field_from(cfg), cfg.q, cfg.J);
    rep.probe = "poisson-duality";
    rep.preset = cfg.preset;
    rep.params = {{"J", static_cast<double>(cfg.J)},
                  {"q", cfg.q},
                  {"witness_ratio", pr.witness_ratio}};
    ProbeCase pc;
    pc.id = "S+N";
    pc.num = pr.s_norm;
    pc.den = pr.n_norm;
    pc.ratio = pr.total;
    rep.cases.push_back(pc);
    rep.finalize();
  } else if (name == "embedding") {
    const EmbeddingCorpusReport er = embedding_corpus(cfg.trials, cfg.seed, cfg.J);
    rep.probe = "embedding";
    rep.preset = "random-corpus";
    rep.params = {{"J", static_cast<double>(cfg.J)},
                  {"trials", static_cast<double>(cfg.trials)},
                  {"seed", static_cast<double>(cfg.seed)}};
    ProbeCase pc;
    pc.id = "max";
    pc.num = er.max_ratio;
    pc.den = 1.0;
    pc.ratio = er.max_ratio;
    rep.cases.push_back(pc);
    rep.finalize();
  } else if (name == "codim-radial") {
    const RadialIdentityReport rr = radial_identity_probe(data_from(cfg.data),
                                                          std::min(cfg.J, 6));
    rep.probe = "codim-radial";
    rep.preset = "weighted-identity";
    rep.params = {{"J", static_cast<double>(rr.J)}};
    ProbeCase pc;
    pc.id = "l2";
    pc.num = rr.l2_err;
    pc.den = 1.0 / (1 << rr.J);
    pc.ratio = pc.num / pc.den;
    rep.cases.push_back(pc);
    ProbeCase pm;
    pm.id = "theta-dependence";
    pm.num = rr.theta_dependence;
    pm.den = 1.0;
    pm.ratio = rr.theta_dependence;
    rep.cases.push_back(pm);
    rep.finalize();
  } else if (name == "codim-identities") {
    const CylIdentityReport cr = cylindrical_derivative_check(cfg.trials, cfg.seed);
    rep.probe = "codim-identities";
    rep.preset = "trig";
    rep.params = {{"samples", static_cast<double>(cfg.trials)}};
    for (auto [id, v] :
         {std::pair<const char*, double>{"chain", cr.max_chain_residual},
          {"radial-angle", cr.max_radial_angle},
          {"angular-on-radial", cr.max_angular_on_radial}}) {
      ProbeCase pc;
      pc.id = id;
      pc.num = v;
      pc.den = 1.0;
      pc.ratio = v;
      rep.cases.push_back(pc);
    }
    rep.finalize();
  } else {
    throw ConfigError("unknown probe: " + name);
  }
  if (have_probe_report) {
    body = probe_report_json(rep);
    write_report_json(cfg.out_dir, body, st.stamp());
    write_cases_csv(cfg.out_dir, rep);
    write_probe_dat(cfg.out_dir, rep);
  }
  std::cout << body.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& files, const std::string& out) {
  if (files.empty()) throw ConfigError("report: need at least one report.json");
  std::vector<MergedRow> rows = merge_reports(files, std::cerr);
  if (rows.empty()) throw ConfigError("report: no valid report files");
  const std::string csv = merged_csv(rows);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "merged.csv", csv);
    // per-probe plot files
    std::map<std::string, std::ostringstream> dats;
    for (const auto& r : rows) {
      auto& os = dats[r.probe];
      if (os.tellp() == 0) os << "# J p max_ratio spread\n";
      os << r.J << " " << r.p << " " << r.max_ratio << " " << r.spread << "\n";
    }
    for (auto& [probe, os] : dats)
      write_text(fs::path(out) / (probe + ".dat"), os.str());
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dkplab: a numerical laboratory for elliptic boundary value "
               "problems under Carleson-measure coefficient conditions"};
  app.require_subcommand(1);

  CliState st;
  std::string probe_name;
  std::vector<std::string> report_files;
  std::string report_out;
  bool dump = false;

  CLI::App* analyze = app.add_subcommand("analyze", "Carleson / DKP norms");
  add_common_flags(analyze, st);
  CLI::App* dec = app.add_subcommand("decompose", "smoothing decomposition");
  add_common_flags(dec, st);
  dec->add_flag("--dump", dump, "dump B and C sampled on the mesh");
  CLI::App* conj = app.add_subcommand("conjugate", "flattening diagnostics");
  add_common_flags(conj, st);
  CLI::App* solve = app.add_subcommand("solve", "Dirichlet solve");
  add_common_flags(solve, st);
  CLI::App* probe = app.add_subcommand("probe", "run a named probe");
  probe->add_option("name", probe_name, "probe name")->required();
  add_common_flags(probe, st);
  CLI::App* report = app.add_subcommand("report", "merge probe reports");
  report->add_option("files", report_files, "report.json files");
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) return cmd_analyze(st);
    if (dec->parsed()) return cmd_decompose(st, dump);
    if (conj->parsed()) return cmd_conjugate(st);
    if (solve->parsed()) return cmd_solve(st);
    if (probe->parsed()) return cmd_probe(st, probe_name);
    if (report->parsed()) return cmd_report(report_files, report_out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return (code == 0) ? 0 : 2;
  } catch (const dkp::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dkp::NotApplicableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dkp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
