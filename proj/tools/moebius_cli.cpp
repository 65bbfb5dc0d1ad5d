// Command-line interface: conformal geodesics, invariant extraction, curve
// conversion, total twist, and the verification suite.
//
// Exit codes: 0 success, 1 I/O or parse error, 2 invalid mathematical input,
// 3 partial/degenerate output.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include <moebius/conformal.hpp>
#include <moebius/euclidean.hpp>
#include <moebius/geodesics.hpp>
#include <moebius/io.hpp>
#include <moebius/verify.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace moebius;

namespace {

int log_level() {
  const char* env = std::getenv("MOEBIUS_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << msg << "\n";
}

std::vector<double> make_grid(double s0, double s1, double step) {
  std::vector<double> g;
  for (double s = s0; s <= s1 + 1e-12; s += step) g.push_back(s);
  return g;
}

struct CommonOpts {
  std::string in_path, out_dir = ".";
  std::string format = "csv";
  double tol_algebra = 1e-9, tol_ode = 1e-6;
  std::uint64_t seed = 1;
};

int cmd_geodesic(const CommonOpts& common, const std::vector<double>& roots,
                 const std::vector<double>& triple_constants, double s0, double s1, double step) {
  if (!(step > 0.0) || !(s1 > s0)) {
    std::cerr << "geodesic: need step > 0 and smin < smax\n";
    return 1;
  }
  AdmissibleTriple triple;
  if (!roots.empty()) {
    triple = triple_from_roots(roots[0], roots[1], roots[2]);
  } else {
    if (triple_constants[1] == 0.0) {
      std::cerr << "inadmissible triple: C2 = 0 is the degenerate Q3 branch (system for "
                   "totally 3-degenerate geodesics); use a nonzero C2\n";
      return 2;
    }
    const auto cl = classify_triple(triple_constants[0], triple_constants[1],
                                    triple_constants[2]);
    if (cl.kind != TripleCase::Admissible) {
      const char* label = cl.kind == TripleCase::OneRealNegative ? "(i) one real negative root"
                          : cl.kind == TripleCase::AllNegative   ? "(ii) all roots negative"
                                                                 : "(iii) double positive root";
      std::cerr << "inadmissible triple: case " << label << "\n";
      return 2;
    }
    triple = cl.triple;
  }

  const auto geo = build_geodesic(triple);
  const auto& sol = geo.curvatures();
  const auto grid = make_grid(s0, s1, step);

  fs::create_directories(common.out_dir);
  const fs::path dir(common.out_dir);

  std::vector<std::vector<double>> hom_rows, chart_rows, mu_rows;
  for (double s : grid) {
    const Vec p = geo.e0(s);
    const Vec q = p / (p(0) + p(5));  // v^0 + v^5 = 1 normalization
    std::vector<double> row{s};
    for (int i = 0; i < 6; ++i) row.push_back(q(i));
    hom_rows.push_back(row);
    const Vec x = dirac_weyl_inverse(p);
    chart_rows.push_back({s, x(0), x(1), x(2), x(3)});
    mu_rows.push_back({s, sol.mu1(s), sol.mu2(s), sol.mu3(s)});
  }
  write_csv((dir / "geodesic.csv").string(),
            {"s", "e0_0", "e0_1", "e0_2", "e0_3", "e0_4", "e0_5"}, hom_rows);
  write_csv((dir / "geodesic_chart.csv").string(), {"s", "w", "y1", "y2", "y3"}, chart_rows);
  write_csv((dir / "curvatures.csv").string(), {"s", "mu1", "mu2", "mu3"}, mu_rows);

  double energy = 0.0, lightlike = 0.0;
  for (double s : grid) {
    energy = std::max(energy, std::fabs(sol.energy_residual(s)));
    const Vec p = geo.e0(s);
    lightlike = std::max(lightlike, std::fabs(inner(p, p)) / p.squaredNorm());
  }
  json report{{"C1", triple.C1},
              {"C2", triple.C2},
              {"C3", triple.C3},
              {"roots", {triple.xi_minus, triple.xi1, triple.xi2}},
              {"lambda", geo.lambda()},
              {"tau1", geo.tau1()},
              {"tau2", geo.tau2()},
              {"period", sol.period()},
              {"energy_residual", energy},
              {"lightlike_residual", lightlike}};
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";
  info("geodesic written to " + common.out_dir);
  return 0;
}

int cmd_invariants(const CommonOpts& common) {
  CsvTable table;
  SampledCurve sc;
  try {
    table = read_csv(common.in_path);
    sc = sampled_curve_from_csv(table);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }
  const int n = sc.sphere_dim;
  if (n < 2 || n > 4) {
    std::cerr << "invariants: sampled input supports 2 <= n <= 4\n";
    return 2;
  }
  const Curve c = derivatives_from_samples(sc, std::min(std::max(n + 2, 5), 6));

  fs::create_directories(common.out_dir);
  const fs::path dir(common.out_dir);
  const std::vector<double> grid(sc.ts.begin() + 4, sc.ts.end() - 4);  // trim stencil edges

  if (sc.ambient == Ambient::Euclidean) {
    const auto ed = euclidean_frenet(c, grid);
    const auto dens = conformal_density(ed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> row{ed.se[i], ed.k[i], ed.k_prime[i]};
      for (const auto& tau : ed.taus) row.push_back(tau[i]);
      row.push_back(dens[i]);
      rows.push_back(row);
    }
    std::vector<std::string> header{"se", "k", "k_prime"};
    for (int j = 2; j <= n - 1; ++j) header.push_back("tau" + std::to_string(j));
    header.push_back("density");
    write_csv((dir / "euclidean.csv").string(), header, rows);
  }

  ReduceOptions opt;
  opt.grid = grid;
  opt.require_1generic = false;
  ConformalFrenetData data;
  try {
    data = reduce_frames(c, opt);
  } catch (const std::exception& e) {
    std::cerr << "reduction failed: " << e.what() << "\n";
    return 2;
  }

  std::vector<std::vector<double>> rows;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (data.genericity_order[i] < 1) {
      ++skipped;
      continue;
    }
    std::vector<double> row{data.s[i]};
    for (int j = 1; j <= n - 1; ++j) row.push_back(data.mu(j, i));
    rows.push_back(row);
  }
  std::vector<std::string> header{"s"};
  for (int j = 1; j <= n - 1; ++j) header.push_back("mu" + std::to_string(j));
  if (!rows.empty())
    write_csv((dir / "conformal.csv").string(), header, rows);

  json intervals = json::array();
  const auto rep = classify_degeneracy(data, 1e-6);
  for (const auto& iv : rep.intervals) {
    intervals.push_back({{"order", iv.order},
                         {"t_first", data.ts[iv.first]},
                         {"t_last", data.ts[iv.last]},
                         {"isolated", iv.isolated},
                         {"witness_drift", iv.witness_drift}});
  }
  json side{{"n", n},
            {"points", grid.size()},
            {"vertex_points", skipped},
            {"degeneracy_tol", 1e-6},
            {"tolerances", {{"algebra", common.tol_algebra}, {"ode", common.tol_ode}}},
            {"degenerate_intervals", intervals}};
  std::ofstream(dir / "genericity.json") << side.dump(2) << "\n";

  if (skipped > 0) {
    std::cerr << "warning: " << skipped << " vertex points skipped (partial output)\n";
    return 3;
  }
  info("invariants written to " + common.out_dir);
  return 0;
}

int cmd_convert(const CommonOpts& common, const std::string& target) {
  CsvTable table;
  SampledCurve sc;
  try {
    table = read_csv(common.in_path);
    sc = sampled_curve_from_csv(table);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }
  Ambient want;
  if (target == "euclidean") want = Ambient::Euclidean;
  else if (target == "sphere") want = Ambient::Sphere;
  else if (target == "lightcone") want = Ambient::LightCone;
  else {
    std::cerr << "convert: unknown target '" << target << "'\n";
    return 1;
  }
  const int n = sc.sphere_dim;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header{"t"};
  const char* prefix = want == Ambient::Euclidean ? "x" : want == Ambient::Sphere ? "p" : "q";
  const int m = want == Ambient::Euclidean ? n : want == Ambient::Sphere ? n + 1 : n + 2;
  for (int i = 0; i < m; ++i)
    header.push_back(prefix + std::to_string(i + (want == Ambient::Euclidean ? 1 : 0)));
  try {
    for (std::size_t i = 0; i < sc.ts.size(); ++i) {
      const Vec& x = sc.points[i];
      Vec hom;  // common representation on the light cone
      switch (sc.ambient) {
        case Ambient::Euclidean: hom = dirac_weyl(x).rep(); break;
        case Ambient::Sphere: {
          hom = Vec(n + 2);
          hom(0) = 1.0 - x(0);
          hom.segment(1, n) = x.tail(n);
          hom(n + 1) = (1.0 + x(0)) / 2.0;
          break;
        }
        default: hom = x;
      }
      std::vector<double> row{sc.ts[i]};
      switch (want) {
        case Ambient::Euclidean: {
          const Vec y = dirac_weyl_inverse(hom);
          for (int q = 0; q < n; ++q) row.push_back(y(q));
          break;
        }
        case Ambient::Sphere: {
          const double denom = hom(0) + 2.0 * hom(n + 1);
          detail::require(std::fabs(denom) > 1e-14 * hom.norm(), "convert: point at infinity");
          row.push_back((2.0 * hom(n + 1) - hom(0)) / denom);
          for (int q = 1; q <= n; ++q) row.push_back(2.0 * hom(q) / denom);
          break;
        }
        default: {
          const Vec q = hom / (hom(0) + hom(n + 1));
          for (int i2 = 0; i2 < n + 2; ++i2) row.push_back(q(i2));
        }
      }
      rows.push_back(row);
    }
  } catch (const std::exception& e) {
    std::cerr << "convert failed: " << e.what() << "\n";
    return 2;
  }
  fs::create_directories(common.out_dir);
  write_csv((fs::path(common.out_dir) / "converted.csv").string(), header, rows);
  info("converted curve written to " + common.out_dir);
  return 0;
}

int cmd_twist(const CommonOpts& common, std::int64_t motion_seed) {
  CsvTable table;
  SampledCurve sc;
  try {
    table = read_csv(common.in_path);
    sc = sampled_curve_from_csv(table);
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  }
  if (sc.ambient != Ambient::Euclidean || sc.sphere_dim != 3) {
    std::cerr << "twist: need a curve in R^3 (columns x1,x2,x3)\n";
    return 2;
  }
  if ((sc.points.front() - sc.points.back()).norm() > 1e-6) {
    std::cerr << "twist: curve is not closed\n";
    return 2;
  }
  sc.closed = true;
  const Curve c = derivatives_from_samples(sc, 5);
  try {
    double tw;
    if (motion_seed >= 0) {
      const Curve lifted = lift_to_lightcone(c);
      const auto g = random_moebius(static_cast<std::uint64_t>(motion_seed), 3, 0.2);
      const Curve moved = act_on_curve(g, lifted);
      const Curve chart(
          c.t_min(), c.t_max(), Ambient::Euclidean, 3,
          [moved](double t, int coeffs) {
            const JetVec v = moved.jets(t, coeffs);
            return JetVec{v[1] / v[0], v[2] / v[0], v[3] / v[0]};
          },
          true, c.max_coeffs());
      tw = total_twist(chart);
    } else {
      tw = total_twist(c);
    }
    std::cout << std::setprecision(12) << "total_twist_mod1 " << tw << "\n"
              << "distance_to_integer " << mod1_distance_to_integer(tw) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "twist failed: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const CommonOpts& common, double perturb) {
  VerifyConfig cfg;
  cfg.seed = common.seed;
  cfg.perturb = perturb;
  cfg.tol_algebra = common.tol_algebra;
  cfg.tol_ode = common.tol_ode;
  const auto results = run_verification(cfg);
  json checks = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name},
                      {"pass", r.pass},
                      {"residual", r.residual},
                      {"tolerance", r.tolerance},
                      {"detail", r.detail}});
    all_pass = all_pass && r.pass;
    if (log_level() >= 1)
      std::cerr << (r.pass ? "[pass] " : "[FAIL] ") << r.name << "  residual " << r.residual
                << " tol " << r.tolerance << "\n";
  }
  json report{{"seed", cfg.seed},
              {"perturb", cfg.perturb},
              {"all_pass", all_pass},
              {"checks", checks}};
  fs::create_directories(common.out_dir);
  std::ofstream(fs::path(common.out_dir) / "verify_report.json") << report.dump(2) << "\n";
  std::cout << (all_pass ? "VERIFY PASS" : "VERIFY FAIL") << "\n";
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal geometry of curves on the n-sphere: geodesics, invariants, twist"};
  app.require_subcommand(1);

  CommonOpts common;
  std::vector<double> roots, triple_constants;
  double s_min = 0.0, s_max = 4.0, step = 0.01;
  int n_dim = 4;
  double perturb = 0.0;
  std::int64_t motion_seed = -1;
  std::string convert_target = "lightcone";

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--format", common.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--tol-algebra", common.tol_algebra, "algebraic identity tolerance");
    cmd->add_option("--tol-ode", common.tol_ode, "integrated quantity tolerance");
    cmd->add_option("--seed", common.seed, "seed for all randomized checks");
    cmd->add_option("--n", n_dim, "ambient sphere dimension");
  };

  auto* geod = app.add_subcommand("geodesic", "construct a closed-form conformal geodesic in Q4");
  add_common(geod);
  auto* opt_roots = geod->add_option("--roots", roots, "xi_minus xi1 xi2")->expected(3);
  auto* opt_triple = geod->add_option("--triple", triple_constants, "C1 C2 C3")->expected(3);
  opt_roots->excludes(opt_triple);
  geod->add_option("--range",
                   [&](const CLI::results_t& res) {
                     s_min = std::stod(res[0]);
                     s_max = std::stod(res[1]);
                     return true;
                   },
                   "smin smax")
      ->expected(2);
  geod->add_option("--step", step, "sampling step");

  auto* inv = app.add_subcommand("invariants", "extract Euclidean and conformal invariants");
  add_common(inv);
  inv->add_option("--in", common.in_path, "curve csv")->required();

  auto* conv = app.add_subcommand("convert", "convert a curve between representations");
  add_common(conv);
  conv->add_option("--in", common.in_path, "curve csv")->required();
  conv->add_option("--to", convert_target, "euclidean|sphere|lightcone");

  auto* twist = app.add_subcommand("twist", "total twist of a closed curve in R^3");
  add_common(twist);
  twist->add_option("--in", common.in_path, "curve csv")->required();
  twist->add_option("--motion-seed", motion_seed, "recompute after a seeded Moebius motion");

  auto* verify = app.add_subcommand("verify", "run the verification suite");
  add_common(verify);
  verify->add_option("--perturb", perturb, "inject a relative distortion of mu_2");

  CLI11_PARSE(app, argc, argv);

  try {
    if (geod->parsed()) {
      if (roots.empty() && triple_constants.empty()) {
        std::cerr << "geodesic: need --roots or --triple\n";
        return 1;
      }
      return cmd_geodesic(common, roots, triple_constants, s_min, s_max, step);
    }
    if (inv->parsed()) return cmd_invariants(common);
    if (conv->parsed()) return cmd_convert(common, convert_target);
    if (twist->parsed()) return cmd_twist(common, motion_seed);
    if (verify->parsed()) return cmd_verify(common, perturb);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
