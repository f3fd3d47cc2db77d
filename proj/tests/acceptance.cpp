// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
//   acceptance [--threads N] [--only 1,5,9] [--cli PATH --configs DIR --work DIR]
//
// Criterion 9 needs the CLI binary and the bundled configs; without them it
// is reported as FAIL (not skipped).

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lyap/lyap.hpp"

using namespace lyap;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string g(double v, int prec = 6) {
  std::ostringstream o;
  o.precision(prec);
  o << v;
  return o.str();
}

Verdict suite_verdict(Suite s, unsigned threads) {
  const auto led = invariant_suite(20240601, s, 1.0, threads);
  Verdict v{led.all_passed() && !led.results.empty(), ""};
  std::size_t ok = 0;
  for (const auto& r : led.results) {
    ok += r.passed;
    if (!r.passed) v.detail += " | FAILED " + r.name + " (" + r.detail + ")";
  }
  v.detail = std::to_string(ok) + "/" + std::to_string(led.results.size()) + " " + to_string(s) + " invariants" + v.detail;
  if (s == Suite::ordering || s == Suite::counterexamples)
    for (const auto& r : led.results)
      if (r.passed) v.detail += " | " + r.name + ": " + r.detail;
  return v;
}

Verdict criterion1() {
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d)
    for (double gamma : {0.01, 0.1, 0.5, 1.0, 2.0}) {
      const double a = exact_constant_exponent(d, gamma, Direction::unit(d, 0)).value;
      const double b = hyperplane_exponent_martingale(d, gamma, Direction::unit(d, 0)).value;
      const double ref = std::acosh(d * std::exp(gamma) - d + 1);
      worst = std::max({worst, std::abs(a - ref), std::abs(b - ref)});
    }
  return {worst <= 1e-10, "max |closed form - arcosh| over 15 cells, both forms = " + g(worst, 3)};
}

Verdict criterion2(unsigned threads) {
  SolverEstimatorOptions o1;
  o1.box_schedule = {100, 120};
  o1.solve.method = SolveMethod::direct;
  o1.threads = threads;
  const auto e1 = quenched_exponent(PotentialSpec::constant(0.5), Site{1}, {20, 60}, 1, o1, 0);
  SolverEstimatorOptions o2;
  o2.box_schedule = {30, 40};
  o2.solve.method = SolveMethod::gauss_seidel;
  o2.solve.tolerance = 1e-13;
  o2.threads = threads;
  const auto e2 = quenched_exponent(PotentialSpec::constant(0.5), Site{1, 0}, {10, 20}, 1, o2, 0);
  // Checked against the closed forms and against the quoted decimals
  // 1.084858 / 1.47394, which differ from them in the fourth digit.
  const double ref1 = std::acosh(std::exp(0.5)), ref2 = std::acosh(2 * std::exp(0.5) - 1);
  const double err1 = std::max(std::abs(e1.value - ref1), std::abs(e1.value - 1.084858));
  const double err2 = std::max(std::abs(e2.value - ref2), std::abs(e2.value - 1.47394));
  return {err1 <= 1e-3 && err2 <= 1e-2, "d=1: " + g(e1.value, 8) + " vs " + g(ref1, 8) + " (max |err| " + g(err1, 2) +
                                            " <= 1e-3); d=2: " + g(e2.value, 8) + " vs " + g(ref2, 8) + " (max |err| " +
                                            g(err2, 2) + " <= 1e-2)"};
}

Verdict criterion5(unsigned threads) {
  const auto a = laplace_limit_check(1, Direction{1.0}, 0.5, {1e-4}, 100000, 505, threads);
  const auto b = laplace_limit_check(2, Direction{1.0, 0.0}, 1.0, {1e-4}, 100000, 506, threads);
  auto line = [](const char* tag, const LaplaceReport& r) {
    const auto& p = r.points.back();
    return std::string(tag) + ": est " + g(p.estimate.mean) + " +- " + g(p.estimate.stderr, 2) + " vs " + g(r.target) +
           " (|diff| " + g(std::abs(p.estimate.mean - r.target), 2) + " <= tol " + g(p.tolerance, 2) + ")";
  };
  return {a.pass && b.pass, line("d=1 c=1/2", a) + "; " + line("d=2 c=1", b)};
}

Verdict criterion6(unsigned threads) {
  SweepPlan cf;
  cf.spec = PotentialSpec::constant(1.0).scaled(Scaling::gamma_scaled, 1.0);
  cf.gamma_grid = {1e-8};
  cf.ell = Site{1, 0};
  const double r8 = run_scaling_sweep(cf).points[0].ratio;
  const bool closed = std::abs(r8 - 2.0) <= 1e-3;

  SweepPlan mc;
  mc.spec = PotentialSpec::bernoulli(0.5, 0.0, 1.0).scaled(Scaling::gamma_scaled, 1.0);
  mc.gamma_grid = {1e-2, 1e-3};
  mc.ell = Site{1, 0};
  mc.method = Method::annealed_localtime;
  mc.tolerance = 0.1;
  mc.seed = 606;
  mc.mc.threads = threads;
  SweepBudget b;
  b.paths = 400000;
  b.k_scaled = std::make_pair(4.0, 16.0);
  mc.budgets = {b};
  const auto rep = run_scaling_sweep(mc);
  std::string pts;
  for (const auto& p : rep.points)
    pts += " gamma=" + g(p.gamma) + ": " + (p.estimate ? g(p.ratio) + " +- " + g(p.ratio_error, 2) : "error " + p.error) + ";";
  const bool stochastic = rep.all_within_tolerance && rep.distance_decreasing;
  return {closed && stochastic, "closed form ratio at 1e-8 = " + g(r8, 10) + "; local-time vs sqrt(2) = " + g(rep.target) +
                                    ":" + pts + " within 10%: " + (rep.all_within_tolerance ? "yes" : "no") +
                                    ", distance decreasing: " + (rep.distance_decreasing ? "yes" : "no")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion9(const std::string& cli, const std::string& configs, const std::string& work) {
  if (cli.empty() || configs.empty() || !fs::exists(cli) || !fs::is_directory(configs))
    return {false, "needs --cli and --configs"};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(configs))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  const fs::path root = work.empty() ? fs::temp_directory_path() / "lyap_acceptance" : fs::path(work);
  std::size_t same = 0;
  std::string bad;
  for (const auto& f : files) {
    std::ifstream in(f);
    const auto j = nlohmann::json::parse(in, nullptr, true, true);
    const std::string cmd = j.at("command").get<std::string>();
    const std::string name = f.stem().string();
    int codes[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = root / (run ? "b" : "a") / name;
      const std::string line = "\"" + cli + "\" " + cmd + " --config \"" + f.string() + "\" --threads " +
                               (run ? "3" : "1") + " --format json,csv,svg --force --out \"" + out.string() + "\" > \"" +
                               (root / (name + (run ? ".b.log" : ".a.log"))).string() + "\" 2>&1";
      fs::create_directories(root);
      codes[run] = std::system(line.c_str());
    }
    bool ok = codes[0] == codes[1];
    for (const char* ext : {".json", ".csv", ".svg"}) {
      const auto a = root / "a" / name / (cmd + ext), b = root / "b" / name / (cmd + ext);
      if (fs::exists(a) != fs::exists(b) || (fs::exists(a) && slurp(a) != slurp(b))) ok = false;
    }
    if (!fs::exists(root / "a" / name / (cmd + ".json"))) ok = false;
    if (ok) ++same;
    else bad += " " + name;
  }
  return {!files.empty() && same == files.size(),
          std::to_string(same) + "/" + std::to_string(files.size()) +
              " bundled configs byte-identical (JSON/CSV/SVG) across two runs with --threads 1 and 3" +
              (bad.empty() ? "" : "; differing:" + bad)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  unsigned threads = 0;
  std::string only, cli, configs, work;
  app.add_option("--threads", threads, "worker threads (0 = machine parallelism)");
  app.add_option("--only", only, "comma-separated criteria to run");
  app.add_option("--cli", cli, "path to lyap_cli (criterion 9)");
  app.add_option("--configs", configs, "bundled config directory (criterion 9)");
  app.add_option("--work", work, "scratch directory (criterion 9)");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  {
    std::stringstream ss(only);
    std::string item;
    while (std::getline(ss, item, ',')) selected.insert(std::stoi(item));
  }
  const std::vector<std::pair<int, std::function<Verdict()>>> criteria = {
      {1, [] { return criterion1(); }},
      {2, [&] { return criterion2(threads); }},
      {3, [&] { return suite_verdict(Suite::identities, threads); }},
      {4, [&] { return suite_verdict(Suite::paths, threads); }},
      {5, [&] { return criterion5(threads); }},
      {6, [&] { return criterion6(threads); }},
      {7, [&] { return suite_verdict(Suite::ordering, threads); }},
      {8, [&] { return suite_verdict(Suite::counterexamples, threads); }},
      {9, [&] { return criterion9(cli, configs, work); }},
  };
  int failed = 0;
  for (const auto& [n, run] : criteria) {
    if (!selected.empty() && !selected.count(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << v.detail << " [" << g(secs, 3) << " s]"
              << std::endl;
    failed += !v.pass;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all passed"))
            << std::endl;
  return failed ? 1 : 0;
}
