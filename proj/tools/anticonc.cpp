// anticonc: exact and Monte Carlo concentration functions, bound reports,
// sweeps and verification suites.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 resource cap,
// 4 V <= G contract violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anticonc/harness.hpp"
#include "anticonc/io.hpp"

namespace {

using namespace anticonc;

enum Exit : int { kOk = 0, kVerifyFailed = 1, kInput = 2, kResource = 3, kContract = 4 };

struct QArgs {
  std::string scenario;
  bool mc = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
};

struct BoundArgs {
  std::string scenario;
  std::string which = "all";
  std::string v = "tail";
  std::string v_file;
  std::string format = "json";
};

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct SweepArgs {
  std::string file;
};

int cmd_q(const QArgs& args) {
  Scenario s = scenario_from_json(read_json_file(args.scenario));
  if (args.seed) s.seed = *args.seed;
  if (args.samples) s.mc_samples = *args.samples;
  Json out;
  out["scenario_id"] = s.id;
  if (std::isinf(s.tau)) {
    out["value"] = 1.0;
    out["method"] = "limit";
  } else if (!args.mc) {
    DiscreteDistD fa = weighted_sum_dist(s.weights, s.law_x, s.enumeration_cap);
    out["value"] = q_exact(fa, s.tau);
    out["method"] = "enumeration";
  } else {
    SampleBatch b = sample_weighted_sum(s.weights, s.law_x, s.mc_samples, s.seed);
    McEstimate e = q_monte_carlo(b, s.tau);
    out["value"] = e.estimate;
    out["method"] = "monte-carlo";
    out["stderr"] = e.stderr_;
    out["seed"] = s.seed;
    out["samples"] = s.mc_samples;
  }
  std::cout << out.dump(2) << '\n';
  return kOk;
}

void keep_only(BoundReport& r, const std::string& which) {
  if (which == "all") return;
  if (which != "esseen") r.esseen.reset();
  if (which != "thm1") {
    r.thm1.reset();
    r.thm1_tail.reset();
    r.thm1_floor.reset();
  }
  if (which != "cor1") r.cor1.reset();
  if (which != "cor2") r.cor2.reset();
  std::erase_if(r.ratios, [&](const auto& kv) { return kv.first.rfind(which, 0) != 0; });
  std::erase_if(r.flags, [&](const std::string& f) {
    return f.rfind(which, 0) != 0 && f.rfind("q:", 0) != 0;
  });
}

int cmd_bound(const BoundArgs& args) {
  Scenario s = scenario_from_json(read_json_file(args.scenario));
  VChoice choice = VChoice::tail;
  std::optional<DiscreteDist1D> custom;
  if (args.v == "floor") {
    choice = VChoice::floor_weighted;
  } else if (args.v == "file") {
    if (args.v_file.empty()) throw InputError("--v file needs --v-file");
    choice = VChoice::custom;
    try {
      custom = measure_from_json(read_json_file(args.v_file));
    } catch (const DomainError& e) {
      throw InputError(std::string("V file: ") + e.what());
    }
  }
  BoundReport r = build_report(s, choice, custom);
  keep_only(r, args.which);
  if (args.format == "csv") {
    std::cout << kCsvHeader << '\n' << csv_row(r) << '\n';
  } else {
    std::cout << to_json(r).dump(2) << '\n';
  }
  return kOk;
}

int cmd_verify(const VerifyArgs& args) {
  std::filesystem::create_directories(args.out);
  const bool all = args.suite == "all";
  std::vector<CheckReport> reports;
  std::optional<ConstantsRun> constants;
  if (all || args.suite == "holder") reports.push_back(run_holder_suite(args.seed));
  if (all || args.suite == "jensen") reports.push_back(run_jensen_suite(args.seed));
  if (all || args.suite == "cf") reports.push_back(run_cf_suite(args.seed));
  if (all || args.suite == "constants") {
    constants = run_constants_suite(args.seed);
    reports.push_back(constants->check);
  }

  Json doc;
  doc["seed"] = args.seed;
  doc["quadrature"] = to_json(default_quadrature());
  doc["suites"] = Json::array();
  bool ok = true;
  for (const auto& r : reports) {
    doc["suites"].push_back(to_json(r));
    ok = ok && r.passed();
    std::cout << r.suite << ": " << (r.passed() ? "PASS" : "FAIL") << ", " << r.instances
              << " instances";
    if (r.vacuous) std::cout << " (" << r.vacuous << " vacuous)";
    if (std::isfinite(r.worst)) {
      std::cout << ", worst " << format_double(r.worst) << " at " << r.worst_id;
    }
    std::cout << '\n';
    for (const auto& f : r.failures) std::cerr << "  " << r.suite << " failure: " << f << '\n';
  }
  doc["passed"] = ok;
  std::ofstream(std::filesystem::path(args.out) / "verify_report.json") << doc.dump(2) << '\n';
  if (constants) {
    std::ofstream csv(std::filesystem::path(args.out) / "constants.csv");
    write_constants_csv(csv, constants->estimates);
  }
  return ok ? kOk : kVerifyFailed;
}

// Theorem 1 with V = (lambda / p1) * (tail part of G): the tail measure
// rescaled to total mass lambda.
void apply_lambda_exp(BoundReport& r, double lambda) {
  const Scenario& s = r.scenario;
  std::erase_if(r.flags, [](const std::string& f) { return f.rfind("thm1_tail:", 0) == 0; });
  r.thm1_tail.reset();
  r.ratios.erase("thm1_tail");
  DiscreteDist1D tail = tail_measure(symmetrize(s.law_x), s.tau / s.epsilon);
  const double p1 = tail.total_mass();
  r.flags.push_back("thm1_tail:lambda_exp=" + format_double(lambda));
  if (!(lambda > 0.0) || !(p1 > 0.0)) {
    r.flags.push_back("thm1_tail:undefined");
    return;
  }
  if (lambda > p1 + kMassTol) {
    r.flags.push_back("thm1_tail:contract");
    return;
  }
  r.thm1_tail = detail::guarded(r.flags, "thm1_tail", [&] {
    return theorem1_rhs(s.weights, tail.scaled_mass(lambda / p1), s.tau, s.quadrature);
  });
  if (r.thm1_tail && r.q_exact && *r.q_exact > 0.0) {
    r.ratios["thm1_tail"] = *r.thm1_tail / *r.q_exact;
  }
}

int cmd_sweep(const SweepArgs& args) {
  SweepSpec spec = sweep_from_json(read_json_file(args.file));
  std::cout << kCsvHeader << '\n';
  for (double v : spec.values) {
    Scenario s = spec.base;
    BoundReport r;
    try {
      switch (spec.axis) {
        case SweepAxis::tau:
          s.tau = v;
          break;
        case SweepAxis::epsilon:
          s.epsilon = v;
          break;
        case SweepAxis::lambda_exp:
          break;
        case SweepAxis::n: {
          if (!(v >= 1.0) || v != std::floor(v)) throw InputError("n must be a positive integer");
          auto n = static_cast<std::size_t>(v);
          if (spec.family) {
            FamilySpec f = *spec.family;
            f.n = n;
            s.weights = generate_family(f);
          } else {
            if (n > s.weights.n()) throw InputError("n exceeds the number of weight rows");
            std::vector<double> e(s.weights.entries().begin(),
                                  s.weights.entries().begin() + static_cast<std::ptrdiff_t>(n * s.d()));
            s.weights = WeightMatrix(n, s.d(), std::move(e));
          }
          break;
        }
      }
      s.id = spec.base.id + "@" + format_double(v);
      r = build_report(s);
      if (spec.axis == SweepAxis::lambda_exp) apply_lambda_exp(r, v);
    } catch (const std::exception& e) {
      r = BoundReport{};
      r.scenario = s;
      r.scenario.id = spec.base.id + "@" + format_double(v);
      r.flags.push_back(std::string("error:") + e.what());
    }
    std::cout << csv_row(r) << '\n' << std::flush;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration functions of weighted sums and their upper bounds"};
  app.require_subcommand(1);

  QArgs q;
  auto* q_cmd = app.add_subcommand("q", "Exact or Monte Carlo Q(F_a, tau) for a scenario");
  q_cmd->add_option("scenario", q.scenario, "Scenario JSON file")->required();
  q_cmd->add_flag("--mc", q.mc, "Use Monte Carlo instead of enumeration");
  q_cmd->add_option("--seed", q.seed, "Monte Carlo seed (overrides the scenario)");
  q_cmd->add_option("--samples", q.samples, "Monte Carlo sample count (overrides the scenario)")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{1} << 31));

  BoundArgs b;
  auto* b_cmd = app.add_subcommand("bound", "Bound report for a scenario");
  b_cmd->add_option("scenario", b.scenario, "Scenario JSON file")->required();
  b_cmd->add_option("--which", b.which, "Bound to report")
      ->check(CLI::IsMember({"esseen", "thm1", "cor1", "cor2", "all"}));
  b_cmd->add_option("--v", b.v, "V for Theorem 1")->check(CLI::IsMember({"tail", "floor", "file"}));
  b_cmd->add_option("--v-file", b.v_file, "JSON measure {atoms, masses} for --v file");
  b_cmd->add_option("--format", b.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  VerifyArgs v;
  auto* v_cmd = app.add_subcommand("verify", "Run verification suites");
  v_cmd->add_option("--suite", v.suite, "Suite to run")
      ->check(CLI::IsMember({"holder", "jensen", "cf", "constants", "all"}));
  v_cmd->add_option("--seed", v.seed, "Suite seed");
  v_cmd->add_option("--out", v.out, "Output directory for verify_report.json and constants.csv");

  SweepArgs sw;
  auto* sw_cmd = app.add_subcommand("sweep", "CSV of bound reports along one axis");
  sw_cmd->add_option("sweep", sw.file, "Sweep JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*q_cmd) return cmd_q(q);
    if (*b_cmd) return cmd_bound(b);
    if (*v_cmd) return cmd_verify(v);
    if (*sw_cmd) return cmd_sweep(sw);
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kContract;
  } catch (const ResourceError& e) {
    std::cerr << "resource cap: " << e.what() << '\n';
    return kResource;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kOk;
}
