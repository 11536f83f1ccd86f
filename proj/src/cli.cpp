#include "weightforge/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "weightforge/programs.hpp"
#include "weightforge/regularity.hpp"
#include "weightforge/rng.hpp"

namespace weightforge {

namespace {

struct ProblemContext {
  json problem;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  int budget = 64;
  double p = 2.0;
  bool has_p = false;
  std::string digest;
};

ProblemContext parse_problem(const std::string& command, const json& problem,
                             const CliOverrides& overrides) {
  require_keys(problem,
               {"version", "seed", "tol", "budget", "p", "operator", "kernel",
                "family", "space", "params"},
               "problem");
  if (!problem.contains("version") || problem["version"] != "1")
    throw std::invalid_argument("problem: missing or unsupported version tag");

  ProblemContext ctx;
  ctx.problem = problem;
  ctx.digest = json_digest(problem);
  if (problem.contains("seed")) ctx.seed = problem["seed"].get<std::uint64_t>();
  if (problem.contains("tol")) ctx.tol = problem["tol"].get<double>();
  if (problem.contains("budget")) ctx.budget = problem["budget"].get<int>();
  if (overrides.seed) ctx.seed = *overrides.seed;
  if (overrides.tol) ctx.tol = *overrides.tol;
  if (overrides.budget) ctx.budget = *overrides.budget;
  if (problem.contains("p")) {
    ctx.has_p = true;
    ctx.p = problem["p"].is_string() ? kInf : problem["p"].get<double>();
  }
  if (!(ctx.tol > 0.0)) throw std::invalid_argument("problem: tol must be positive");
  if (ctx.budget < 1) throw std::invalid_argument("problem: budget must be >= 1");

  static const std::map<std::string, std::vector<const char*>> param_keys{
      {"rho", {"family_size"}},
      {"lambda", {"family_size", "pool_size"}},
      {"dominate", {"C", "y_star"}},
      {"endo", {"C", "N"}},
      {"conjugate", {"C"}},
      {"kernel", {}},
      {"counterexample", {"n_values", "q", "constants"}},
  };
  auto it = param_keys.find(command);
  if (it != param_keys.end() && problem.contains("params")) {
    const auto& allowed = it->second;
    for (auto pit = problem["params"].begin(); pit != problem["params"].end(); ++pit) {
      bool ok = false;
      for (const char* k : allowed)
        if (pit.key() == k) ok = true;
      if (!ok)
        throw std::invalid_argument("params: unknown field '" + pit.key() +
                                    "' for command " + command);
    }
  }
  return ctx;
}

json params_of(const ProblemContext& ctx) {
  return ctx.problem.contains("params") ? ctx.problem["params"] : json::object();
}

OperatorModel required_operator(const ProblemContext& ctx) {
  if (!ctx.problem.contains("operator"))
    throw std::invalid_argument("problem: this command needs an 'operator' block");
  return operator_from_json(ctx.problem["operator"]);
}

double required_exponent(const ProblemContext& ctx) {
  if (!ctx.has_p) throw std::invalid_argument("problem: this command needs 'p'");
  return ctx.p;
}

json report_header(const char* command, const ProblemContext& ctx) {
  json r{{"command", command},
         {"version", "1"},
         {"seed", ctx.seed},
         {"tol", ctx.tol},
         {"budget", ctx.budget},
         {"inputs_digest", ctx.digest}};
  if (ctx.has_p) r["p"] = is_inf(ctx.p) ? json("inf") : json(ctx.p);
  return r;
}

json upper_to_json(const UpperEstimate& u) {
  json j{{"empirical_upper", u.empirical}, {"route", u.route}};
  j["upper"] = u.certified ? json(*u.certified) : json("unknown");
  return j;
}

CommandResult cmd_rho(const ProblemContext& ctx) {
  auto op = required_operator(ctx);
  double p = required_exponent(ctx);
  auto params = params_of(ctx);
  int family_size = params.value("family_size", 3);

  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;
  auto lo = rho_lower(op, p, family_size, ctx.budget, ctx.seed);
  auto up = rho_upper(op, p, ctx.tol, sopts);

  CommandResult out;
  out.report = report_header("rho", ctx);
  out.report["operator"] = to_json(op);
  json rho = upper_to_json(up.upper);
  rho["lower"] = lo.value;
  out.report["rho"] = std::move(rho);
  out.report["witness"] = lo.vectors;
  auto cert = certificate_to_json(up.certificate);
  out.report["certificate_id"] = cert["id"];
  out.report["certificates"] = json::array({std::move(cert)});
  out.exit_code = up.upper.certified ? 0 : 2;
  return out;
}

CommandResult cmd_lambda(const ProblemContext& ctx) {
  auto op = required_operator(ctx);
  double p = required_exponent(ctx);
  auto params = params_of(ctx);
  int family_size = params.value("family_size", 3);
  int pool_size = params.value("pool_size", 0);

  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;
  auto lo = lambda_lower(op, p, family_size, ctx.budget, ctx.seed);
  auto up = lambda_upper(op, p, pool_size, ctx.tol, sopts);

  CommandResult out;
  out.report = report_header("lambda", ctx);
  out.report["operator"] = to_json(op);
  json lam = upper_to_json(up.upper);
  lam["lower"] = lo.value;
  out.report["lambda"] = std::move(lam);
  out.report["witness"] = lo.vectors;
  auto cert = certificate_to_json(up.certificate);
  out.report["certificate_id"] = cert["id"];
  out.report["certificates"] = json::array({std::move(cert)});
  out.exit_code = up.upper.certified ? 0 : 2;
  return out;
}

CommandResult cmd_dominate(const ProblemContext& ctx) {
  auto op = required_operator(ctx);
  double p = required_exponent(ctx);
  auto params = params_of(ctx);
  if (!params.contains("C"))
    throw std::invalid_argument("params: dominate needs the constant 'C'");
  double c = params["C"].get<double>();
  std::vector<double> y_star;
  if (params.contains("y_star")) {
    for (const auto& v : params["y_star"]) y_star.push_back(v.get<double>());
  } else {
    auto ball = power_dual_ball(op.codomain, p);
    if (!ball.is_box())
      throw std::invalid_argument(
          "params: y_star required when the codomain power-dual ball has no corner");
    y_star = ball.box_max();
  }

  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;
  auto res = synthesize_dominating_weight(op, p, y_star, c, sopts);

  CommandResult out;
  out.report = report_header("dominate", ctx);
  out.report["operator"] = to_json(op);
  out.report["C"] = c;
  switch (res.status) {
    case SynthesisStatus::Feasible: {
      out.report["status"] = "feasible";
      auto cert = certificate_to_json(res.certificate);
      out.report["certificate_id"] = cert["id"];
      out.report["certificates"] = json::array({std::move(cert)});
      out.exit_code = 0;
      break;
    }
    case SynthesisStatus::Infeasible:
      out.report["status"] = "infeasible";
      out.report["witness"] = res.infeasibility_witness;
      out.exit_code = 3;
      break;
    case SynthesisStatus::Unknown: {
      out.report["status"] = "unknown";
      auto cert = certificate_to_json(res.certificate);
      out.report["certificates"] = json::array({std::move(cert)});
      out.exit_code = 2;
      break;
    }
  }
  return out;
}

json endo_chain_certificate(const OperatorModel& op, const EndoWeightReport& rep) {
  (void)op;
  json j{{"kind", "endo_chain"},
         {"p", rep.p},
         {"C", rep.constant},
         {"tail_bound", rep.tail_bound},
         {"g", rep.g},
         {"residual", rep.chain_residual},
         {"certified", rep.all_steps_certified},
         {"route", "chain"}};
  j["id"] = json_digest(j);
  return j;
}

CommandResult cmd_endo(const ProblemContext& ctx) {
  auto op = required_operator(ctx);
  double p = required_exponent(ctx);
  auto params = params_of(ctx);
  int truncation = params.value("N", 40);

  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;

  double c;
  std::string c_route;
  if (params.contains("C")) {
    c = params["C"].get<double>();
    c_route = "supplied";
  } else if (p == 2.0 && op.domain.exponent == 2.0 && op.codomain.exponent == 2.0) {
    auto up = rho_upper(op, 2.0, ctx.tol, sopts);
    c = *up.upper.certified * (1.0 + ctx.tol);
    c_route = "bisection";
  } else {
    c = operator_norm_upper(modulus(op)) * (1.0 + 1e-9);
    c_route = "modulus_bound";
  }

  auto rep = endomorphism_weight(op, p, c, truncation, ctx.seed, sopts);

  CommandResult out;
  out.report = report_header("endo", ctx);
  out.report["operator"] = to_json(op);
  out.report["constant"] = rep.constant;
  out.report["constant_route"] = c_route;
  out.report["truncation"] = rep.truncation;
  out.report["tail_bound"] = rep.tail_bound;
  out.report["certified_constant"] = rep.certified_constant;
  out.report["g"] = rep.g;
  out.report["steps"] = rep.steps.size();
  out.report["all_steps_certified"] = rep.all_steps_certified;
  out.report["epsilon_mix_applied"] = rep.epsilon_mix_applied;
  out.report["chain_residual"] = rep.chain_residual;
  out.report["verified_norm"] = rep.verified_norm;
  out.report["verified_exact"] = rep.verified_exact;
  auto cert = endo_chain_certificate(op, rep);
  out.report["certificate_id"] = cert["id"];
  out.report["certificates"] = json::array({std::move(cert)});
  out.exit_code = rep.all_steps_certified ? 0 : 2;
  return out;
}

json conjugate_block(const OperatorModel& op, const WeightFamily& fam,
                     const ConjugateFamilyReport& rep, double p, json* certificates) {
  json block;
  block["conjugable"] = rep.conjugable;
  if (!rep.conjugable) {
    block["failed_member"] = rep.failed_member;
    block["witness"] = rep.witness;
    return block;
  }
  block["constants"] = json{{"uniform", rep.uniform_constant},
                            {"inclusion_bound", rep.inclusion_bound}};
  json rows = json::array();
  for (const auto& pair : rep.assignment) {
    json row{{"member", pair.member},
             {"nu_weight", pair.nu_weight},
             {"functional", pair.functional},
             {"constant", pair.constant},
             {"inclusion_norm", pair.inclusion_norm},
             {"verified", pair.verified},
             {"certified", pair.certified}};
    if (certificates != nullptr) {
      DominationCertificate cert;
      cert.p = p;
      cert.constant = pair.constant;
      cert.y_star = fam.members[pair.member];
      cert.z_star = pair.nu_weight;
      cert.certified = pair.certified;
      cert.route = "conjugate_member";
      auto ew = std::vector<double>{};
      (void)ew;
      // fresh residual for the embedded certificate
      auto audit = verify_domination(op, cert, 9001 + pair.member, 2000);
      cert.residual = audit.residual;
      auto cj = certificate_to_json(cert);
      row["certificate_id"] = cj["id"];
      certificates->push_back(std::move(cj));
    }
    rows.push_back(std::move(row));
  }
  block["assignment"] = std::move(rows);
  return block;
}

CommandResult cmd_conjugate(const ProblemContext& ctx) {
  auto op = required_operator(ctx);
  double p = required_exponent(ctx);
  if (!ctx.problem.contains("family"))
    throw std::invalid_argument("problem: conjugate needs a 'family' block");
  auto fam = family_from_json(ctx.problem["family"]);
  auto params = params_of(ctx);
  std::optional<double> required_c;
  if (params.contains("C")) required_c = params["C"].get<double>();

  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;
  auto rep = conjugate_family_synthesize(op, fam, p, ctx.tol, ctx.seed, required_c,
                                         nullptr, sopts);

  CommandResult out;
  out.report = report_header("conjugate", ctx);
  out.report["operator"] = to_json(op);
  out.report["family"] = to_json(fam);
  json certificates = json::array();
  out.report["conjugate"] = conjugate_block(op, fam, rep, p, &certificates);
  if (!rep.conjugable) {
    out.report["status"] = "not_conjugable";
    out.exit_code = 3;
    return out;
  }
  out.report["status"] = "conjugable";
  out.report["replay_ratio"] = conjugate_family_replay(op, fam, rep, p, 400, ctx.seed + 3);
  out.report["certificates"] = std::move(certificates);
  out.exit_code = 0;
  return out;
}

CommandResult cmd_kernel(const ProblemContext& ctx) {
  double p = required_exponent(ctx);
  if (!ctx.problem.contains("kernel"))
    throw std::invalid_argument("problem: kernel command needs a 'kernel' block");
  if (!ctx.problem.contains("family"))
    throw std::invalid_argument("problem: kernel command needs a 'family' block");
  auto spec = kernel_from_json(ctx.problem["kernel"]);
  auto fam = family_from_json(ctx.problem["family"]);

  auto km = kernel_vector_measure(spec.grid, spec.x_measure, spec.y_measure, fam, p);
  SynthesisOptions sopts;
  sopts.seed = ctx.seed;
  sopts.oracle_budget = ctx.budget;
  auto rep = conjugate_family_pipeline(km.op, km.op.domain, fam, p, ctx.tol, ctx.seed,
                                       sopts);

  CommandResult out;
  out.report = report_header("kernel", ctx);
  out.report["kernel_operator"] = to_json(km.op);
  out.report["family"] = to_json(fam);
  out.report["control_density"] = rep.control_density;
  out.report["factorability_lower"] = rep.pth.factorability_lower;
  out.report["inclusion_lower"] = rep.pth.inclusion_lower;
  json certificates = json::array();
  // the conjugate assignment lives on the control-density scale; embed the
  // certificates against the restricted extension operator
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < rep.control_density.size(); ++j)
    if (rep.control_density[j] > 0.0) kept.push_back(j);
  MeasureSpace nu{std::vector<double>()};
  std::vector<double> dens;
  for (std::size_t j : kept) {
    nu.masses.push_back(km.op.domain.measure.masses[j]);
    dens.push_back(rep.control_density[j]);
  }
  OperatorModel extension{Matrix(km.op.rows(), kept.size()),
                          SpaceDescriptor::lp(p, nu, dens), km.op.codomain};
  for (std::size_t i = 0; i < km.op.rows(); ++i)
    for (std::size_t c = 0; c < kept.size(); ++c)
      extension.matrix.at(i, c) = km.op.matrix.at(i, kept[c]);
  // the certificates dominate the extension, so verify runs against it
  out.report["operator"] = to_json(extension);
  out.report["conjugate"] = conjugate_block(extension, fam, rep.conjugate, p,
                                            rep.conjugate.conjugable ? &certificates
                                                                     : nullptr);
  if (!rep.conjugate.conjugable) {
    out.report["status"] = "not_conjugable";
    out.exit_code = 3;
    return out;
  }
  out.report["status"] = "conjugable";
  out.report["replay_ratio"] = rep.replay_ratio;
  out.report["audit"] = json{{"c1", rep.audit.c1},
                             {"c1_exact", rep.audit.c1_exact},
                             {"c2", rep.audit.c2},
                             {"positively_norming", rep.audit.positively_norming},
                             {"sign_identity_residual", rep.audit.sign_identity_residual}};
  out.report["dual_box_bound"] = rep.dual_box_bound;
  out.report["certificates"] = std::move(certificates);
  out.exit_code = 0;
  return out;
}

CommandResult cmd_counterexample(const ProblemContext& ctx) {
  double p = required_exponent(ctx);
  auto params = params_of(ctx);
  double q = params.value("q", 2.0);
  std::vector<std::size_t> n_values{4, 8, 16, 32};
  if (params.contains("n_values")) {
    n_values.clear();
    for (const auto& v : params["n_values"])
      n_values.push_back(v.get<std::size_t>());
  }
  std::optional<EmbeddingConstants> constants;
  if (params.contains("constants")) {
    const auto& c = params["constants"];
    require_keys(c, {"k1", "c2", "c1"}, "params.constants");
    constants = EmbeddingConstants{c.value("k1", 1.0), c.value("c2", 1.0),
                                   c.value("c1", 1.0)};
  }

  CommandResult out;
  out.report = report_header("counterexample", ctx);
  out.report["q"] = q;
  json table = json::array();
  std::vector<double> xs, ys;
  bool degraded = false;
  for (std::size_t n : n_values) {
    auto res = stable_embedding_mass_witness(n, p, q, constants, ctx.seed);
    degraded = degraded || res.degraded_to_gaussian;
    table.push_back(json{{"n", n},
                         {"mass", res.minimal_mass},
                         {"k1", res.constants.k1},
                         {"c2", res.constants.c2},
                         {"sample_dim", res.sample_dim},
                         {"bracket_spread", res.bracket_spread}});
    xs.push_back(static_cast<double>(n));
    ys.push_back(res.minimal_mass);
  }
  out.report["table"] = std::move(table);
  if (xs.size() >= 2) out.report["slope"] = loglog_slope(xs, ys);
  out.report["expected_slope"] = 1.0 - p / q;
  out.report["degraded_to_gaussian"] = degraded;
  out.exit_code = 0;
  return out;
}

CommandResult cmd_verify(const json& report, const CliOverrides& overrides) {
  std::uint64_t seed = overrides.seed.value_or(987654321ULL);
  if (!report.is_object() || !report.contains("command"))
    throw std::invalid_argument("verify: input is not a weightforge report");
  if (!report.contains("certificates") || !report["certificates"].is_array() ||
      report["certificates"].empty())
    throw std::invalid_argument("verify: report carries no certificates");

  OperatorModel op;
  bool has_op = report.contains("operator");
  if (has_op) op = operator_from_json(report["operator"]);

  CommandResult out;
  out.report = json{{"command", "verify"}, {"seed", seed}};
  json failures = json::array();
  int checked = 0;
  for (const auto& cj : report["certificates"]) {
    ++checked;
    std::string kind = cj.value("kind", "");
    // integrity first: the payload must hash to its recorded id
    json payload = cj;
    payload.erase("id");
    payload["id"] = json_digest(payload);
    if (!cj.contains("id") || payload["id"] != cj["id"]) {
      failures.push_back(json{{"index", checked - 1}, {"reason", "id_mismatch"}});
      continue;
    }
    if (!has_op) {
      failures.push_back(json{{"index", checked - 1}, {"reason", "missing_operator"}});
      continue;
    }
    if (kind == "domination") {
      auto cert = domination_certificate_from_json(cj);
      auto audit = verify_domination(op, cert, seed, 10000);
      if (!audit.pass)
        failures.push_back(json{{"index", checked - 1},
                                {"reason", "residual"},
                                {"residual", audit.residual},
                                {"method", audit.method}});
    } else if (kind == "pietsch") {
      auto cert = pietsch_certificate_from_json(cj);
      auto audit = verify_pietsch(op, cert, seed, 10000);
      if (!audit.pass)
        failures.push_back(json{{"index", checked - 1},
                                {"reason", "residual"},
                                {"residual", audit.residual},
                                {"method", audit.method}});
    } else if (kind == "endo_chain") {
      double p = cj.at("p").get<double>();
      double c = cj.at("C").get<double>();
      double tail = cj.at("tail_bound").get<double>();
      std::vector<double> g;
      for (const auto& v : cj.at("g")) g.push_back(v.get<double>());
      bool positive = true;
      for (double v : g)
        if (!(v > 0.0)) positive = false;
      Rng rng = Rng(seed).child("verify_chain");
      double worst = 0.0;
      const double bound_p = 2.0 * std::pow(c, p) * (1.0 + tail);
      for (int t = 0; t < 10000; ++t) {
        auto f = rng.gaussian_vector(op.cols());
        auto tf = op.apply(f);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
          lhs += std::pow(std::fabs(tf[j]), p) * g[j] * op.domain.measure.masses[j];
          rhs += std::pow(std::fabs(f[j]), p) * g[j] * op.domain.measure.masses[j];
        }
        worst = std::max(worst, (lhs - bound_p * rhs) /
                                    std::max({lhs, bound_p * rhs, 1e-300}));
      }
      if (!positive || worst > 1e-8)
        failures.push_back(json{{"index", checked - 1},
                                {"reason", positive ? "residual" : "not_positive"},
                                {"residual", worst}});
    } else {
      failures.push_back(json{{"index", checked - 1}, {"reason", "unknown_kind"}});
    }
  }
  out.report["checked"] = checked;
  out.report["failures"] = failures;
  out.report["pass"] = failures.empty();
  out.exit_code = failures.empty() ? 0 : 4;
  return out;
}

}  // namespace

CommandResult run_command(const std::string& command, const json& problem,
                          const CliOverrides& overrides) {
  if (command == "verify") return cmd_verify(problem, overrides);
  auto ctx = parse_problem(command, problem, overrides);
  if (command == "rho") return cmd_rho(ctx);
  if (command == "lambda") return cmd_lambda(ctx);
  if (command == "dominate") return cmd_dominate(ctx);
  if (command == "endo") return cmd_endo(ctx);
  if (command == "conjugate") return cmd_conjugate(ctx);
  if (command == "kernel") return cmd_kernel(ctx);
  if (command == "counterexample") return cmd_counterexample(ctx);
  throw std::invalid_argument("unknown command: " + command);
}

int cli_main(int argc, char** argv) {
  CLI::App app{"weightforge: certified weighted-norm inequalities at desk scale"};
  std::string input, output, command;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int budget = 0;
  app.add_option("--input", input, "problem file (JSON)")->required();
  app.add_option("--output", output, "report file (JSON); stdout when omitted");
  app.add_option("--seed", seed, "override the problem seed");
  app.add_option("--tol", tol, "override the problem tolerance");
  app.add_option("--budget", budget, "override the problem budget");
  app.add_option("--command", command, "command to run")
      ->required()
      ->check(CLI::IsMember({"rho", "lambda", "dominate", "endo", "conjugate",
                             "kernel", "counterexample", "verify"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    std::ifstream in(input);
    if (!in) {
      std::fprintf(stderr, "error: cannot open input file '%s'\n", input.c_str());
      return 1;
    }
    json problem = json::parse(in);

    CliOverrides overrides;
    for (int i = 1; i < argc; ++i) {
      std::string a = argv[i];
      if (a == "--seed") overrides.seed = seed;
      if (a == "--tol") overrides.tol = tol;
      if (a == "--budget") overrides.budget = budget;
    }

    auto result = run_command(command, problem, overrides);
    std::string dump = result.report.dump(2);
    dump.push_back('\n');
    if (output.empty()) {
      std::fputs(dump.c_str(), stdout);
    } else {
      std::string tmp = output + ".tmp";
      {
        std::ofstream o(tmp, std::ios::trunc);
        if (!o) {
          std::fprintf(stderr, "error: cannot write '%s'\n", tmp.c_str());
          return 1;
        }
        o << dump;
      }
      std::rename(tmp.c_str(), output.c_str());
    }
    return result.exit_code;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace weightforge
