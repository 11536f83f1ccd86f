// Acceptance suite: end-to-end checks at pinned tolerances, one line per
// criterion. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "weightforge/cli.hpp"
#include "weightforge/programs.hpp"
#include "weightforge/regularity.hpp"
#include "weightforge/rng.hpp"
#include "weightforge/vector_measure.hpp"

using namespace weightforge;

namespace {

struct Criterion {
  std::string name;
  double time_limit_s;
  std::function<bool(std::string&)> run;
};

std::vector<json> g_reports;  // reports with certificates, audited at the end

json identity_like_problem(const OperatorModel& op, double p, std::uint64_t seed,
                           double tol, int budget) {
  return json{{"version", "1"}, {"seed", seed},         {"tol", tol},
              {"budget", budget}, {"p", p},             {"operator", to_json(op)}};
}

bool criterion_partition_averaging(std::string& detail) {
  const std::size_t n = 8;
  MeasureSpace mu = MeasureSpace::uniform(n, 1.0);
  auto cells = std::vector<std::vector<std::size_t>>{{0, 1, 2}, {3, 4}, {5, 6, 7}};
  auto l2 = SpaceDescriptor::lp(2.0, mu);
  OperatorModel op{partition_averaging_matrix(mu, cells), l2, l2};

  Rng rng = Rng(20240802).child("partition");
  std::vector<std::vector<double>> members;
  for (int k = 0; k < 20; ++k) {
    auto v = rng.uniform_vector(n, 0.0, 1.0);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += v[j] * mu.masses[j];
    double target = rng.uniform(0.2, 1.0);  // inside the positive unit ball
    for (auto& x : v) x *= target / s;
    members.push_back(std::move(v));
  }

  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    auto f = rng.gaussian_vector(n);
    double base = norm_eval(l2, f);
    if (base <= 0.0) continue;
    auto tf = op.apply(f);
    for (const auto& v : members) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += tf[i] * tf[i] * v[i] * mu.masses[i];
      worst = std::max(worst, std::sqrt(s) / base);
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max ratio %.12f", worst);
  detail = buf;
  return worst <= 1.0 + 1e-9;
}

bool criterion_lattice_prototype(std::string& detail) {
  const std::size_t n = 8;
  Rng rng = Rng(20240803).child("prototype");
  MeasureSpace mu = MeasureSpace::uniform(n);
  auto eta = rng.uniform_vector(n, 0.2, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += eta[i] * mu.masses[i];
  for (auto& v : eta) v /= s;

  std::string parts;
  for (double p : {1.0, 2.0, 3.0}) {
    OperatorModel inc{Matrix::identity(n), SpaceDescriptor::lp(kInf, mu),
                      SpaceDescriptor::lp(p, mu, eta)};
    json problem = identity_like_problem(inc, p, 31 + static_cast<int>(p), 2.5e-4, 32);
    auto res = run_command("lambda", problem);
    if (res.exit_code != 0) {
      detail = "lambda upper not certified at p=" + std::to_string(p);
      return false;
    }
    g_reports.push_back(res.report);
    double lower = res.report["lambda"]["lower"].get<double>();
    double upper = res.report["lambda"]["upper"].get<double>();
    char buf[96];
    std::snprintf(buf, sizeof(buf), " p=%g:[%.8f,%.8f]", p, lower, upper);
    parts += buf;
    if (!(lower >= 1.0 - 1e-6 && upper <= 1.0 + 1e-3 && lower <= upper + 1e-9)) {
      detail = "bracket out of range:" + parts;
      return false;
    }
  }
  detail = parts;
  return true;
}

bool criterion_identity_non_example(std::string& detail) {
  std::string parts;
  for (std::size_t n : {2, 4, 8}) {
    auto l1 = SpaceDescriptor::lp(1.0, MeasureSpace::uniform(n));
    auto id = OperatorModel::identity(l1);

    json problem = identity_like_problem(id, 1.0, 17 + n, 1e-7, 32);
    auto rho_rep = run_command("rho", problem);
    if (rho_rep.exit_code != 0) {
      detail = "rho upper not certified";
      return false;
    }
    g_reports.push_back(rho_rep.report);
    double rlo = rho_rep.report["rho"]["lower"].get<double>();
    double rup = rho_rep.report["rho"]["upper"].get<double>();

    auto lam = lambda_lower(id, 1.0, static_cast<int>(n), 24, 41 + n);
    char buf[128];
    std::snprintf(buf, sizeof(buf), " n=%zu: rho=[%.8f,%.8f] lambda>=%.6f", n, rlo,
                  rup, lam.value);
    parts += buf;
    if (!(std::fabs(rlo - 1.0) <= 1e-6 && std::fabs(rup - 1.0) <= 1e-6)) {
      detail = "rho bracket off:" + parts;
      return false;
    }
    if (!(lam.value >= static_cast<double>(n) * (1.0 - 1e-6))) {
      detail = "lambda lower too small:" + parts;
      return false;
    }
  }
  detail = parts;
  return true;
}

bool criterion_domination_exactness(std::string& detail) {
  double worst_rel = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    Rng rng = Rng(5000 + inst).child("instance");
    MeasureSpace mu{rng.uniform_vector(4, 0.5, 1.5)};
    auto l2 = SpaceDescriptor::lp(2.0, mu);
    OperatorModel op{Matrix(4, 4), l2, l2};
    for (auto& v : op.matrix.data) v = rng.gaussian();
    auto top = power_dual_ball(l2, 2.0).box_max();

    SynthesisOptions opts;
    opts.seed = 600 + inst;
    auto mc = min_constant_domination(op, 2.0, top, 1e-6, opts);
    if (inst < 8) {
      json report = identity_like_problem(op, 2.0, 600 + inst, 1e-6, 32);
      report = json{{"command", "dominate"},
                    {"operator", to_json(op)},
                    {"certificates", json::array({certificate_to_json(mc.certificate)})}};
      g_reports.push_back(report);
    }

    // brute oracle: dense sphere grid of 10^4 points
    Rng grid = Rng(9000 + inst).child("grid");
    double brute = 0.0;
    for (int t = 0; t < 10000; ++t) {
      auto f = grid.gaussian_vector(4);
      double den = 0.0, num = 0.0;
      for (std::size_t j = 0; j < 4; ++j)
        den += f[j] * f[j] * top[j] * mu.masses[j];
      if (den <= 0.0) continue;
      auto tf = op.apply(f);
      for (std::size_t i = 0; i < 4; ++i)
        num += tf[i] * tf[i] * top[i] * mu.masses[i];
      brute = std::max(brute, std::sqrt(num / den));
    }
    double rel = std::fabs(mc.constant - brute) / std::max(1e-12, brute);
    worst_rel = std::max(worst_rel, rel);
    if (rel > 2e-2) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "instance %d: bisect %.6f vs grid %.6f", inst,
                    mc.constant, brute);
      detail = buf;
      return false;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst relative gap %.2e", worst_rel);
  detail = buf;
  return true;
}

bool criterion_endomorphism_bound(std::string& detail) {
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    Rng rng = Rng(7000 + inst).child("instance");
    MeasureSpace mu{rng.uniform_vector(6, 0.5, 1.5)};
    auto l2 = SpaceDescriptor::lp(2.0, mu);
    OperatorModel op{Matrix(6, 6), l2, l2};
    for (auto& v : op.matrix.data) v = rng.gaussian();

    json problem = identity_like_problem(op, 2.0, 800 + inst, 1e-7, 32);
    problem["params"] = json{{"N", 40}};
    auto res = run_command("endo", problem);
    if (res.exit_code != 0) {
      detail = "endo chain not fully certified at instance " + std::to_string(inst);
      return false;
    }
    if (inst < 8) g_reports.push_back(res.report);

    double c = res.report["constant"].get<double>();
    double vn = res.report["verified_norm"].get<double>();
    bool exact = res.report["verified_exact"].get<bool>();
    const auto& g = res.report["g"];
    bool positive = true;
    for (const auto& v : g)
      if (!(v.get<double>() > 0.0)) positive = false;
    worst = std::max(worst, vn / c);
    if (!exact || !positive || vn > std::sqrt(2.0) * c * (1.0 + 1e-6) || vn > 2.0 * c) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "instance %d: norm %.9f vs sqrt2*C %.9f (exact=%d positive=%d)",
                    inst, vn, std::sqrt(2.0) * c, exact ? 1 : 0, positive ? 1 : 0);
      detail = buf;
      return false;
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst norm/C ratio %.6f (<= sqrt2)", worst);
  detail = buf;
  return true;
}

bool criterion_conjugate_round_trip(std::string& detail) {
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    Rng rng = Rng(11000 + inst).child("instance");
    const std::size_t n = 6;
    MeasureSpace mu{rng.uniform_vector(n, 0.5, 1.5)};
    auto l2 = SpaceDescriptor::lp(2.0, mu);
    // positive vector measure: the integration operator has a nonnegative matrix
    OperatorModel op{Matrix(n, n), l2, l2};
    for (auto& v : op.matrix.data) v = rng.uniform(0.0, 1.0);

    WeightFamily fam{mu, {}};
    for (int k = 0; k < 4; ++k) fam.members.push_back(rng.uniform_vector(n, 0.0, 1.0));

    SynthesisOptions opts;
    opts.seed = 1200 + inst;
    auto rep = conjugate_family_synthesize(op, fam, 2.0, 1e-6, 1200 + inst, {}, nullptr,
                                           opts);
    if (!rep.conjugable) {
      detail = "positive measure not conjugable at instance " + std::to_string(inst);
      return false;
    }
    double ratio = conjugate_family_replay(op, fam, rep, 2.0, 200, 1300 + inst);
    worst = std::max(worst, ratio / rep.uniform_constant);
    if (ratio > rep.uniform_constant * (1.0 + 1e-6)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "instance %d: replay %.9f > C %.9f", inst, ratio,
                    rep.uniform_constant);
      detail = buf;
      return false;
    }
    if (inst < 8) {
      json certs = json::array();
      for (const auto& pair : rep.assignment) {
        DominationCertificate cert;
        cert.p = 2.0;
        cert.constant = pair.constant;
        cert.y_star = fam.members[pair.member];
        cert.z_star = pair.nu_weight;
        cert.certified = pair.certified;
        cert.route = "conjugate_member";
        auto audit = verify_domination(op, cert, 4400 + inst, 2000);
        cert.residual = audit.residual;
        certs.push_back(certificate_to_json(cert));
      }
      g_reports.push_back(json{{"command", "conjugate"},
                               {"operator", to_json(op)},
                               {"certificates", std::move(certs)}});
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst replay/C ratio %.9f", worst);
  detail = buf;
  return true;
}

bool criterion_counterexample_growth(std::string& detail) {
  std::vector<double> ns{4, 8, 16, 32};
  std::vector<double> masses;
  for (double n : ns) {
    auto res = stable_embedding_mass_witness(static_cast<std::size_t>(n), 1.0, 2.0, {},
                                             424242);
    masses.push_back(res.minimal_mass);
  }
  for (std::size_t i = 0; i + 1 < masses.size(); ++i) {
    if (!(masses[i + 1] > masses[i])) {
      detail = "minimal mass not strictly increasing";
      return false;
    }
  }
  double slope = loglog_slope(ns, masses);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "slope %.4f (target 0.5 +- 0.15)", slope);
  detail = buf;
  return slope >= 0.35 && slope <= 0.65;
}

bool criterion_krivine_consistency(std::string& detail) {
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    Rng rng = Rng(13000 + inst).child("instance");
    std::size_t n = 2 + inst % 2;
    double q = 1.0 + 2.5 * rng.uniform();
    auto space = SpaceDescriptor::lp(q, MeasureSpace{rng.uniform_vector(n, 0.5, 1.5)},
                                     rng.uniform_vector(n, 0.5, 1.5));
    OperatorModel op{Matrix(n, n), space, space};
    for (auto& v : op.matrix.data) v = rng.gaussian();
    auto brute = rho_lower(op, 2.0, 3, 32, 1400 + inst);
    auto nrm = operator_norm(op, 48, 1500 + inst);
    double bound = 1.783 * nrm.lower * (1.0 + 1e-3);
    worst = std::max(worst, brute.value / (1.783 * nrm.lower));
    if (brute.value > bound) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "instance %d: rho2 %.6f > 1.783*norm %.6f", inst,
                    brute.value, bound);
      detail = buf;
      return false;
    }
  }
  char buf[80];
  std::snprintf(buf, sizeof(buf), "worst rho2/(1.783 norm) = %.6f", worst);
  detail = buf;
  return true;
}

bool criterion_certificate_audit(std::string& detail) {
  if (g_reports.empty()) {
    detail = "no reports were collected";
    return false;
  }
  CliOverrides fresh;
  fresh.seed = 271828;
  int checked = 0;
  for (const auto& report : g_reports) {
    if (!report.contains("certificates") || report["certificates"].empty()) continue;
    auto audit = run_command("verify", report, fresh);
    ++checked;
    if (audit.exit_code != 0) {
      detail = "fresh-seed audit failed: " + audit.report["failures"].dump();
      return false;
    }
  }
  if (checked == 0) {
    detail = "no certificates to audit";
    return false;
  }

  // tampering: a -10% single entry must be detected, for both kinds
  bool tampered_dom = false, tampered_eta = false;
  for (const auto& report : g_reports) {
    for (std::size_t c = 0; c < report["certificates"].size(); ++c) {
      const auto& cert = report["certificates"][c];
      if (!tampered_dom && cert["kind"] == "domination") {
        json bad = report;
        for (std::size_t j = 0; j < bad["certificates"][c]["z_star"].size(); ++j) {
          double v = bad["certificates"][c]["z_star"][j].get<double>();
          if (v > 0.0) {
            bad["certificates"][c]["z_star"][j] = v * 0.9;
            break;
          }
        }
        if (run_command("verify", bad, fresh).exit_code != 4) {
          detail = "domination tampering went undetected";
          return false;
        }
        tampered_dom = true;
      }
      if (!tampered_eta && cert["kind"] == "pietsch") {
        json bad = report;
        for (auto it = bad["certificates"][c]["eta"].begin();
             it != bad["certificates"][c]["eta"].end(); ++it) {
          it.value() = it.value().get<double>() * 0.9;
          break;
        }
        if (run_command("verify", bad, fresh).exit_code != 4) {
          detail = "pietsch tampering went undetected";
          return false;
        }
        tampered_eta = true;
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "%d reports audited; tampering detected for both certificate kinds",
                checked);
  detail = buf;
  return tampered_dom && tampered_eta;
}

bool criterion_determinism(std::string& detail) {
  // rerunning a criterion-style command with the same seed must reproduce the
  // report byte for byte
  Rng rng = Rng(31415).child("determinism");
  MeasureSpace mu{rng.uniform_vector(4, 0.5, 1.5)};
  auto l2 = SpaceDescriptor::lp(2.0, mu);
  OperatorModel op{Matrix(4, 4), l2, l2};
  for (auto& v : op.matrix.data) v = rng.gaussian();

  json problem = identity_like_problem(op, 2.0, 999, 1e-6, 32);
  auto a = run_command("rho", problem);
  auto b = run_command("rho", problem);
  if (a.report.dump() != b.report.dump()) {
    detail = "rho report differs between reruns";
    return false;
  }

  json ce{{"version", "1"}, {"seed", 424242}, {"p", 1.0},
          {"params", json{{"q", 2.0}, {"n_values", json::array({4, 8})}}}};
  auto c = run_command("counterexample", ce);
  auto d = run_command("counterexample", ce);
  if (c.report.dump() != d.report.dump()) {
    detail = "counterexample report differs between reruns";
    return false;
  }
  detail = "byte-identical reruns for rho and counterexample";
  return true;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria{
      {"partition averaging dominated by the unweighted norm", 1.0,
       criterion_partition_averaging},
      {"sup-cube inclusion lambda bracket [1,1] for p in {1,2,3}", 10.0,
       criterion_lattice_prototype},
      {"identity: rho bracket [1,1], lambda lower reaches n", 10.0,
       criterion_identity_non_example},
      {"min-constant domination matches the sphere-grid oracle", 120.0,
       criterion_domination_exactness},
      {"endomorphism weight: exact norm within sqrt(2) C", 120.0,
       criterion_endomorphism_bound},
      {"positive measures: conjugate replay within C", 120.0,
       criterion_conjugate_round_trip},
      {"minimal-mass growth slope 0.5 +- 0.15", 60.0,
       criterion_counterexample_growth},
      {"brute 2-regular constants below 1.783 x norm", 60.0,
       criterion_krivine_consistency},
      {"fresh-seed certificate audit and tamper detection", 60.0,
       criterion_certificate_audit},
      {"byte-identical reports on rerun", 30.0, criterion_determinism},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    auto& c = criteria[i];
    std::string detail;
    auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > c.time_limit_s) {
      ok = false;
      detail += " [over time budget]";
    }
    std::printf("[%s] %zu. %s (%.2fs) %s\n", ok ? "PASS" : "FAIL", i + 1,
                c.name.c_str(), elapsed, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures == 0) {
    std::printf("all %zu acceptance criteria passed\n", criteria.size());
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures;
}
