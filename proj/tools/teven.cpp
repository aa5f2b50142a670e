#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "teven/densekernels.hpp"
#include "teven/krylovschur.hpp"
#include "teven/matpoly.hpp"

namespace {

using teven::Complex;
using json = nlohmann::json;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_complex(Complex z) {
  std::string s = fmt17(z.real());
  s += (z.imag() < 0 ? "-" : "+");
  s += fmt17(std::abs(z.imag()));
  s += "i";
  return s;
}

/// Accepts "0.7", "2i", "0.5+2i", "-1e-2i", "1-0.5i".
Complex parse_complex(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) throw teven::InputError("empty complex literal");
  const bool has_i = (s.back() == 'i' || s.back() == 'j');
  if (!has_i) {
    try {
      size_t used = 0;
      const double re = std::stod(s, &used);
      if (used != s.size()) throw teven::InputError("trailing junk in '" + text + "'");
      return {re, 0.0};
    } catch (const std::exception&) {
      throw teven::InputError("cannot parse complex value '" + text + "'");
    }
  }
  s.pop_back();  // strip i
  // split at the last +/- that is not an exponent sign and not leading
  size_t split = std::string::npos;
  for (size_t p = s.size(); p-- > 1;) {
    if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  try {
    if (split == std::string::npos) {
      const std::string imag = (s.empty() || s == "+" || s == "-") ? s + "1" : s;
      return {0.0, std::stod(imag)};
    }
    const double re = std::stod(s.substr(0, split));
    std::string im_part = s.substr(split);
    if (im_part == "+" || im_part == "-") im_part += "1";
    return {re, std::stod(im_part)};
  } catch (const std::exception&) {
    throw teven::InputError("cannot parse complex value '" + text + "'");
  }
}

std::filesystem::path resolve_manifest(const std::string& problem) {
  std::filesystem::path p(problem);
  if (std::filesystem::is_directory(p)) p /= "manifest.json";
  return p;
}

struct SolveFlags {
  std::string problem;
  int num_eigs = 6;
  int extension = 10;
  std::string shift = "1+1i";
  std::string strategy = "lazy";
  double tol_lock = 1e-9;
  double shift_threshold = 1e-5;
  int max_cycles = 100;
  double tol_inf = 1e-8;
  bool trace = false;
  bool reverse = false;
  std::string format = "json";
};

int cmd_solve(const SolveFlags& flags) {
  const auto manifest = resolve_manifest(flags.problem);
  teven::MatrixPolynomial P = teven::read_polynomial(manifest);
  const Eigen::Index n_orig = P.order();
  const int deg_orig = P.degree();
  if (flags.reverse) P = teven::reversal(P);

  teven::SolverConfig cfg;
  cfg.num_eigenvalues = flags.num_eigs;
  cfg.extension = flags.extension;
  cfg.initial_shift = parse_complex(flags.shift);
  cfg.tol_lock = flags.tol_lock;
  cfg.shift_change_threshold = flags.shift_threshold;
  cfg.max_cycles = flags.max_cycles;
  cfg.tol_inf = flags.tol_inf;
  if (flags.strategy == "fixed") cfg.strategy = teven::ShiftStrategy::fixed;
  else if (flags.strategy == "aggressive") cfg.strategy = teven::ShiftStrategy::aggressive;
  else if (flags.strategy == "lazy") cfg.strategy = teven::ShiftStrategy::lazy;
  else if (flags.strategy == "target") {
    cfg.strategy = teven::ShiftStrategy::target;
    cfg.selector = teven::RitzSelector::target_proximity;
    cfg.target = cfg.initial_shift;
  } else {
    throw teven::InputError("unknown strategy '" + flags.strategy + "'");
  }

  std::ostringstream trace_sink;
  if (flags.trace) cfg.trace = &trace_sink;

  const auto t0 = std::chrono::steady_clock::now();
  const teven::EigenResult res = teven::run(P, cfg);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // expand the +- pairs; --reverse maps them back through the reciprocal
  std::vector<Complex> values;
  for (const auto& pair : res.finite_pairs) {
    Complex mu = pair.mu;
    if (flags.reverse) mu = Complex(1.0, 0.0) / mu;
    values.push_back(mu);
    values.push_back(-mu);
  }
  std::sort(values.begin(), values.end(), [](Complex a, Complex b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });

  json report;
  report["config"] = {
      {"num_eigs", flags.num_eigs},
      {"extension", flags.extension},
      {"shift", {{"re", cfg.initial_shift.real()}, {"im", cfg.initial_shift.imag()}}},
      {"strategy", flags.strategy},
      {"tol_lock", flags.tol_lock},
      {"shift_threshold", flags.shift_threshold},
      {"max_cycles", flags.max_cycles},
      {"tol_inf", flags.tol_inf},
      {"reverse", flags.reverse},
  };
  report["problem"] = {{"path", manifest.string()}, {"n", n_orig}, {"degree", deg_orig}};
  json vals = json::array();
  for (Complex v : values) vals.push_back({{"re", v.real()}, {"im", v.imag()}});
  report["eigenvalues"] = vals;
  json residuals = json::array();
  for (const auto& pair : res.finite_pairs) {
    residuals.push_back({{"residual", pair.residual}, {"cycle", pair.cycle_found}});
  }
  report["pair_diagnostics"] = residuals;
  report["infinite_count"] = res.infinite_count;
  report["converged"] = res.converged;
  report["cycles"] = res.cycles;
  report["factorizations"] = res.factorizations;
  report["elapsed_seconds"] = elapsed;
  if (!res.events.empty()) report["events"] = res.events;
  if (flags.trace) {
    json trace_records = json::array();
    std::istringstream lines(trace_sink.str());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      std::cerr << line << "\n";
      trace_records.push_back(json::parse(line));
    }
    report["trace"] = trace_records;
  }

  if (flags.format == "json") {
    std::cout << report.dump(2) << "\n";
  } else if (flags.format == "csv") {
    std::cout << "# config num_eigs=" << flags.num_eigs
              << " extension=" << flags.extension
              << " shift=" << format_complex(cfg.initial_shift)
              << " strategy=" << flags.strategy
              << " tol_lock=" << fmt17(flags.tol_lock)
              << " shift_threshold=" << fmt17(flags.shift_threshold)
              << " max_cycles=" << flags.max_cycles
              << " reverse=" << (flags.reverse ? 1 : 0) << "\n";
    std::cout << "# problem n=" << n_orig << " degree=" << deg_orig << "\n";
    std::cout << "# result converged=" << (res.converged ? 1 : 0)
              << " cycles=" << res.cycles
              << " infinite_count=" << res.infinite_count
              << " factorizations=" << res.factorizations
              << " elapsed_seconds=" << fmt17(elapsed) << "\n";
    std::cout << "re,im\n";
    for (Complex v : values) {
      std::cout << fmt17(v.real()) << "," << fmt17(v.imag()) << "\n";
    }
  } else {
    throw teven::InputError("unknown format '" + flags.format + "'");
  }
  return res.converged ? 0 : 2;
}

int cmd_generate(const std::string& kind, int m, int n, std::uint64_t seed,
                 const std::vector<double>& constants, const std::string& out) {
  teven::MatrixPolynomial P = [&]() {
    if (kind == "butterfly") {
      teven::ButterflyConstants c;
      if (!constants.empty()) {
        if (constants.size() != 10) {
          throw teven::InputError("butterfly expects 10 constants (c01..c42)");
        }
        for (int i = 0; i < 5; ++i) {
          c.c[i][0] = constants[static_cast<size_t>(2 * i)];
          c.c[i][1] = constants[static_cast<size_t>(2 * i + 1)];
        }
      }
      return teven::generate_butterfly(m, c);
    }
    if (kind == "gyroscopic") return teven::generate_gyroscopic(n, seed);
    throw teven::InputError("unknown problem kind '" + kind + "'");
  }();
  teven::write_polynomial(P, out);
  std::cout << "wrote " << kind << " problem (n=" << P.order()
            << ", degree=" << P.degree() << ") to " << out << "\n";
  return 0;
}

int cmd_validate(const std::string& problem, const std::string& report_path,
                 double tol) {
  const auto manifest = resolve_manifest(problem);
  teven::MatrixPolynomial P = teven::read_polynomial(manifest);

  std::ifstream in(report_path);
  if (!in) throw teven::InputError("cannot open report " + report_path);
  json report;
  try {
    in >> report;
  } catch (const json::exception& e) {
    throw teven::InputError(std::string("malformed report: ") + e.what());
  }
  const bool reverse = report.value("config", json::object()).value("reverse", false);
  if (reverse) P = teven::reversal(P);

  const teven::dense::PolyEig oracle = teven::dense::dense_polyeig_oracle(P);
  std::vector<Complex> oracle_values;
  for (Complex v : oracle.finite) {
    oracle_values.push_back(reverse ? Complex(1.0, 0.0) / v : v);
  }

  if (!report.contains("eigenvalues") || report["eigenvalues"].empty()) {
    std::cerr << "warning: report contains no eigenvalues; nothing to compare\n";
    std::cout << "max_rel_dev=0 values=0\n";
    return 0;
  }

  std::cout << "reported_re,reported_im,oracle_re,oracle_im,rel_dev,digits,flag\n";
  double max_dev = 0.0;
  int count = 0;
  for (const auto& entry : report["eigenvalues"]) {
    const Complex mu(entry.at("re").get<double>(), entry.at("im").get<double>());
    double best = std::numeric_limits<double>::infinity();
    Complex nearest{};
    for (Complex o : oracle_values) {
      const double dev = std::abs(mu - o) / std::max(std::abs(o), 1e-300);
      if (dev < best) {
        best = dev;
        nearest = o;
      }
    }
    max_dev = std::max(max_dev, best);
    ++count;
    const double digits = (best == 0.0) ? 17.0 : std::min(17.0, -std::log10(best));
    std::cout << fmt17(mu.real()) << "," << fmt17(mu.imag()) << ","
              << fmt17(nearest.real()) << "," << fmt17(nearest.imag()) << ","
              << fmt17(best) << "," << fmt17(digits) << ","
              << (best > tol ? "DEVIATES" : "ok") << "\n";
  }
  std::cout << "max_rel_dev=" << fmt17(max_dev) << " values=" << count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structure-preserving rational Krylov eigensolver for real T-even matrix polynomials"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "generate a problem directory");
  std::string gen_kind;
  int gen_m = 10;
  int gen_n = 50;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::vector<double> gen_constants;
  gen->add_option("kind", gen_kind, "butterfly | gyroscopic")->required();
  gen->add_option("--m", gen_m, "butterfly grid size (n = m^2)");
  gen->add_option("--n", gen_n, "gyroscopic order");
  gen->add_option("--seed", gen_seed, "gyroscopic RNG seed");
  gen->add_option("--constants", gen_constants, "butterfly constants c01 c02 ... c42");
  gen->add_option("--out", gen_out, "output directory")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "compute part of the spectrum");
  SolveFlags flags;
  solve->add_option("problem", flags.problem, "problem directory or manifest path")->required();
  solve->add_option("--num-eigs", flags.num_eigs, "desired eigenvalue pairs M");
  solve->add_option("--extension", flags.extension, "extension size m-M per cycle");
  solve->add_option("--shift", flags.shift, "initial shift, e.g. 0.5+2i");
  solve->add_option("--strategy", flags.strategy, "fixed | aggressive | lazy | target");
  solve->add_option("--tol-lock", flags.tol_lock, "locking tolerance on |b|");
  solve->add_option("--shift-threshold", flags.shift_threshold, "lazy-strategy residual threshold");
  solve->add_option("--max-cycles", flags.max_cycles, "restart cycle cap");
  solve->add_option("--tol-inf", flags.tol_inf, "infinite Ritz value threshold");
  solve->add_flag("--trace", flags.trace, "per-step/per-cycle JSON trace on stderr");
  solve->add_flag("--reverse", flags.reverse, "solve rev P and report reciprocals (smallest-magnitude eigenvalues)");
  solve->add_option("--format", flags.format, "json | csv");

  // validate
  auto* validate = app.add_subcommand("validate", "compare a report against the dense oracle");
  std::string val_problem, val_report;
  double val_tol = 1e-8;
  validate->add_option("problem", val_problem, "problem directory or manifest path")->required();
  validate->add_option("report", val_report, "JSON report from solve")->required();
  validate->add_option("--tol", val_tol, "relative deviation flag threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  if (std::getenv("TEVEN_EIG_TRACE") != nullptr &&
      std::string(std::getenv("TEVEN_EIG_TRACE")) == "1") {
    flags.trace = true;
  }

  try {
    if (gen->parsed()) {
      return cmd_generate(gen_kind, gen_m, gen_n, gen_seed, gen_constants, gen_out);
    }
    if (solve->parsed()) return cmd_solve(flags);
    if (validate->parsed()) return cmd_validate(val_problem, val_report, val_tol);
  } catch (const teven::ShiftOnSpectrumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const teven::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const teven::CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
