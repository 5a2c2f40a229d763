#include "blockqn/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "blockqn/metrics.hpp"
#include "blockqn/updates.hpp"
#include "json.hpp"

namespace blockqn {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void config_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Config, where + ": " + what);
}

template <typename T>
T parse_value(const std::string& where, const std::string& key, const std::string& raw) {
  std::string_view s(raw);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if constexpr (std::is_same_v<T, std::string>) {
    return std::string(s);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    config_fail(where, "key '" + key + "' expects a boolean, got '" + raw + "'");
  } else {
    T out{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
      config_fail(where, "key '" + key + "' has malformed value '" + raw + "'");
    return out;
  }
}

ProblemSpec parse_problem(const pt::ptree& sec) {
  ProblemSpec p;
  const std::string where = "[problem]";
  for (const auto& [key, node] : sec) {
    const std::string raw = node.get_value<std::string>();
    if (key == "kind") {
      const auto kind = parse_value<std::string>(where, key, raw);
      if (kind == "dataset") p.kind = ProblemKind::Dataset;
      else if (kind == "synthetic") p.kind = ProblemKind::Synthetic;
      else if (kind == "quadratic") p.kind = ProblemKind::Quadratic;
      else config_fail(where, "unknown problem kind '" + kind + "'");
    } else if (key == "path") p.path = parse_value<std::string>(where, key, raw);
    else if (key == "gamma") p.gamma = parse_value<double>(where, key, raw);
    else if (key == "n") p.n = parse_value<Eigen::Index>(where, key, raw);
    else if (key == "d") p.d = parse_value<Eigen::Index>(where, key, raw);
    else if (key == "kappa") p.kappa = parse_value<double>(where, key, raw);
    else if (key == "seed") p.seed = parse_value<std::uint64_t>(where, key, raw);
    else if (key == "m") p.sc_m = parse_value<double>(where, key, raw);
    else config_fail(where, "unknown key '" + key + "'");
  }
  if (p.kind == ProblemKind::Dataset && p.path.empty()) config_fail(where, "dataset problems need 'path'");
  if (p.kind != ProblemKind::Quadratic && !(p.gamma > 0.0)) config_fail(where, "gamma must be > 0");
  if (p.kind == ProblemKind::Quadratic && !(p.kappa >= 1.0)) config_fail(where, "kappa must be >= 1");
  if (p.n < 1 || p.d < 1) config_fail(where, "n and d must be >= 1");
  return p;
}

MethodSpec parse_method_section(const std::string& label, const pt::ptree& sec) {
  MethodSpec m;
  m.label = label;
  const std::string where = "[method." + label + "]";
  if (label.empty() || label.find_first_of(",\"\n") != std::string::npos)
    config_fail(where, "method labels must be non-empty without commas or quotes");
  bool has_method = false;
  for (const auto& [key, node] : sec) {
    const std::string raw = node.get_value<std::string>();
    SolverConfig& c = m.config;
    if (key == "method") {
      c.method = parse_method(parse_value<std::string>(where, key, raw));
      has_method = true;
    } else if (key == "strategy") c.strategy = parse_strategy(parse_value<std::string>(where, key, raw));
    else if (key == "k") c.k = parse_value<Eigen::Index>(where, key, raw);
    else if (key == "m") c.sc_m = parse_value<double>(where, key, raw);
    else if (key == "g0_scale") c.g0_scale = parse_value<double>(where, key, raw);
    else if (key == "max_iters") c.max_iters = parse_value<int>(where, key, raw);
    else if (key == "grad_tol") c.grad_tol = parse_value<double>(where, key, raw);
    else if (key == "inverse_mode") c.inverse_mode = parse_inverse_mode(parse_value<std::string>(where, key, raw));
    else if (key == "diagnostics") c.record_diagnostics = parse_value<bool>(where, key, raw);
    else config_fail(where, "unknown key '" + key + "'");
  }
  if (!has_method) config_fail(where, "missing 'method'");
  return m;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double csv_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError, "trace line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

template <typename T>
T csv_int(const std::string& s, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorKind::ParseError, "trace line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace

ExperimentSpec parse_experiment(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::Config, e.what());
  }

  ExperimentSpec spec;
  bool has_problem = false;
  for (const auto& [name, sec] : tree) {
    if (name == "problem") {
      spec.problem = parse_problem(sec);
      has_problem = true;
    } else if (name == "experiment") {
      const std::string where = "[experiment]";
      for (const auto& [key, node] : sec) {
        const std::string raw = node.get_value<std::string>();
        if (key == "seed") spec.seed = parse_value<std::uint64_t>(where, key, raw);
        else if (key == "repetitions") spec.repetitions = parse_value<int>(where, key, raw);
        else if (key == "warm_start_steps") spec.warm_start_steps = parse_value<int>(where, key, raw);
        else if (key == "output") spec.output = parse_value<std::string>(where, key, raw);
        else if (key == "summary") spec.summary = parse_value<std::string>(where, key, raw);
        else config_fail(where, "unknown key '" + key + "'");
      }
    } else if (name.rfind("method.", 0) == 0) {
      spec.methods.push_back(parse_method_section(name.substr(7), sec));
    } else if (!sec.data().empty() && sec.empty()) {
      config_fail("config", "key '" + name + "' outside of a section");
    } else {
      config_fail("config", "unknown section [" + name + "]");
    }
  }
  if (!has_problem) config_fail("config", "missing [problem] section");
  if (spec.methods.empty()) config_fail("config", "at least one [method.NAME] section is required");
  if (spec.repetitions < 1) config_fail("[experiment]", "repetitions must be >= 1");
  if (spec.warm_start_steps < 0) config_fail("[experiment]", "warm_start_steps must be >= 0");
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
  return parse_experiment(in);
}

std::unique_ptr<Objective> build_objective(const ProblemSpec& spec) {
  switch (spec.kind) {
    case ProblemKind::Dataset:
      return std::make_unique<LogisticObjective>(load_dataset(spec.path), spec.gamma, spec.sc_m);
    case ProblemKind::Synthetic: {
      LogisticProblem p = synth_logistic(spec.n, spec.d, spec.seed, spec.gamma);
      return std::make_unique<LogisticObjective>(std::move(p.data), p.gamma, spec.sc_m);
    }
    case ProblemKind::Quadratic:
      return std::make_unique<QuadraticObjective>(make_quadratic(spec.d, spec.kappa, spec.seed));
  }
  throw Error(ErrorKind::Config, "unknown problem kind");
}

TraceRow to_trace_row(const std::string& method, Eigen::Index k, std::uint64_t seed, const IterationRecord& rec) {
  return TraceRow{method, k, seed, rec.t, rec.lambda, rec.grad_norm, rec.r_t, rec.elapsed_seconds,
                  rec.tau, rec.sigma, rec.eta};
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.method << ',' << r.k << ',' << r.seed << ',' << r.t << ',' << format_double(r.lambda) << ','
        << format_double(r.grad_norm) << ',' << format_double(r.r_t) << ',' << format_double(r.elapsed_seconds)
        << ',' << opt(r.tau) << ',' << opt(r.sigma) << ',' << opt(r.eta) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw Error(ErrorKind::ParseError, "trace header mismatch");
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11)
      throw Error(ErrorKind::ParseError, "trace line " + std::to_string(line_no) + ": expected 11 fields");
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return csv_double(s, line_no);
    };
    rows.push_back(TraceRow{f[0], csv_int<Eigen::Index>(f[1], line_no), csv_int<std::uint64_t>(f[2], line_no),
                            csv_int<int>(f[3], line_no), csv_double(f[4], line_no), csv_double(f[5], line_no),
                            csv_double(f[6], line_no), csv_double(f[7], line_no), opt(f[8]), opt(f[9]),
                            opt(f[10])});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const std::unique_ptr<Objective> oracle = build_objective(spec.problem);
  for (const auto& m : spec.methods) validate(m.config, oracle->dim());
  const Vector x0 = warm_start(*oracle, Vector::Zero(oracle->dim()), spec.warm_start_steps);

  ExperimentResult out;
  for (const auto& m : spec.methods) {
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      SolverConfig config = m.config;
      config.seed = spec.seed + static_cast<std::uint64_t>(rep);
      const RunResult res = run(*oracle, config, x0);
      for (const auto& rec : res.records) out.rows.push_back(to_trace_row(m.label, config.k, config.seed, rec));
      RunSummary s;
      s.method = m.label;
      s.k = config.k;
      s.seed = config.seed;
      s.iterations = res.records.back().t;
      s.iterations_to_tol = res.iterations_to(config.grad_tol);
      s.stop = res.stop;
      s.final_grad_norm = res.records.back().grad_norm;
      s.wall_seconds = res.records.back().elapsed_seconds;
      s.factor_resets = res.factor_resets;
      out.runs.push_back(std::move(s));
    }
  }
  return out;
}

std::string summary_json(const ExperimentSpec& spec, const ExperimentResult& result) {
  using nlohmann::json;
  json problem;
  switch (spec.problem.kind) {
    case ProblemKind::Dataset:
      problem = {{"kind", "dataset"}, {"path", spec.problem.path}, {"gamma", spec.problem.gamma}};
      break;
    case ProblemKind::Synthetic:
      problem = {{"kind", "synthetic"}, {"n", spec.problem.n}, {"d", spec.problem.d},
                 {"gamma", spec.problem.gamma}, {"seed", spec.problem.seed}};
      break;
    case ProblemKind::Quadratic:
      problem = {{"kind", "quadratic"}, {"d", spec.problem.d}, {"kappa", spec.problem.kappa},
                 {"seed", spec.problem.seed}};
      break;
  }
  json runs = json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"method", r.method},
                    {"k", r.k},
                    {"seed", r.seed},
                    {"iterations", r.iterations},
                    {"iterations_to_tol", r.iterations_to_tol ? json(*r.iterations_to_tol) : json(nullptr)},
                    {"stop", std::string(to_string(r.stop))},
                    {"final_grad_norm", r.final_grad_norm},
                    {"wall_seconds", r.wall_seconds},
                    {"factor_resets", r.factor_resets}});
  }
  json doc = {{"problem", problem},
              {"warm_start_steps", spec.warm_start_steps},
              {"repetitions", spec.repetitions},
              {"seed", spec.seed},
              {"runs", runs}};
  return doc.dump(2);
}

ExperimentResult run_experiment_to_files(const ExperimentSpec& spec) {
  ExperimentResult result = run_experiment(spec);
  {
    std::ofstream csv(spec.output);
    if (!csv) throw Error(ErrorKind::Io, "cannot write trace '" + spec.output + "'");
    write_trace_csv(csv, result.rows);
  }
  std::string summary_path = spec.summary;
  if (summary_path.empty()) summary_path = std::filesystem::path(spec.output).replace_extension(".json").string();
  std::ofstream js(summary_path);
  if (!js) throw Error(ErrorKind::Io, "cannot write summary '" + summary_path + "'");
  js << summary_json(spec, result) << '\n';
  return result;
}

std::vector<VerifyCheck> run_verify(std::uint64_t seed, int trials) {
  std::vector<VerifyCheck> checks;
  const Eigen::Index d = 30;
  auto fmt = [](const ContractionReport& r) {
    std::ostringstream os;
    os << "mean " << r.mean_ratio << " max " << r.max_ratio << " bound " << r.theory_bound << " slack " << r.slack;
    return os.str();
  };

  for (Eigen::Index k : {1, 5, 15, 29}) {
    const auto r = contraction_sweep(UpdateKind::SrKGreedy, d, k, 100.0, 200, seed);
    checks.push_back({"greedy SR-k tau contraction k=" + std::to_string(k),
                      r.max_ratio <= r.theory_bound + 1e-8, fmt(r)});
  }
  for (Eigen::Index k : {1, 5, 15}) {
    const auto r = contraction_sweep(UpdateKind::SrKRandomized, d, k, 100.0, trials, seed + 1);
    checks.push_back({"randomized SR-k tau contraction k=" + std::to_string(k), r.passed(), fmt(r)});
  }
  for (double kappa : {10.0, 100.0}) {
    for (Eigen::Index k : {1, 5}) {
      for (UpdateKind kind : {UpdateKind::BlockBfgs, UpdateKind::BlockDfp, UpdateKind::ScaledBfgs}) {
        const auto r = contraction_sweep(kind, d, k, kappa, trials, seed + 2);
        std::ostringstream name;
        name << to_string(kind) << " sigma contraction k=" << k << " kappa=" << kappa;
        checks.push_back({name.str(), r.passed(), fmt(r)});
      }
    }
  }

  // Sandwich preservation for all four operators.
  {
    const Rng base(seed + 3);
    double worst_low = 1.0, worst_high = 0.0;
    bool ok = true;
    for (int i = 0; i < 200; ++i) {
      Rng rng = base.split(static_cast<std::uint64_t>(i));
      const double eta = i % 2 == 0 ? 1.5 : 4.0;
      const MatrixInstance inst = random_instance(12, 50.0, eta, rng);
      const DirectionBlock u = gaussian_block(12, 1 + i % 12, rng);
      const Matrix l = cholesky(inst.g).inverse_factor();
      const SymMatrix outs[] = {sr_k(inst.g, inst.a, u), block_bfgs(inst.g, inst.a, u),
                                block_dfp(inst.g, inst.a, u),
                                block_bfgs(inst.g, inst.a, scaled_directions(l, u))};
      for (const auto& gp : outs) {
        const LoewnerBounds b = loewner_bounds(gp, inst.a);
        worst_low = std::min(worst_low, b.min);
        worst_high = std::max(worst_high, b.max / eta);
        if (b.min < 1.0 - 1e-8 || b.max > eta + 1e-8) ok = false;
      }
    }
    std::ostringstream os;
    os << "min generalized eig " << worst_low << ", max eig / eta " << worst_high;
    checks.push_back({"Loewner sandwich preservation", ok, os.str()});
  }

  // Factor update consistency.
  {
    const Rng base(seed + 4);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      Rng rng = base.split(static_cast<std::uint64_t>(i));
      const Eigen::Index dd = 2 + i % 19;
      const MatrixInstance inst = random_instance(dd, 20.0, 4.0, rng);
      const Matrix l = cholesky(inst.g).inverse_factor();
      const DirectionBlock u = gaussian_block(dd, 1 + i % dd, rng);
      const SymMatrix gp = block_bfgs(inst.g, inst.a, scaled_directions(l, u));
      const Matrix lp = update_l(l, inst.a, u);
      const Matrix gp_inv = solve_spd(cholesky(gp), Matrix(Matrix::Identity(dd, dd)));
      worst = std::max(worst, (lp.transpose() * lp - gp_inv).norm() / gp_inv.norm());
    }
    std::ostringstream os;
    os << "worst relative error " << worst;
    checks.push_back({"scaled factor update consistency", worst <= 1e-6, os.str()});
  }
  return checks;
}

}  // namespace blockqn
