#include "treemart/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "treemart/ctbrw.hpp"
#include "treemart/error.hpp"
#include "treemart/exact.hpp"
#include "treemart/format.hpp"
#include "treemart/limit_lab.hpp"
#include "treemart/oracle.hpp"
#include "treemart/parallel.hpp"
#include "treemart/profile_poly.hpp"
#include "treemart/tree_sim.hpp"

namespace treemart::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string model = "bst";
  std::int64_t n = 0;
  std::int64_t horizon = 0;
  std::int64_t replicas = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: resolve from environment / hardware
  std::string output;
  std::string format = "json";
};

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--model", o.model,
                  "bst | rt | port | p-oriented:<p> | mary:<m> | custom:<beta>,<m>")
      ->capture_default_str();
}

void add_n(CLI::App* sub, Options& o, std::int64_t fallback, const std::string& help) {
  o.n = fallback;
  sub->add_option("--n", o.n, help)->capture_default_str();
}

void add_seed(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
}

void add_output(CLI::App* sub, Options& o, const std::string& help) {
  sub->add_option("--output", o.output, help);
}

void add_format(CLI::App* sub, Options& o, const std::string& fallback) {
  o.format = fallback;
  sub->add_option("--format", o.format, "json | csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void add_lab(CLI::App* sub, Options& o, std::int64_t n, std::int64_t horizon,
             std::int64_t replicas) {
  add_model(sub, o);
  add_n(sub, o, n, "size n at which S_n - S is sampled");
  o.horizon = horizon;
  o.replicas = replicas;
  sub->add_option("--horizon", o.horizon, "horizon N; S_N stands in for S")->capture_default_str();
  sub->add_option("--replicas", o.replicas, "independent replicas")->capture_default_str();
  add_seed(sub, o);
  sub->add_option("--threads", o.threads, "worker threads (default: TREEMART_THREADS or all cores)");
  add_output(sub, o, "directory for the JSON report and the CSV sample");
}

/// Writes text to the file named by `path`, or to `out` when path is empty.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::invalid_config, "cannot open output file " + path);
  file << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ExperimentConfig lab_config(const Options& o, const ModelParams& params) {
  ExperimentConfig c;
  c.model = params;
  c.n = o.n;
  c.horizon = o.horizon;
  c.replicas = o.replicas;
  c.master_seed = o.seed;
  c.threads = resolve_threads(o.threads > 0 ? std::optional<unsigned>(o.threads) : std::nullopt);
  return c;
}

/// Writes <dir>/<stem>.json and <dir>/<stem>.csv, or prints the report when
/// no directory was given.
void emit_lab(json report, const std::string& csv, const std::string& stem, const Options& o,
              double seconds, unsigned threads, std::ostream& out) {
  report["metadata"] = {{"wall_seconds", seconds}, {"threads", threads}};
  if (o.output.empty()) {
    out << dump(report);
    return;
  }
  namespace fs = std::filesystem;
  fs::create_directories(o.output);
  const auto json_path = (fs::path(o.output) / (stem + ".json")).string();
  const auto csv_path = (fs::path(o.output) / (stem + ".csv")).string();
  emit(dump(report), json_path, out);
  emit(csv, csv_path, out);
  out << dump(json{{"report", json_path}, {"sample", csv_path}});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- subcommands -----------------------------------------------------------

int cmd_grow(const Options& o, const std::vector<std::int64_t>& checkpoints, std::ostream& out) {
  const auto params = parse_model(o.model);
  if (o.n < 1) throw Error(Errc::invalid_config, "--n must be at least 1");
  GrowOptions options;
  options.checkpoints = checkpoints;
  if (!checkpoints.empty()) options.mode = RecordMode::checkpoints;
  const auto trajectory = grow(params, o.n, ReplicaSeed{o.seed, 0}, options);
  std::ostringstream text;
  if (o.format == "csv") {
    write_trajectory_csv(text, trajectory);
  } else {
    json records = json::array();
    for (const auto& r : trajectory.records) {
      records.push_back({{"n", r.n}, {"D", r.depth}, {"P", r.path}, {"S", r.martingale},
                         {"X", r.increment}});
    }
    text << dump({{"model", params.tag()}, {"seed", o.seed}, {"records", records}});
  }
  emit(text.str(), o.output, out);
  return kOk;
}

int cmd_exact(const Options& o, std::ostream& out) {
  const auto params = parse_model(o.model);
  if (o.n < 1) throw Error(Errc::invalid_config, "--n must be at least 1");
  const auto expansion = mean_expansion(params);
  const double dm = depth_mean(params, o.n);
  const double dv = depth_variance(params, o.n);
  const double pm = mean_path(params, o.n);
  const double pv = var_path(params, o.n);
  const double s2 = variance_constant(params);
  std::string text;
  if (o.format == "csv") {
    text = "model,n,depth_mean,depth_var,path_mean,path_var,sigma2,a,b\n" + params.tag() + "," +
           std::to_string(o.n) + "," + format_real(dm) + "," + format_real(dv) + "," +
           format_real(pm) + "," + format_real(pv) + "," + format_real(s2) + "," +
           format_real(expansion.a) + "," + format_real(expansion.b) + "\n";
  } else {
    text = dump({{"model", params.tag()},
                 {"n", o.n},
                 {"depth_mean", dm},
                 {"depth_var", dv},
                 {"path_mean", pm},
                 {"path_var", pv},
                 {"sigma2", s2},
                 {"a", expansion.a},
                 {"b", expansion.b}});
  }
  emit(text, o.output, out);
  return kOk;
}

int cmd_oracle(const Options& o, const std::string& statistic, std::ostream& out) {
  const auto params = parse_model(o.model);
  if (o.n < 1 || o.n > kOracleCap) {
    throw Error(Errc::cap_exceeded, "oracle supports 1 <= n <= " + std::to_string(kOracleCap));
  }
  json doc{{"model", params.tag()}, {"n", o.n}, {"statistic", statistic}};
  if (statistic == "profile_vector") {
    const auto law = exact_profile_law(params, o.n);
    doc["support"] = law.outcomes;
    doc["probs"] = law.probs;
  } else {
    const auto s = statistic == "path_length" ? Statistic::path_length : Statistic::depth_of_last;
    const auto pmf = exact_distribution(params, o.n, s);
    doc["support"] = pmf.support;
    doc["probs"] = pmf.probs;
  }
  emit(dump(doc), o.output, out);
  return kOk;
}

Complex parse_complex(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) return {std::stod(text), 0.0};
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(Errc::invalid_config, "bad --z value '" + text + "', expected <re>[,<im>]");
  }
}

int cmd_profile(const Options& o, const std::vector<std::string>& zs, std::int64_t every,
                std::ostream& out) {
  const auto params = parse_model(o.model);
  if (o.n < 1) throw Error(Errc::invalid_config, "--n must be at least 1");
  if (every < 1) throw Error(Errc::invalid_config, "--every must be at least 1");
  std::vector<Complex> points;
  for (const auto& z : zs) points.push_back(parse_complex(z));
  for (const auto& z : points) {
    if (std::abs(z - Complex(1.0, 0.0)) > kProfileWindow) {
      throw Error(Errc::domain_error, "z must lie within 0.5 of 1");
    }
  }
  Rng rng = make_rng(ReplicaSeed{o.seed, 0});
  TreeState state(params);
  state.reserve(static_cast<std::size_t>(o.n));
  std::ostringstream text;
  text << "n,re_z,im_z,re_W,im_W,re_M,im_M\n";
  auto write_rows = [&] {
    for (const auto& z : points) {
      const Complex w = eval_W(state, z);
      const Complex mz = eval_M(state, z);
      text << state.size() << ',' << format_real(z.real()) << ',' << format_real(z.imag()) << ','
           << format_real(w.real()) << ',' << format_real(w.imag()) << ','
           << format_real(mz.real()) << ',' << format_real(mz.imag()) << '\n';
    }
  };
  write_rows();
  while (state.size() < o.n) {
    insert_step(state, rng);
    if (state.size() % every == 0 || state.size() == o.n) write_rows();
  }
  emit(text.str(), o.output, out);
  return kOk;
}

int cmd_ctbrw(const Options& o, bool coupling, std::ostream& out) {
  const auto params = parse_model(o.model);
  if (o.n < 0) throw Error(Errc::invalid_config, "--n must be non-negative");
  json doc;
  if (coupling) {
    const auto r = coupling_statistic(params, o.n, o.replicas, o.seed);
    doc = {{"model", params.tag()},
           {"n_deaths", o.n},
           {"replicas", o.replicas},
           {"chi_square", r.chi_square},
           {"degrees_of_freedom", r.degrees_of_freedom},
           {"p_value", r.p_value},
           {"cells", r.cells},
           {"impossible_draws", r.impossible_draws}};
  } else {
    const auto state = simulate(params, o.n, ReplicaSeed{o.seed, 0});
    json occupancy = json::object();
    for (std::size_t k = 0; k < state.occupancy.size(); ++k) {
      if (state.occupancy[k] != 0) occupancy[std::to_string(k)] = state.occupancy[k];
    }
    doc = {{"model", params.tag()},
           {"n_deaths", o.n},
           {"occupancy", occupancy},
           {"tau", state.death_times}};
  }
  emit(dump(doc), o.output, out);
  return kOk;
}

std::string sample_csv(std::span<const double> samples) {
  std::string csv = "replica,Z\n";
  for (std::size_t r = 0; r < samples.size(); ++r) {
    csv += std::to_string(r) + "," + format_real(samples[r]) + "\n";
  }
  return csv;
}

int cmd_clt(const Options& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const auto config = lab_config(o, parse_model(o.model));
  const auto samples = clt_sample(config);
  emit_lab(clt_report(config, samples), sample_csv(samples), report_stem("clt", config), o,
           seconds_since(start), config.threads, out);
  return kOk;
}

int cmd_moments(const Options& o, const std::vector<int>& orders, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  auto config = lab_config(o, parse_model(o.model));
  for (int p : orders) {
    if (p != 2 && p != 3 && p != 4 && p != 6) {
      throw Error(Errc::invalid_config, "moment orders must be among 2, 3, 4, 6");
    }
  }
  config.moment_orders = orders;
  const auto samples = clt_sample(config);
  emit_lab(moments_report(config, samples), sample_csv(samples), report_stem("moments", config),
           o, seconds_since(start), config.threads, out);
  return kOk;
}

int cmd_lil(const Options& o, std::int64_t first, std::int64_t last, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  auto config = lab_config(o, parse_model(o.model));
  if (last <= 0) last = config.horizon / 100;
  if (first > last) throw Error(Errc::invalid_config, "empty checkpoint range");
  for (std::int64_t k = first; k <= last; ++k) config.checkpoints.push_back(k);
  config.n = first;
  const auto result = lil_trajectory(config);
  std::string csv = "replica,running_max,running_min\n";
  for (std::size_t r = 0; r < result.replicas.size(); ++r) {
    csv += std::to_string(r) + "," + format_real(result.replicas[r].running_max.back()) + "," +
           format_real(result.replicas[r].running_min.back()) + "\n";
  }
  emit_lab(lil_report(config, result), csv, report_stem("lil", config), o, seconds_since(start),
           config.threads, out);
  return kOk;
}

// --- check -----------------------------------------------------------------

struct CheckLine {
  std::string name;
  double value;
  double tolerance;
};

std::vector<ModelParams> check_models() {
  return {presets::bst(), presets::rt(), presets::port(), make_params(0.5, 1), presets::mary(3)};
}

std::vector<CheckLine> identity_suite() {
  std::vector<CheckLine> lines;
  for (const auto& params : check_models()) {
    const std::string tag = params.tag();
    double moment_gap = 0.0;
    double martingale_gap = 0.0;
    double depth_gap = 0.0;
    double variance_gap = 0.0;
    for (std::int64_t n = 1; n <= 7; ++n) {
      const auto law = exact_distribution(params, n, Statistic::path_length);
      moment_gap = std::max({moment_gap, std::abs(law.mean() - mean_path(params, n)),
                             std::abs(law.variance() - var_path(params, n))});
      depth_gap = std::max(depth_gap, check_depth_bernoulli_law(params, n));
    }
    for (std::int64_t n = 2; n <= 6; ++n) {
      martingale_gap = std::max(martingale_gap, check_martingale_property(params, n));
      variance_gap = std::max(variance_gap, check_conditional_variance_identity(params, n));
    }
    lines.push_back({tag + " path moments vs enumeration", moment_gap, 1e-10});
    lines.push_back({tag + " martingale property", martingale_gap, 1e-12});
    lines.push_back({tag + " depth law", depth_gap, 1e-12});
    lines.push_back({tag + " conditional variance identity", variance_gap, 1e-10});

    constexpr std::int64_t kSteps = 10'000;
    const MomentTable table(params, kSteps);
    const NormalizerTable normalizer(params, kSteps);
    Growth growth(table, ReplicaSeed{1, 0});
    double profile_gap = 0.0;
    double increment_gap = 0.0;
    while (growth.size() < kSteps) {
      const TreeState before = growth.state();
      growth.step();
      increment_gap = std::max(increment_gap, increment_check(before, growth.state(), table));
      const auto d = derivatives_at_one(growth.state(), normalizer);
      const auto& s = growth.state();
      const double n = static_cast<double>(s.size());
      const double w1 = alpha(params, s.size());
      const double wp1 = params.growth() * static_cast<double>(s.path_length()) + n * params.m();
      profile_gap = std::max({profile_gap, std::abs(d.W1 - w1) / w1, std::abs(d.Wp1 - wp1) / wp1});
    }
    lines.push_back({tag + " profile identities", profile_gap, 1e-12});
    lines.push_back({tag + " increment formula", increment_gap, 1e-9});
  }
  for (const auto& params : {presets::bst(), presets::rt(), presets::port()}) {
    constexpr double kN = 1e6;
    const auto b = mean_expansion(params).b;
    const double b_hat = (mean_path(params, 1'000'000) - params.theta() * kN * std::log(kN)) / kN;
    lines.push_back({params.tag() + " mean expansion", std::abs(b_hat - b) / std::abs(b), 0.01});
    const double s2 = variance_constant(params);
    lines.push_back({params.tag() + " variance constant",
                     std::abs(var_path(params, 1'000'000) / (kN * kN) - s2) / s2, 0.01});
  }
  return lines;
}

int cmd_check(const Options& o, std::ostream& out) {
  json rows = json::array();
  bool ok = true;
  for (const auto& line : identity_suite()) {
    const bool pass = line.value <= line.tolerance;
    ok = ok && pass;
    rows.push_back({{"check", line.name},
                    {"value", line.value},
                    {"tolerance", line.tolerance},
                    {"pass", pass}});
  }
  emit(dump({{"passed", ok}, {"checks", rows}}), o.output, out);
  return ok ? kOk : kCheckFailed;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message,
                  const std::string& synopsis = {}) {
  json doc{{"error", code}, {"message", message}};
  if (!synopsis.empty()) doc["synopsis"] = synopsis;
  err << doc.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Path-length martingales in linear recursive trees"};
  app.name("treemart");
  app.require_subcommand(1);

  std::map<std::string, Options> opts;
  std::function<int()> action;

  Options& o_grow = opts["grow"];
  auto* grow_cmd = app.add_subcommand("grow", "grow one tree and write its trajectory");
  std::vector<std::int64_t> grow_checkpoints;
  add_model(grow_cmd, o_grow);
  add_n(grow_cmd, o_grow, 1000, "final size");
  add_seed(grow_cmd, o_grow);
  add_format(grow_cmd, o_grow, "csv");
  add_output(grow_cmd, o_grow, "output file (default stdout)");
  grow_cmd->add_option("--checkpoints", grow_checkpoints, "record only these sizes");
  grow_cmd->callback([&] { action = [&] { return cmd_grow(o_grow, grow_checkpoints, out); }; });

  Options& o_exact = opts["exact"];
  auto* exact_cmd = app.add_subcommand("exact", "closed-form moments and asymptotic constants");
  add_model(exact_cmd, o_exact);
  add_n(exact_cmd, o_exact, 10, "tree size");
  add_format(exact_cmd, o_exact, "json");
  add_output(exact_cmd, o_exact, "output file (default stdout)");
  exact_cmd->callback([&] { action = [&] { return cmd_exact(o_exact, out); }; });

  Options& o_oracle = opts["oracle"];
  auto* oracle_cmd = app.add_subcommand("oracle", "exact law by exhaustive enumeration");
  std::string statistic = "path_length";
  add_model(oracle_cmd, o_oracle);
  add_n(oracle_cmd, o_oracle, 4, "tree size (at most 8)");
  add_output(oracle_cmd, o_oracle, "output file (default stdout)");
  oracle_cmd->add_option("--statistic", statistic)
      ->check(CLI::IsMember({"path_length", "depth_of_last", "profile_vector"}))
      ->capture_default_str();
  oracle_cmd->callback([&] { action = [&] { return cmd_oracle(o_oracle, statistic, out); }; });

  Options& o_profile = opts["profile"];
  auto* profile_cmd = app.add_subcommand("profile", "profile polynomial along one growth path");
  std::vector<std::string> zs{"0.9", "1", "1.1", "1,0.1"};
  std::int64_t every = 1;
  add_model(profile_cmd, o_profile);
  add_n(profile_cmd, o_profile, 1000, "final size");
  add_seed(profile_cmd, o_profile);
  add_output(profile_cmd, o_profile, "output file (default stdout)");
  profile_cmd->add_option("--z", zs, "evaluation points <re>[,<im>]")->capture_default_str();
  profile_cmd->add_option("--every", every, "write rows every k insertions")->capture_default_str();
  profile_cmd->callback([&] { action = [&] { return cmd_profile(o_profile, zs, every, out); }; });

  Options& o_ctbrw = opts["ctbrw"];
  auto* ctbrw_cmd = app.add_subcommand("ctbrw", "continuous-time branching random walk");
  bool coupling = false;
  add_model(ctbrw_cmd, o_ctbrw);
  add_n(ctbrw_cmd, o_ctbrw, 4, "number of deaths");
  add_seed(ctbrw_cmd, o_ctbrw);
  add_output(ctbrw_cmd, o_ctbrw, "output file (default stdout)");
  o_ctbrw.replicas = 100'000;
  ctbrw_cmd->add_flag("--coupling", coupling, "chi-square test against the discrete profile law");
  ctbrw_cmd->add_option("--replicas", o_ctbrw.replicas, "replicas for --coupling")
      ->capture_default_str();
  ctbrw_cmd->callback([&] { action = [&] { return cmd_ctbrw(o_ctbrw, coupling, out); }; });

  Options& o_clt = opts["clt"];
  auto* clt_cmd = app.add_subcommand("clt", "sample the normalized martingale tail");
  add_lab(clt_cmd, o_clt, 2000, 400'000, 1000);
  clt_cmd->callback([&] { action = [&] { return cmd_clt(o_clt, out); }; });

  Options& o_moments = opts["moments"];
  auto* moments_cmd = app.add_subcommand("moments", "absolute moments of the normalized tail");
  std::vector<int> orders{2, 3, 4, 6};
  add_lab(moments_cmd, o_moments, 2000, 400'000, 1000);
  moments_cmd->add_option("--orders", orders, "moment orders")->capture_default_str();
  moments_cmd->callback([&] { action = [&] { return cmd_moments(o_moments, orders, out); }; });

  Options& o_lil = opts["lil"];
  auto* lil_cmd = app.add_subcommand("lil", "running extremes of the LIL-scaled tail");
  std::int64_t first = 20;
  std::int64_t last = 0;
  add_lab(lil_cmd, o_lil, 20, 1'000'000, 20);
  lil_cmd->add_option("--first", first, "first checkpoint")->capture_default_str();
  lil_cmd->add_option("--last", last, "last checkpoint (default horizon/100)");
  lil_cmd->callback([&] { action = [&] { return cmd_lil(o_lil, first, last, out); }; });

  Options& o_check = opts["check"];
  auto* check_cmd = app.add_subcommand("check", "run the identity and diagnostic suite");
  add_output(check_cmd, o_check, "output file (default stdout)");
  check_cmd->callback([&] { action = [&] { return cmd_check(o_check, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), app.help());
    return kValidationError;
  }

  try {
    return action();
  } catch (const Error& e) {
    report_error(err, std::string(to_string(e.code())), e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kValidationError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace treemart::cli
