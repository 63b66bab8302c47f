// projlm: command-line front end.
//
// Exit codes
//   0  success (check: solution exists; oracle-compare: within tolerance)
//   1  malformed configuration, usage error, I/O error or digest mismatch
//   2  check verdict "no", or a refused run (simulation of a spec without a
//      solution, oracle window above the cap)
//   3  check verdict "undetermined"
//   4  oracle-compare deviation above tolerance

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "projlm/diagnostics.hpp"
#include "projlm/engine.hpp"
#include "projlm/oracle.hpp"
#include "projlm/path_io.hpp"
#include "projlm/serialization.hpp"
#include "projlm/solvability.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace projlm;

namespace {

enum Exit : int { kOk = 0, kMalformed = 1, kNo = 2, kUndetermined = 3, kDeviation = 4 };

constexpr std::size_t kCompareWindowCap = 8;
constexpr double kCompareTolerance = 1e-10;

struct Options {
  std::string config;
  std::string out;
  std::string paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  bool force = false;
  std::string format = "csv";
  bool random_specs = false;
};

class Refusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig load_config(const Options& o) {
  RunConfig c = run_config_from_json(read_text_file(o.config));
  if (o.seed) c.seed = *o.seed;
  if (o.replicates) {
    if (*o.replicates == 0) throw ConfigError("replicates", "must be >= 1");
    c.replicates = *o.replicates;
  }
  return c;
}

fs::path output_dir(const Options& o, const RunConfig& c) {
  return o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out);
}

json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

void emit(const json& j, const std::optional<fs::path>& file) {
  const std::string text = j.dump(2);
  std::cout << text << "\n";
  if (file) {
    fs::create_directories(file->parent_path());
    std::ofstream(*file) << text << "\n";
  }
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Yes: return kOk;
    case Verdict::No: return kNo;
    case Verdict::Undetermined: return kUndetermined;
  }
  return kUndetermined;
}

// --- check ---------------------------------------------------------------

int cmd_check(const Options& o) {
  const RunConfig c = load_config(o);
  CheckOptions co;
  co.trunc = c.truncation;
  co.moment = c.moment;
  const SolvabilityReport rep = check_spec(c.spec, co);
  std::optional<fs::path> file;
  if (!o.out.empty()) file = fs::path(o.out) / "check.json";
  emit(json::parse(report_to_json(rep)), file);
  return verdict_code(rep.exists);
}

// --- simulate --------------------------------------------------------------

SimulationConfig sim_config(const RunConfig& c, bool force) {
  SimulationConfig sc;
  sc.n = c.n;
  sc.M = c.M;
  sc.replicates = c.replicates;
  sc.force = force;
  return sc;
}

int cmd_simulate(const Options& o) {
  const RunConfig c = load_config(o);
  const PathFormat format = path_format_from_string(o.format);
  const InnovationStream stream(c.seed, c.distribution);
  std::vector<Path> paths;
  try {
    paths = simulate(c.spec, sim_config(c, o.force), stream);
  } catch (const RefusalError& e) {
    throw Refusal(e.what());
  }
  PathTable table;
  table.n = c.n;
  table.M = c.M.value_or(c.n);
  table.seed = c.seed;
  for (auto& p : paths) table.values.push_back(std::move(p.values));
  const fs::path dir = output_dir(o, c);
  const auto files = write_paths(table, dir, format);
  write_manifest(dir, run_config_to_json(c), format, files);
  json j;
  j["output_dir"] = dir.string();
  j["format"] = to_string(format);
  j["files"] = files.size();
  j["digest"] = combined_digest(files);
  emit(j, std::nullopt);
  return kOk;
}

// --- diagnose --------------------------------------------------------------

int cmd_diagnose(const Options& o) {
  if (o.paths.empty()) throw ConfigError("--paths", "diagnose needs the simulation directory");
  const fs::path dir = o.paths;
  const Manifest m = verify_manifest(dir);
  RunConfig c = o.config.empty() ? run_config_from_json(m.config_json) : load_config(o);
  const PathTable table = load_manifest_paths(dir, m);
  const PathSet set(table.values);
  const std::size_t n = table.n;
  const auto& sel = c.diagnostics;
  const double mean = normalize(c.spec).mu;

  std::vector<std::size_t> fit_lags = sel.fit_lags.empty() ? default_fit_lags(n) : sel.fit_lags;
  std::size_t max_lag = sel.acf_max_lag;
  for (std::size_t k : fit_lags) max_lag = std::max(max_lag, k);
  if (4 * max_lag >= n) max_lag = n >= 8 ? (n - 1) / 4 : 0;

  AcfOptions ao;
  if (sel.known_mean) ao.known_mean = mean;
  const AcfEstimate acf = sample_acf(set, max_lag, ao);

  json j;
  j["n"] = n;
  j["replicates"] = table.values.size();
  j["centering"] = sel.known_mean ? "known_mean" : "sample_mean";
  j["acf_max_lag"] = max_lag;

  try {
    FitOptions fo;
    fo.lags = fit_lags;
    const DecayFit f = acf_decay_fit(acf, fo);
    j["decay_fit"] = {{"slope", f.slope},         {"d_hat", f.d_hat},
                      {"ci", {num(f.ci_lo), num(f.ci_hi)}},
                      {"lags_used", f.lags_used}, {"range_shrunk", f.range_shrunk},
                      {"curvature", f.curvature}, {"curvature_se", num(f.curvature_se)},
                      {"curvature_flag", f.curvature_flag}};
  } catch (const std::invalid_argument& e) {
    j["decay_fit"] = {{"error", e.what()}};
  }

  std::optional<ScalingFit> sc;
  try {
    ScalingOptions so;
    so.block_sizes = sel.block_sizes;
    if (sel.known_mean) so.known_mean = mean;
    sc = partial_sum_scaling(set, so);
    j["scaling"] = {{"H_hat", num(sc->H_hat)},
                    {"ci", {num(sc->ci_lo), num(sc->ci_hi)}},
                    {"degenerate", sc->degenerate},
                    {"skewness", num(sc->skewness)},
                    {"skewness_se", num(sc->skewness_se)},
                    {"kurtosis", num(sc->kurtosis)},
                    {"kurtosis_se", num(sc->kurtosis_se)},
                    {"largest_block_count", sc->largest_block_count}};
  } catch (const std::invalid_argument& e) {
    j["scaling"] = {{"error", e.what()}};
  }

  json sq = json::array();
  for (std::size_t lag : sel.squared_cov_lags) {
    if (lag == 0 || lag >= n) continue;
    const Statistic s = squared_lag_cov(set, lag);
    sq.push_back({{"lag", lag}, {"value", s.value}, {"se", num(s.se)}});
  }
  j["squared_lag_cov"] = sq;

  const Histogram h = histogram(set, std::max<std::size_t>(sel.bins, 2));
  j["histogram"] = {{"bins", h.counts.size()}, {"mean", h.mean}, {"variance", h.variance},
                    {"samples", h.samples}};

  const fs::path out = o.out.empty() ? dir / "diagnostics" : fs::path(o.out);
  fs::create_directories(out);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < acf.gamma.size(); ++k) {
    rows.push_back({static_cast<double>(k), acf.gamma[k], acf.se[k]});
  }
  write_csv(out / "acf.csv", {"lag", "gamma", "se"}, rows);
  rows.clear();
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    rows.push_back({h.edges[i], h.edges[i + 1], static_cast<double>(h.counts[i]), h.density[i],
                    h.density_se[i], h.overlay[i], h.overlay_bin[i]});
  }
  write_csv(out / "histogram.csv",
            {"lo", "hi", "count", "density", "density_se", "normal", "normal_bin"}, rows);
  if (sc && !sc->block_sizes.empty()) {
    rows.clear();
    for (std::size_t i = 0; i < sc->block_sizes.size(); ++i) {
      rows.push_back({static_cast<double>(sc->block_sizes[i]), sc->block_variance[i]});
    }
    write_csv(out / "block_variance.csv", {"block_size", "variance"}, rows);
  }
  emit(j, out / "diagnostics.json");
  return kOk;
}

// --- oracle-compare ----------------------------------------------------------

int cmd_oracle_compare(const Options& o) {
  const RunConfig c = load_config(o);
  const std::size_t W = c.oracle.window;
  if (W == 0) throw ConfigError("oracle.window", "must be >= 1");
  if (W > kCompareWindowCap) {
    throw Refusal("oracle window " + std::to_string(W) + " exceeds the cap of " +
                  std::to_string(kCompareWindowCap));
  }
  if (normalize(c.spec).family != Family::FamilyI) {
    throw ConfigError("spec.family", "oracle-compare needs a FamilyI (or Larch) spec");
  }
  const InnovationStream stream(c.seed, c.distribution);
  CompareReport rep;
  json per = json::array();
  for (std::size_t i = 0; i < c.oracle.trials; ++i) {
    const EquationSpec spec = o.random_specs ? random_family_i_spec(c.seed + i, W) : c.spec;
    const CompareReport r = oracle_compare(spec, W, 1, stream, i);
    const CompareTrial& t = r.trials[0];
    per.push_back({{"trial", i}, {"engine", t.engine}, {"oracle", t.oracle},
                   {"abs_dev", t.abs_dev}, {"rel_dev", t.rel_dev}});
    rep.max_abs_dev = std::max(rep.max_abs_dev, t.abs_dev);
    rep.max_rel_dev = std::max(rep.max_rel_dev, t.rel_dev);
  }
  const bool pass = rep.max_rel_dev < kCompareTolerance;
  json j;
  j["window"] = W;
  j["trials"] = c.oracle.trials;
  j["random_specs"] = o.random_specs;
  j["max_abs_dev"] = rep.max_abs_dev;
  j["max_rel_dev"] = rep.max_rel_dev;
  j["tolerance"] = kCompareTolerance;
  j["pass"] = pass;
  j["per_trial"] = per;
  std::optional<fs::path> file;
  if (!o.out.empty()) file = fs::path(o.out) / "oracle_compare.json";
  emit(j, file);
  return pass ? kOk : kDeviation;
}

// --- larch -------------------------------------------------------------------

int cmd_larch(const Options& o) {
  const RunConfig c = load_config(o);
  if (c.spec.family != Family::Larch || !c.spec.larch) {
    throw ConfigError("spec.family", "larch needs a Larch spec");
  }
  const LarchParams& lp = *c.spec.larch;
  const LarchReport rep = larch_check(lp.intercept, lp.beta, c.larch.moment, c.truncation);
  json j = json::parse(larch_report_to_json(rep));
  if (c.larch.simulate) {
    if (!rep.exists && !o.force) {
      throw Refusal("LARCH equation has no stationary solution (B >= 1); use --force");
    }
    const InnovationStream stream(c.seed, c.distribution);
    const auto paths = simulate(c.spec, sim_config(c, true), stream);
    std::vector<std::vector<double>> rows;
    std::vector<double> vars;
    for (std::size_t r = 0; r < paths.size(); ++r) {
      const auto& sig = paths[r].values;
      double v = 0.0;
      for (std::size_t t = 0; t < sig.size(); ++t) {
        const double z = stream.at(r, static_cast<std::int64_t>(t + 1));
        rows.push_back({static_cast<double>(r), static_cast<double>(t + 1), sig[t], sig[t] * z});
        v += (sig[t] - lp.intercept) * (sig[t] - lp.intercept);
      }
      vars.push_back(v / static_cast<double>(sig.size()));
    }
    double mv = 0.0;
    for (double v : vars) mv += v;
    mv /= static_cast<double>(vars.size());
    double sv = 0.0;
    for (double v : vars) sv += (v - mv) * (v - mv);
    const double se = vars.size() > 1
                          ? std::sqrt(sv / static_cast<double>(vars.size() - 1) /
                                      static_cast<double>(vars.size()))
                          : std::nan("");
    const fs::path dir = output_dir(o, c);
    fs::create_directories(dir);
    write_csv(dir / "larch.csv", {"replicate", "t", "sigma", "r"}, rows);
    j["simulation"] = {{"file", (dir / "larch.csv").string()},
                       {"sigma_variance", mv},
                       {"sigma_variance_se", num(se)},
                       {"replicates", vars.size()}};
  }
  emit(j, std::nullopt);
  return rep.exists ? kOk : kNo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification toolkit for projective stochastic equations"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", o.config, "Run configuration (JSON)");
    if (config_required) opt->required();
    opt->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--seed", o.seed, "Seed (overrides the config)");
    sub->add_option("--replicates", o.replicates, "Replicate count (overrides the config)");
  };

  auto* check = app.add_subcommand("check", "Existence check; prints a solvability report");
  add_common(check, true);

  auto* sim = app.add_subcommand("simulate", "Simulate paths and write a manifest");
  add_common(sim, true);
  sim->add_flag("--force", o.force, "Simulate even when no solution exists");
  sim->add_option("--format", o.format, "Path format")->check(CLI::IsMember({"csv", "binary"}));

  auto* diag = app.add_subcommand("diagnose", "Run diagnostics on simulated paths");
  add_common(diag, false);
  diag->add_option("--paths", o.paths, "Directory written by simulate")->required();

  auto* oc = app.add_subcommand("oracle-compare", "Compare the nested-series oracle to the engine");
  add_common(oc, true);
  oc->add_flag("--random-specs", o.random_specs, "Draw a random FamilyI spec per trial");

  auto* larch = app.add_subcommand("larch", "LARCH existence, variance and moment bounds");
  add_common(larch, true);
  larch->add_flag("--force", o.force, "Simulate even when B >= 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kMalformed;
  }

  try {
    if (check->parsed()) return cmd_check(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (diag->parsed()) return cmd_diagnose(o);
    if (oc->parsed()) return cmd_oracle_compare(o);
    if (larch->parsed()) return cmd_larch(o);
  } catch (const Refusal& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kNo;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMalformed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMalformed;
  }
  return kMalformed;
}
