#include "projlm/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace projlm {

using json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Strict object reader: every key must be consumed before `done()`.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& field, const std::string& msg) {
    throw ConfigError(field, msg);
  }

  std::string at_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const std::string& path() const { return path_; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& get(const std::string& key) {
    if (!j_.contains(key)) fail(at_path(key), "missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  double num(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) fail(at_path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(at_path(key), "expected a finite number");
    return x;
  }
  double num_or(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }
  std::optional<double> opt_num(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return num(key);
  }

  std::uint64_t uint(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned())) {
      fail(at_path(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::size_t size(const std::string& key) { return static_cast<std::size_t>(uint(key)); }
  std::size_t size_or(const std::string& key, std::size_t fallback) {
    return has(key) ? size(key) : fallback;
  }

  bool boolean(const std::string& key) {
    const json& v = get(key);
    if (!v.is_boolean()) fail(at_path(key), "expected true or false");
    return v.get<bool>();
  }
  bool boolean_or(const std::string& key, bool fallback) {
    return has(key) ? boolean(key) : fallback;
  }

  std::string str(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) fail(at_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> nums(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) fail(at_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        fail(at_path(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  std::vector<std::size_t> sizes(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) fail(at_path(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_unsigned() && !(v[i].is_number_integer() && v[i].get<std::int64_t>() >= 0)) {
        fail(at_path(key) + "[" + std::to_string(i) + "]", "expected a nonnegative integer");
      }
      out.push_back(v[i].get<std::size_t>());
    }
    return out;
  }

  std::vector<std::vector<double>> rows(const std::string& key) {
    const json& v = get(key);
    if (!v.is_array()) fail(at_path(key), "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = at_path(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_array()) fail(p, "expected an array of numbers");
      std::vector<double> row;
      for (std::size_t k = 0; k < v[i].size(); ++k) {
        if (!v[i][k].is_number() || !std::isfinite(v[i][k].get<double>())) {
          fail(p + "[" + std::to_string(k) + "]", "expected a finite number");
        }
        row.push_back(v[i][k].get<double>());
      }
      out.push_back(std::move(row));
    }
    return out;
  }

  Reader child(const std::string& key) { return Reader(get(key), at_path(key)); }

  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at_path(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// Wraps model-level std::invalid_argument into field errors.
template <class F>
auto guarded(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

// --- Kernel -----------------------------------------------------------------

json kernel_json(const Kernel& k) {
  json j;
  std::visit(overloaded{
                 [&](const LinearKernel& s) {
                   j["type"] = "linear";
                   j["slope"] = s.slope;
                 },
                 [&](const ReluKernel&) { j["type"] = "relu"; },
                 [&](const TriangleKernel&) { j["type"] = "triangle"; },
                 [&](const AffineKernel& s) {
                   j["type"] = "affine";
                   j["intercept"] = s.intercept;
                   j["slope"] = s.slope;
                 },
                 [&](const StepKernel& s) {
                   j["type"] = "step";
                   j["breakpoints"] = s.breakpoints;
                   j["values"] = s.values;
                 },
                 [&](const IndicatorKernel& s) {
                   j["type"] = "indicator";
                   j["lo"] = s.lo;
                   j["hi"] = s.hi;
                   j["closed_lo"] = s.closed_lo;
                   j["closed_hi"] = s.closed_hi;
                 },
             },
             k.shape());
  const auto& c = k.constants();
  json cj = json::object();
  if (c.c_q) cj["c_q"] = *c.c_q;
  if (c.c_l) cj["c_l"] = *c.c_l;
  if (c.c0) cj["c0"] = *c.c0;
  if (c.c1) cj["c1"] = *c.c1;
  j["constants"] = cj;
  return j;
}

Kernel read_kernel(Reader r) {
  const std::string type = r.str("type");
  KernelShape shape;
  if (type == "linear") {
    shape = LinearKernel{r.num_or("slope", 1.0)};
  } else if (type == "relu") {
    shape = ReluKernel{};
  } else if (type == "triangle") {
    shape = TriangleKernel{};
  } else if (type == "affine") {
    shape = AffineKernel{r.num("intercept"), r.num("slope")};
  } else if (type == "step") {
    shape = StepKernel{r.nums("breakpoints"), r.nums("values")};
  } else if (type == "indicator") {
    IndicatorKernel k;
    k.lo = r.num("lo");
    k.hi = r.num("hi");
    k.closed_lo = r.boolean_or("closed_lo", true);
    k.closed_hi = r.boolean_or("closed_hi", false);
    shape = k;
  } else {
    Reader::fail(r.at_path("type"), "unknown kernel type '" + type + "'");
  }
  KernelConstants declared;
  if (r.has("constants")) {
    Reader c = r.child("constants");
    declared.c_q = c.opt_num("c_q");
    declared.c_l = c.opt_num("c_l");
    declared.c0 = c.opt_num("c0");
    declared.c1 = c.opt_num("c1");
    c.done();
  }
  r.done();
  return guarded(r.path(), [&] { return Kernel(shape, declared); });
}

// --- Sequences ----------------------------------------------------------------

json sequence_json(const Sequence& s) {
  json j;
  std::visit(overloaded{
                 [&](const GeometricSeq& g) {
                   j["type"] = "geometric";
                   j["ratio"] = g.ratio;
                   j["scale"] = g.scale;
                 },
                 [&](const ArfimaSeq& a) {
                   j["type"] = "arfima";
                   j["d"] = a.d;
                   j["scale"] = a.scale;
                 },
                 [&](const FiniteSeq& f) {
                   j["type"] = "finite";
                   j["values"] = f.values;
                 },
                 [&](const ZeroSeq&) { j["type"] = "zero"; },
             },
             s.shape());
  if (std::holds_alternative<FiniteSeq>(s.shape())) {
    j["base"] = s.base() == SeqBase::One ? "one" : "zero";
  }
  if (s.zero_at_origin()) j["zero_at_origin"] = true;
  return j;
}

// `one_based` marks beta contexts, where finite lists start at beta_1.
Sequence read_sequence(Reader r, bool one_based) {
  const std::string type = r.str("type");
  SequenceShape shape;
  if (type == "geometric") {
    shape = GeometricSeq{r.num("ratio"), r.num_or("scale", 1.0)};
  } else if (type == "arfima") {
    shape = ArfimaSeq{r.num("d"), r.num_or("scale", 1.0)};
  } else if (type == "finite") {
    shape = FiniteSeq{r.nums("values")};
  } else if (type == "zero") {
    shape = ZeroSeq{};
  } else {
    Reader::fail(r.at_path("type"), "unknown sequence type '" + type + "'");
  }
  SeqBase base = one_based ? SeqBase::One : SeqBase::Zero;
  if (r.has("base")) {
    const std::string b = r.str("base");
    if (type != "finite") Reader::fail(r.at_path("base"), "only finite sequences take a base");
    if (b == "one") {
      base = SeqBase::One;
    } else if (b == "zero") {
      if (one_based) Reader::fail(r.at_path("base"), "beta sequences start at index 1");
      base = SeqBase::Zero;
    } else {
      Reader::fail(r.at_path("base"), "expected \"zero\" or \"one\"");
    }
  }
  const bool zao = r.boolean_or("zero_at_origin", false);
  r.done();
  return guarded(r.path(), [&] { return Sequence(shape, base, zao); });
}

// --- Beta ----------------------------------------------------------------------

json beta_json(const BetaScheme& b) {
  json j;
  std::visit(overloaded{
                 [&](const GeneralBeta& g) {
                   if (auto* t = std::get_if<BetaTable>(&g.rule)) {
                     j["type"] = "table";
                     j["rows"] = t->rows;
                   } else {
                     const auto& p = std::get<BetaProduct>(g.rule);
                     j["type"] = "product";
                     j["row"] = sequence_json(p.row);
                     j["col"] = sequence_json(p.col);
                   }
                 },
                 [&](const SumFormBeta& s) {
                   j["type"] = "sum_form";
                   j["seq"] = sequence_json(s.seq);
                 },
                 [&](const ColumnFormBeta& c) {
                   j["type"] = "column_form";
                   j["seq"] = sequence_json(c.seq);
                 },
                 [&](const ConstantOneBeta&) { j["type"] = "constant_one"; },
                 [&](const ZeroBeta&) { j["type"] = "zero"; },
                 [&](const FiniteLagBeta& f) {
                   j["type"] = "finite_lag";
                   j["p"] = f.p;
                   j["rows"] = f.table.rows;
                 },
             },
             b.shape());
  return j;
}

BetaScheme read_beta(Reader r) {
  const std::string type = r.str("type");
  BetaScheme out;
  const std::string here = r.path();
  if (type == "zero") {
    out = BetaScheme::zero();
  } else if (type == "constant_one") {
    out = BetaScheme::constant_one();
  } else if (type == "sum_form") {
    auto s = read_sequence(r.child("seq"), true);
    out = guarded(here, [&] { return BetaScheme::sum_form(s); });
  } else if (type == "column_form") {
    auto s = read_sequence(r.child("seq"), true);
    out = guarded(here, [&] { return BetaScheme::column_form(s); });
  } else if (type == "table") {
    auto rows = r.rows("rows");
    out = guarded(here, [&] { return BetaScheme::table(rows); });
  } else if (type == "product") {
    auto row = read_sequence(r.child("row"), false);
    auto col = read_sequence(r.child("col"), true);
    out = guarded(here, [&] { return BetaScheme::product(row, col); });
  } else if (type == "finite_lag") {
    const std::size_t p = r.size("p");
    auto rows = r.rows("rows");
    out = guarded(here, [&] { return BetaScheme::finite_lag(p, rows); });
  } else {
    Reader::fail(r.at_path("type"), "unknown beta type '" + type + "'");
  }
  r.done();
  return out;
}

// --- Spec ------------------------------------------------------------------------

json spec_json(const EquationSpec& s) {
  json j;
  j["family"] = to_string(s.family);
  j["mu"] = s.mu;
  j["kernel"] = kernel_json(s.kernel);
  j["alpha"] = sequence_json(s.alpha);
  j["beta"] = beta_json(s.beta);
  if (s.tv) j["tv"] = json{{"dfun", kernel_json(s.tv->dfun)}, {"d_bar", s.tv->d_bar}};
  if (s.larch) {
    j["larch"] = json{{"intercept", s.larch->intercept}, {"beta", sequence_json(s.larch->beta)}};
  }
  if (s.lag_support) j["lag_support"] = *s.lag_support;
  return j;
}

EquationSpec read_spec(Reader r) {
  EquationSpec s;
  const std::string fam = r.str("family");
  s.family = guarded(r.at_path("family"), [&] { return family_from_string(fam); });
  s.mu = r.num_or("mu", 0.0);
  if (r.has("kernel")) s.kernel = read_kernel(r.child("kernel"));
  if (r.has("alpha")) s.alpha = read_sequence(r.child("alpha"), false);
  if (r.has("beta")) s.beta = read_beta(r.child("beta"));
  if (r.has("tv")) {
    Reader t = r.child("tv");
    TvArfimaParams tv;
    tv.dfun = read_kernel(t.child("dfun"));
    tv.d_bar = t.num("d_bar");
    t.done();
    s.tv = tv;
  }
  if (r.has("larch")) {
    Reader l = r.child("larch");
    LarchParams lp;
    lp.intercept = l.num("intercept");
    lp.beta = read_sequence(l.child("beta"), true);
    l.done();
    s.larch = lp;
  }
  if (r.has("lag_support")) s.lag_support = r.size("lag_support");
  r.done();
  guarded(r.path(), [&] {
    s.validate();
    return 0;
  });
  return s;
}

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Convert the byte offset into line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("", "JSON syntax error at line " + std::to_string(line) + ", column " +
                              std::to_string(col));
  }
}

json moment_json(const MomentParams& m) {
  return json{{"p", m.p}, {"mu_p", m.mu_p}, {"c_p", m.c_p}};
}

MomentParams read_moment(Reader r) {
  MomentParams m;
  m.p = r.num("p");
  const MomentParams g = guarded(r.at_path("p"), [&] { return MomentParams::gaussian(m.p); });
  m.mu_p = r.num_or("mu_p", g.mu_p);
  m.c_p = r.num_or("c_p", g.c_p);
  r.done();
  guarded(r.path(), [&] {
    m.validate();
    return 0;
  });
  return m;
}

json number_or_string(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json series_json(const SeriesResult& r) {
  const json value = r.status == SeriesStatus::Diverged ? json(nullptr) : number_or_string(r.value);
  return json{{"value", value},
              {"status", to_string(r.status)},
              {"method", to_string(r.method)},
              {"remainder", number_or_string(r.remainder)},
              {"terms", r.terms}};
}

}  // namespace

std::string spec_to_json(const EquationSpec& spec, int indent) {
  return spec_json(spec).dump(indent);
}

EquationSpec spec_from_json(std::string_view text) { return read_spec(Reader(parse(text), "")); }

std::string run_config_to_json(const RunConfig& c, int indent) {
  json j;
  j["spec"] = spec_json(c.spec);
  j["n"] = c.n;
  if (c.M) j["M"] = *c.M;
  j["seed"] = c.seed;
  j["replicates"] = c.replicates;
  j["distribution"] = to_string(c.distribution);
  j["truncation"] = json{{"max_terms", c.truncation.max_terms},
                         {"abs_tail_tol", c.truncation.abs_tail_tol},
                         {"max_depth", c.truncation.max_depth},
                         {"max_dp_lag", c.truncation.max_dp_lag}};
  if (c.moment) j["moment"] = moment_json(*c.moment);
  const auto& d = c.diagnostics;
  j["diagnostics"] = json{{"acf_max_lag", d.acf_max_lag},       {"fit_lags", d.fit_lags},
                          {"block_sizes", d.block_sizes},       {"bins", d.bins},
                          {"known_mean", d.known_mean},         {"squared_cov_lags", d.squared_cov_lags}};
  j["oracle"] = json{{"window", c.oracle.window}, {"trials", c.oracle.trials}};
  json l{{"simulate", c.larch.simulate}};
  if (c.larch.moment) l["moment"] = moment_json(*c.larch.moment);
  j["larch"] = l;
  j["output_dir"] = c.output_dir;
  return j.dump(indent);
}

RunConfig run_config_from_json(std::string_view text) {
  const json j = parse(text);
  Reader r(j, "");
  RunConfig c;
  c.spec = read_spec(r.child("spec"));
  c.n = r.size("n");
  if (c.n == 0) Reader::fail("n", "must be >= 1");
  if (r.has("M")) c.M = r.size("M");
  c.seed = r.uint("seed");
  c.replicates = r.size_or("replicates", 1);
  if (c.replicates == 0) Reader::fail("replicates", "must be >= 1");
  if (r.has("distribution")) {
    const std::string d = r.str("distribution");
    c.distribution = guarded("distribution", [&] { return distribution_from_string(d); });
  }
  if (r.has("truncation")) {
    Reader t = r.child("truncation");
    c.truncation.max_terms = t.size_or("max_terms", c.truncation.max_terms);
    c.truncation.abs_tail_tol = t.num_or("abs_tail_tol", c.truncation.abs_tail_tol);
    c.truncation.max_depth = t.size_or("max_depth", c.truncation.max_depth);
    c.truncation.max_dp_lag = t.size_or("max_dp_lag", c.truncation.max_dp_lag);
    t.done();
  }
  if (r.has("moment")) c.moment = read_moment(r.child("moment"));
  if (r.has("diagnostics")) {
    Reader d = r.child("diagnostics");
    auto& s = c.diagnostics;
    s.acf_max_lag = d.size_or("acf_max_lag", s.acf_max_lag);
    if (d.has("fit_lags")) s.fit_lags = d.sizes("fit_lags");
    if (d.has("block_sizes")) s.block_sizes = d.sizes("block_sizes");
    s.bins = d.size_or("bins", s.bins);
    s.known_mean = d.boolean_or("known_mean", s.known_mean);
    if (d.has("squared_cov_lags")) s.squared_cov_lags = d.sizes("squared_cov_lags");
    d.done();
  }
  if (r.has("oracle")) {
    Reader o = r.child("oracle");
    c.oracle.window = o.size_or("window", c.oracle.window);
    c.oracle.trials = o.size_or("trials", c.oracle.trials);
    o.done();
  }
  if (r.has("larch")) {
    Reader l = r.child("larch");
    c.larch.simulate = l.boolean_or("simulate", false);
    if (l.has("moment")) c.larch.moment = read_moment(l.child("moment"));
    l.done();
  }
  if (r.has("output_dir")) c.output_dir = r.str("output_dir");
  r.done();
  return c;
}

std::string report_to_json(const SolvabilityReport& rep, int indent) {
  json j;
  j["family"] = to_string(rep.family);
  j["exists"] = to_string(rep.exists);
  j["method"] = to_string(rep.method);
  j["truncation_remainder"] = number_or_string(rep.truncation_remainder);
  j["a2"] = number_or_string(rep.a2);
  if (rep.b2) j["b2"] = number_or_string(*rep.b2);
  if (rep.kq) j["kq"] = series_json(*rep.kq);
  if (rep.kq_p) j["kq_p"] = series_json(*rep.kq_p);
  if (rep.moment) j["moment"] = moment_json(*rep.moment);
  if (rep.tilde_kq) j["tilde_kq"] = series_json(*rep.tilde_kq);
  if (rep.tilde_kq_envelope) j["tilde_kq_envelope"] = series_json(*rep.tilde_kq_envelope);
  if (rep.omega2_bound) j["omega2_bound"] = series_json(*rep.omega2_bound);
  if (rep.kq_sum_form_bound) j["kq_sum_form_bound"] = series_json(*rep.kq_sum_form_bound);
  j["notes"] = rep.notes;
  return j.dump(indent);
}

std::string larch_report_to_json(const LarchReport& rep, int indent) {
  json j;
  j["exists"] = rep.exists;
  j["b2"] = number_or_string(rep.b2);
  j["variance"] = rep.variance ? json(*rep.variance) : json(nullptr);
  if (rep.p_condition_holds) j["p_condition_holds"] = *rep.p_condition_holds;
  if (rep.p_moment_bound) j["p_moment_bound"] = series_json(*rep.p_moment_bound);
  if (rep.old_condition_holds) j["old_condition_holds"] = *rep.old_condition_holds;
  return j.dump(indent);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace projlm
