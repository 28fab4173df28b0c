#include "rolf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <utility>

namespace rolf {

std::string_view to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::scenario: return "scenario";
    case InstanceKind::thm1: return "thm1";
    case InstanceKind::appF: return "appF";
    case InstanceKind::varying: return "varying";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError("bad value for '" + std::string(key) + "': '" + std::string(text) + "'");
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("bad boolean for '" + std::string(key) + "': '" + std::string(text) + "'");
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "instance") {
    if (value == "scenario") instance = InstanceKind::scenario;
    else if (value == "thm1") instance = InstanceKind::thm1;
    else if (value == "appF") instance = InstanceKind::appF;
    else if (value == "varying") instance = InstanceKind::varying;
    else throw ConfigError("unknown instance kind '" + std::string(value) + "'");
  } else if (key == "scenario") {
    scenario = parse_number<int>(key, value);
  } else if (key == "case") {
    feature_case = parse_number<int>(key, value);
  } else if (key == "K") {
    K = parse_number<int>(key, value);
  } else if (key == "d") {
    d = parse_number<int>(key, value);
  } else if (key == "d_z") {
    d_z = parse_number<int>(key, value);
  } else if (key == "d_u") {
    d_u = parse_number<int>(key, value);
  } else if (key == "algorithms") {
    algorithms.clear();
    for (auto name : split(value, ','))
      if (!name.empty()) algorithms.emplace_back(name);
  } else if (key == "horizon" || key == "T") {
    horizon = parse_number<int>(key, value);
  } else if (key == "seeds") {
    seeds.clear();
    for (auto s : split(value, ','))
      if (!s.empty()) seeds.push_back(parse_number<std::uint64_t>(key, s));
  } else if (key == "p") {
    p = parse_number<double>(key, value);
  } else if (key == "delta") {
    delta = parse_number<double>(key, value);
  } else if (key == "delta_prime") {
    delta_prime = parse_number<double>(key, value);
  } else if (key == "sigma") {
    sigma = parse_number<double>(key, value);
  } else if (key == "exploration_scale") {
    exploration_scale = value == "auto" ? std::numeric_limits<double>::quiet_NaN()
                                        : parse_number<double>(key, value);
  } else if (key == "penalty_scale") {
    penalty_scale = parse_number<double>(key, value);
  } else if (key == "refit") {
    if (value != "auto" && value != "every" && value != "sparse")
      throw ConfigError("refit must be auto, every or sparse");
    refit = std::string(value);
  } else if (key == "master_seed") {
    master_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
  } else if (key == "out") {
    out_dir = std::string(value);
  } else if (key == "plot") {
    plot = parse_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig ExperimentConfig::parse(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return parse(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (seeds.empty()) throw ConfigError("seeds must be non-empty");
  if (!(p > 0.5 && p < 1.0)) throw ConfigError("p must be in (1/2, 1)");
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must be in (0, 1)");
  if (!(delta_prime > 0 && delta_prime < 1)) throw ConfigError("delta_prime must be in (0, 1)");
  if (!(sigma >= 0)) throw ConfigError("sigma must be non-negative");
  if (!std::isnan(exploration_scale) && !(exploration_scale > 0))
    throw ConfigError("exploration_scale must be positive or auto");
  if (!(penalty_scale > 0)) throw ConfigError("penalty_scale must be positive");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (algorithms.empty()) throw ConfigError("algorithms must be non-empty");
  for (const auto& name : algorithms) {
    if (!is_known_algorithm(name)) throw ConfigError("unknown algorithm '" + name + "'");
    if (name == "rolf_v" && fixed_features())
      throw ConfigError("rolf_v needs time-varying features (instance = varying)");
    if ((name == "rolf_lasso" || name == "rolf_ridge") && !fixed_features())
      throw ConfigError(name + " needs fixed features; use rolf_v on varying instances");
  }
  if (instance == InstanceKind::scenario) scenario_config(0).validate();
  if (instance == InstanceKind::varying && (K < 0 || d < 0 || d_u < -1))
    throw ConfigError("varying instance: bad dimensions");
}

ScenarioConfig ExperimentConfig::scenario_config(std::uint64_t seed) const {
  ScenarioConfig sc = ScenarioConfig::defaults(scenario, feature_case);
  if (K > 0) {
    sc.K = K;
    if (scenario == 2) sc.d = sc.d_z = 2 * K;
  }
  if (d_z > 0) {
    sc.d_z = d_z;
    sc.d = scenario == 2 ? d_z : d_z / 2;
  }
  if (d > 0) {
    sc.d = d;
    if (scenario == 2 && d_z <= 0) sc.d_z = d;
  }
  sc.d_u = sc.d_z - sc.d;
  if (d_u >= 0 && d_u != sc.d_u) throw ConfigError("d_u must equal d_z - d");
  sc.noise_sigma = sigma;
  sc.seed = seed;
  return sc;
}

PolicyConfig ExperimentConfig::policy_config() const {
  PolicyConfig pc;
  pc.p = p;
  pc.delta = delta;
  pc.delta_prime = delta_prime;
  pc.sigma = sigma;
  pc.exploration_scale = exploration_scale;
  pc.horizon = horizon;
  pc.penalty_scale = penalty_scale;
  const bool every = refit == "every" || (refit == "auto" && horizon <= 2000);
  pc.schedule = every ? RefitSchedule::every() : RefitSchedule{};
  return pc;
}

// ---------------------------------------------------------------------------

namespace {

// Uniform view over fixed and time-varying instances.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Matrix observed(int t) = 0;
  // Expected rewards of the round last returned by observed().
  virtual const Vector& expected() const = 0;
  virtual bool theta_rescaled() const { return false; }
  double pull(Arm arm, Rng& noise) const {
    return expected()(arm) + noise_sigma_ * noise.normal();
  }

 protected:
  double noise_sigma_ = 0.0;
};

class FixedEnvironment : public Environment {
 public:
  explicit FixedEnvironment(ProblemInstance inst) : inst_(std::move(inst)) {
    noise_sigma_ = inst_.noise_sigma;
    X_ = inst_.X();
  }
  Matrix observed(int) override { return X_; }
  const Vector& expected() const override { return inst_.expected_rewards; }
  bool theta_rescaled() const override { return inst_.theta_rescaled; }

 private:
  ProblemInstance inst_;
  Matrix X_;
};

class VaryingEnvironment : public Environment {
 public:
  explicit VaryingEnvironment(VaryingInstance inst) : inst_(std::move(inst)) {
    noise_sigma_ = inst_.noise_sigma;
  }
  Matrix observed(int t) override {
    Matrix X = inst_.observed(t);
    expected_ = inst_.expected_rewards(X);
    return X;
  }
  const Vector& expected() const override { return expected_; }

 private:
  VaryingInstance inst_;
  Vector expected_;
};

std::unique_ptr<Environment> make_environment(const ExperimentConfig& cfg, std::uint64_t seed) {
  switch (cfg.instance) {
    case InstanceKind::scenario:
      return std::make_unique<FixedEnvironment>(generate_instance(cfg.scenario_config(seed)));
    case InstanceKind::thm1:
      return std::make_unique<FixedEnvironment>(lower_bound_instance_thm1(cfg.sigma));
    case InstanceKind::appF:
      return std::make_unique<FixedEnvironment>(lower_bound_instance_appF(
          cfg.d > 0 ? cfg.d : 4, cfg.d_u >= 0 ? cfg.d_u : 4, cfg.sigma));
    case InstanceKind::varying:
      return std::make_unique<VaryingEnvironment>(
          generate_varying_instance(cfg.K > 0 ? cfg.K : 30, cfg.d > 0 ? cfg.d : 17,
                                    cfg.d_u >= 0 ? cfg.d_u : 18, cfg.sigma, seed));
  }
  throw ConfigError("unknown instance kind");
}

}  // namespace

RunResult run_single(const ExperimentConfig& cfg, std::size_t algorithm_index, std::uint64_t seed) {
  const std::string& algorithm = cfg.algorithms.at(algorithm_index);
  RunResult result;
  result.algorithm = algorithm;
  result.seed = seed;

  auto env = make_environment(cfg, seed);
  result.theta_rescaled = env->theta_rescaled();
  Rng policy_rng = Rng::stream(cfg.master_seed, {algorithm_index, seed, 0});
  Rng noise_rng = Rng::stream(cfg.master_seed, {algorithm_index, seed, 1});

  Matrix X = env->observed(1);
  auto policy = make_policy(algorithm, X, cfg.policy_config(), std::move(policy_rng));

  const std::string run_id = algorithm + "-" + std::to_string(seed);
  result.records.reserve(static_cast<std::size_t>(cfg.horizon));
  double cum = 0.0;
  for (int t = 1; t <= cfg.horizon; ++t) {
    if (t > 1) X = env->observed(t);
    const RewardFn pull = [&](Arm a) { return env->pull(a, noise_rng); };
    const StepOutcome out = policy->step(t, X, pull);
    const Vector& mean = env->expected();

    RunRecord rec;
    rec.run_id = run_id;
    rec.seed = seed;
    rec.algorithm = algorithm;
    rec.t = t;
    rec.explored = out.explored;
    rec.matched = out.matched;
    rec.arm = out.arm;
    rec.reward = out.reward;
    rec.inst_regret = mean.maxCoeff() - mean(out.arm);
    cum += rec.inst_regret;
    rec.cum_regret = cum;
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, std::uint64_t>> tasks;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
    for (auto seed : cfg.seeds) tasks.emplace_back(a, seed);

  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        results[i] = run_single(cfg, tasks[i].first, tasks[i].second);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(tasks.size(), cfg.threads > 0 ? cfg.threads : hw);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

// ---------------------------------------------------------------------------

std::vector<RunRecord> flatten(const std::vector<RunResult>& runs) {
  std::vector<RunRecord> out;
  for (const auto& run : runs) out.insert(out.end(), run.records.begin(), run.records.end());
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, int>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.algorithm, r.t}].push_back(r.cum_regret);

  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (auto& [key, values] : groups) {
    // Sorting makes the floating-point sums independent of record order.
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);

    AggregateRow row;
    row.algorithm = key.first;
    row.t = key.second;
    row.runs = static_cast<int>(values.size());
    row.mean = mean;
    row.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    row.min = values.front();
    row.max = values.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs) {
  return aggregate(flatten(runs));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr std::string_view kRunsHeader =
    "run_id,seed,algorithm,t,explored,matched,arm,reward,inst_regret,cum_regret";
constexpr std::string_view kSummaryHeader = "algorithm,t,runs,mean_cum_regret,std_cum_regret";

}  // namespace

void write_runs_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRunsHeader << '\n';
  for (const auto& r : records) {
    os << r.run_id << ',' << r.seed << ',' << r.algorithm << ',' << r.t << ','
       << (r.explored ? 1 : 0) << ',' << (r.matched ? 1 : 0) << ',' << r.arm << ','
       << fmt(r.reward) << ',' << fmt(r.inst_regret) << ',' << fmt(r.cum_regret) << '\n';
  }
}

std::vector<RunRecord> read_runs_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kRunsHeader)
    throw ConfigError("runs.csv: missing or unexpected header");
  std::vector<RunRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 10)
      throw ConfigError("runs.csv line " + std::to_string(lineno) + ": expected 10 fields");
    RunRecord r;
    r.run_id = std::string(f[0]);
    r.seed = parse_number<std::uint64_t>("seed", f[1]);
    r.algorithm = std::string(f[2]);
    r.t = parse_number<int>("t", f[3]);
    r.explored = parse_bool("explored", f[4]);
    r.matched = parse_bool("matched", f[5]);
    r.arm = parse_number<int>("arm", f[6]);
    r.reward = parse_number<double>("reward", f[7]);
    r.inst_regret = parse_number<double>("inst_regret", f[8]);
    r.cum_regret = parse_number<double>("cum_regret", f[9]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows)
    os << r.algorithm << ',' << r.t << ',' << r.runs << ',' << fmt(r.mean) << ',' << fmt(r.std)
       << '\n';
}

void write_regret_svg(std::ostream& os, const std::vector<AggregateRow>& rows) {
  constexpr double W = 640, H = 400, L = 60, R = 150, T = 20, B = 40;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::map<std::string, std::vector<const AggregateRow*>> series;
  int t_max = 1;
  double y_max = 0.0;
  for (const auto& r : rows) {
    series[r.algorithm].push_back(&r);
    t_max = std::max(t_max, r.t);
    y_max = std::max(y_max, r.mean + r.std);
  }
  if (y_max <= 0) y_max = 1.0;
  auto px = [&](int t) { return L + (W - L - R) * t / t_max; };
  auto py = [&](double y) { return H - B - (H - T - B) * y / y_max; };
  auto pt = [](double x, double y) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x, y);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 8
     << "\" text-anchor=\"middle\">round (max " << t_max << ")</text>\n";
  os << "<text x=\"" << L - 6 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">" << fmt(y_max)
     << "</text>\n";

  std::size_t idx = 0;
  for (const auto& [name, pts] : series) {
    const char* color = kColors[idx % std::size(kColors)];
    std::string band, line;
    for (const auto* r : pts) band += pt(px(r->t), py(r->mean + r->std));
    for (auto it = pts.rbegin(); it != pts.rend(); ++it)
      band += pt(px((*it)->t), py(std::max(0.0, (*it)->mean - (*it)->std)));
    for (const auto* r : pts) line += pt(px(r->t), py(r->mean));
    os << "<polygon points=\"" << band << "\" fill=\"" << color
       << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << W - R + 8 << "\" y=\"" << T + 16 * (idx + 1) << "\" fill=\"" << color
       << "\">" << name << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
}

void write_metadata_csv(std::ostream& os, const std::vector<RunResult>& runs,
                        const ExperimentConfig& cfg) {
  os << "algorithm,seed,instance,horizon,theta_rescaled\n";
  for (const auto& run : runs)
    os << run.algorithm << ',' << run.seed << ',' << to_string(cfg.instance) << ','
       << cfg.horizon << ',' << (run.theta_rescaled ? 1 : 0) << '\n';
}

std::vector<std::filesystem::path> emit_outputs(const std::vector<RunResult>& runs,
                                                const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                                   ec.message());

  std::vector<fs::path> written;
  auto write = [&](const fs::path& path, auto&& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  };

  const auto records = flatten(runs);
  const auto rows = aggregate(records);
  write(dir / "runs.csv", [&](std::ostream& os) { write_runs_csv(os, records); });
  write(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, rows); });
  write(dir / "metadata.csv", [&](std::ostream& os) { write_metadata_csv(os, runs, cfg); });
  if (cfg.plot) write(dir / "regret.svg", [&](std::ostream& os) { write_regret_svg(os, rows); });
  return written;
}

}  // namespace rolf
