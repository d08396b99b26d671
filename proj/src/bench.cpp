#include "tnn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tnn/pricing.hpp"

namespace tnn::bench {

namespace {

using json = nlohmann::json;

constexpr std::string_view kSchema = "1";

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "schema", "kind", "runs", "seed", "out", "threshold", "window", "jobs", "architecture", "architectures",
      "bond_dim", "activation", "steps", "batch", "iterations", "learning_rate", "loss", "option", "strike", "paths",
      "heston.rate", "heston.kappa", "heston.theta", "heston.eta", "heston.rho", "heston.spot", "heston.v0",
      "heston.maturity", "bermudan.assets", "bermudan.spot", "bermudan.vol", "bermudan.rate", "bermudan.dividend",
      "bermudan.maturity", "bermudan.dates", "bermudan.strike", "bermudan.regressor", "bermudan.epochs",
      "bermudan.batch", "bermudan.learning_rate", "bermudan.train_paths", "bermudan.price_paths",
      "bermudan.itm_only"};
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

// Splits on commas outside parentheses, so "DNN(4,24), TNN(16)" has two items.
std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : v) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

ExperimentKind parse_kind(const std::string& v) {
  const std::string l = lower(v);
  if (l == "european" || l == "train") return ExperimentKind::European;
  if (l == "bermudan") return ExperimentKind::Bermudan;
  if (l == "analytic") return ExperimentKind::Analytic;
  if (l == "sweep") return ExperimentKind::Sweep;
  if (l == "simulate") return ExperimentKind::Simulate;
  throw ConfigError("config key 'kind': unknown experiment kind '" + v + "'");
}

// Rebuilds every derived field from defaults plus the normalized entries.
void apply_entries(ExperimentConfig& c) {
  const auto& e = c.entries;
  const auto get = [&](const std::string& k) -> const std::string* {
    auto it = e.find(k);
    return it == e.end() ? nullptr : &it->second;
  };
  const auto num = [&](const std::string& k, double& dst) {
    if (auto* v = get(k)) dst = to_double(k, *v);
  };
  const auto count = [&](const std::string& k, std::size_t& dst) {
    if (auto* v = get(k)) dst = to_uint(k, *v);
  };

  if (auto* v = get("schema"); v && *v != kSchema && *v != "v" + std::string(kSchema))
    throw ConfigError("config key 'schema': unsupported schema '" + *v + "' (expected " + std::string(kSchema) + ")");
  if (auto* v = get("kind")) c.kind = parse_kind(*v);
  count("runs", c.runs);
  if (auto* v = get("seed")) c.seed = to_uint("seed", *v);
  if (auto* v = get("out")) c.out = *v;
  num("threshold", c.threshold);
  count("window", c.window);
  count("jobs", c.jobs);
  count("paths", c.paths);

  bsde::TrainConfig& t = c.train;
  std::size_t chi = 2;
  count("bond_dim", chi);
  ad::Activation act = ad::Activation::Tanh;
  try {
    if (auto* v = get("activation")) act = nn::parse_activation(*v);
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("config key 'activation': ") + ex.what());
  }
  const auto arch = [&](const std::string& key, const std::string& name) {
    try {
      nn::NetworkSpec s = nn::NetworkSpec::parse(name, chi);
      s.activation = act;
      return s;
    } catch (const std::exception& ex) {
      throw ConfigError("config key '" + key + "': " + ex.what());
    }
  };
  t.network = arch("architecture", get("architecture") ? *get("architecture") : "TNN(16)");
  c.architectures.clear();
  for (const std::string& name :
       split_list(get("architectures") ? *get("architectures") : "TNN(16), DNN(4,24), DNN(16,16)"))
    c.architectures.push_back(arch("architectures", name));
  count("steps", t.steps);
  count("batch", t.batch);
  count("iterations", t.iterations);
  num("learning_rate", t.learning_rate);
  num("strike", t.strike);
  if (auto* v = get("loss")) {
    const std::string l = lower(*v);
    if (l == "logcosh") t.loss = bsde::LossKind::LogCosh;
    else if (l == "squared") t.loss = bsde::LossKind::Squared;
    else throw ConfigError("config key 'loss': expected logcosh or squared, got '" + *v + "'");
  }
  if (auto* v = get("option")) {
    const std::string l = lower(*v);
    if (l == "call") t.kind = bsde::OptionKind::Call;
    else if (l == "put") t.kind = bsde::OptionKind::Put;
    else throw ConfigError("config key 'option': expected call or put, got '" + *v + "'");
  }
  sde::HestonParams& h = t.heston;
  num("heston.rate", h.rate);
  num("heston.kappa", h.kappa);
  num("heston.theta", h.theta);
  num("heston.eta", h.eta);
  num("heston.rho", h.rho);
  num("heston.spot", h.spot);
  num("heston.v0", h.v0);
  num("heston.maturity", h.maturity);
  t.seed = c.seed;

  bermudan::BermudanSpec& b = c.bermudan;
  std::size_t assets = 5;
  count("bermudan.assets", assets);
  double spot = 100.0, vol = 0.2;
  num("bermudan.spot", spot);
  num("bermudan.vol", vol);
  if (assets == 0) throw ConfigError("config key 'bermudan.assets': must be at least 1");
  b.basket = sde::GbmBasketParams::symmetric(assets, spot, vol);
  num("bermudan.rate", b.basket.rate);
  num("bermudan.dividend", b.basket.dividend);
  num("bermudan.maturity", b.basket.maturity);
  count("bermudan.dates", b.basket.exercise_dates);
  num("bermudan.strike", b.strike);
  b.regressor = bermudan::BermudanSpec::default_regressor(assets);
  if (auto* v = get("bermudan.regressor")) {
    try {
      nn::NetworkSpec s = nn::NetworkSpec::parse(*v, chi);
      s.input_dim = assets;
      s.activation = ad::Activation::LeakyRelu;
      b.regressor = s;
    } catch (const std::exception& ex) {
      throw ConfigError(std::string("config key 'bermudan.regressor': ") + ex.what());
    }
  } else {
    b.regressor.bond_dim = chi;
  }
  count("bermudan.epochs", b.epochs_per_date);
  count("bermudan.batch", b.batch_size);
  num("bermudan.learning_rate", b.learning_rate);
  count("bermudan.train_paths", b.train_paths);
  count("bermudan.price_paths", b.price_paths);
  if (auto* v = get("bermudan.itm_only")) b.itm_only = to_bool("bermudan.itm_only", *v);
  b.seed = c.seed;
}

std::string file_stem(const nn::NetworkSpec& s) {
  std::string out;
  for (char ch : s.name()) {
    if (ch == '(' || ch == ',') out += '_';
    else if (ch != ')') out += ch;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

// Runs task(i) for i in [0, n) on up to `jobs` threads; results land in caller-owned slots.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) task(i);
    });
  for (auto& th : pool) th.join();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
}

json convergence_json(const ConvergenceTime& c) {
  if (!c.converged) return {{"converged", false}};
  return {{"converged", true}, {"iteration", c.iteration}, {"wallclock_ms", c.wall_ms}, {"cpu_ms", c.cpu_ms}};
}

}  // namespace

std::string_view kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::European: return "european";
    case ExperimentKind::Bermudan: return "bermudan";
    case ExperimentKind::Analytic: return "analytic";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Simulate: return "simulate";
  }
  return "?";
}

ExperimentConfig::ExperimentConfig() { apply_entries(*this); }

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool saw_schema = false;
  std::map<std::string, std::size_t> where;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string at = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value', got '" + body + "'");
    const std::string key = lower(trim(body.substr(0, eq)));
    const std::string value = trim(body.substr(eq + 1));
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
      throw ConfigError(at + "unknown key '" + key + "'");
    if (!saw_schema && key != "schema") throw ConfigError(at + "the first key must be 'schema'");
    saw_schema = true;
    if (where.count(key)) throw ConfigError(at + "duplicate key '" + key + "' (first set on line " +
                                            std::to_string(where[key]) + ")");
    if (value.empty()) throw ConfigError(at + "key '" + key + "' has no value");
    where[key] = lineno;
    c.entries[key] = value;
  }
  if (!saw_schema) throw ConfigError("config has no 'schema' key");
  try {
    apply_entries(c);
  } catch (const ConfigError& ex) {
    // attach the line of the offending key
    const std::string msg = ex.what();
    for (const auto& [k, ln] : where)
      if (msg.find("'" + k + "'") != std::string::npos)
        throw ConfigError("line " + std::to_string(ln) + ": " + msg);
    throw;
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& ex) {
    throw ConfigError(path.string() + ": " + ex.what());
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::string k = lower(trim(key));
  if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end())
    throw ConfigError("unknown key '" + k + "'");
  entries[k] = trim(value);
  apply_entries(*this);
}

void ExperimentConfig::validate() const {
  if (runs == 0) throw ConfigError("config key 'runs': must be at least 1");
  if (threshold < 0.0) throw ConfigError("config key 'threshold': must be positive (or 0 for the pilot rule)");
  if (window == 0) throw ConfigError("config key 'window': must be at least 1");
  if (architectures.empty()) throw ConfigError("config key 'architectures': empty list");
  try {
    switch (kind) {
      case ExperimentKind::European:
      case ExperimentKind::Sweep:
        train.validate();
        for (const auto& a : architectures) {
          bsde::TrainConfig t = train;
          t.network = a;
          t.validate();
        }
        break;
      case ExperimentKind::Simulate:
        train.heston.validate();
        if (paths == 0 || train.steps == 0) throw InvalidArgument("paths and steps must be positive");
        break;
      case ExperimentKind::Analytic:
        train.heston.validate();
        break;
      case ExperimentKind::Bermudan:
        bermudan.validate();
        break;
    }
  } catch (const InvalidArgument& ex) {
    throw ConfigError(std::string("invalid configuration: ") + ex.what());
  }
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
  };
  std::map<std::string, std::string> all = entries;
  all["kind"] = std::string(kind_name(kind));
  all["seed"] = std::to_string(seed);
  all["runs"] = std::to_string(runs);
  all.erase("out");
  all.erase("jobs");
  for (const auto& [k, v] : all) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::uint64_t> ExperimentConfig::seeds() const {
  std::vector<std::uint64_t> s(runs);
  for (std::size_t k = 0; k < runs; ++k) s[k] = seed + k;
  return s;
}

ConvergenceTime time_to_converge(const bsde::TrainHistory& history, double threshold, std::size_t window) {
  ConvergenceTime out;
  if (window == 0 || history.iterations() < window) return out;
  double sum = 0.0;
  for (std::size_t k = 0; k < history.iterations(); ++k) {
    sum += history.loss[k];
    if (k >= window) sum -= history.loss[k - window];
    if (k + 1 < window) continue;
    if (sum / static_cast<double>(window) < threshold) {
      out.converged = true;
      out.iteration = k;
      if (k < history.wall_ms.size()) out.wall_ms = history.wall_ms[k];
      if (k < history.cpu_ms.size()) out.cpu_ms = history.cpu_ms[k];
      return out;
    }
  }
  return out;
}

double final_window_loss(const bsde::TrainHistory& history, std::size_t window) {
  const std::size_t n = history.iterations();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t w = std::min(std::max<std::size_t>(window, 1), n);
  double s = 0.0;
  for (std::size_t k = n - w; k < n; ++k) s += history.loss[k];
  return s / static_cast<double>(w);
}

std::vector<std::pair<std::size_t, std::size_t>> enumerate_equal_param_dnns(std::size_t target, std::size_t input_dim,
                                                                            std::size_t output_dim) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  // count(a, b) = (in + 1)a + (a + 1 + out)b + out, increasing in both widths
  for (std::size_t a = 1; (input_dim + 1) * a + (a + 1 + output_dim) + output_dim <= target; ++a) {
    const std::size_t fixed = (input_dim + 1) * a + output_dim;
    const std::size_t per_b = a + 1 + output_dim;
    if ((target - fixed) % per_b == 0) out.emplace_back(a, (target - fixed) / per_b);
  }
  return out;
}

const RunRecord& SweepResult::run(std::size_t arch, std::size_t seed_index) const {
  const std::size_t per_arch = rows.empty() ? 0 : runs.size() / rows.size();
  return runs.at(arch * per_arch + seed_index);
}

std::string run_file_name(const nn::NetworkSpec& network, std::uint64_t seed) {
  return file_stem(network) + "_seed" + std::to_string(seed) + ".csv";
}

SweepResult sweep(const ExperimentConfig& config, std::span<const nn::NetworkSpec> architectures) {
  const std::vector<std::uint64_t> seeds = config.seeds();
  const std::size_t per_arch = seeds.size();
  SweepResult result;
  result.runs.resize(architectures.size() * per_arch);
  std::vector<std::string> errors(result.runs.size());

  parallel_for(result.runs.size(), config.jobs, [&](std::size_t i) {
    RunRecord& r = result.runs[i];
    r.network = architectures[i / per_arch];
    r.seed = seeds[i % per_arch];
    bsde::TrainConfig t = config.train;
    t.network = r.network;
    t.seed = r.seed;
    try {
      r.history = bsde::train(t);
      r.final_loss = final_window_loss(r.history, config.window);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error(errors[i]);

  result.threshold = config.threshold;
  if (!(result.threshold > 0.0)) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < architectures.size(); ++a) best = std::min(best, result.runs[a * per_arch].final_loss);
    result.threshold = 2.0 * best;
  }
  for (RunRecord& r : result.runs) r.convergence = time_to_converge(r.history, result.threshold, config.window);

  result.analytic_price = pricing::heston_european(config.train.heston, config.train.strike,
                                                   config.train.heston.maturity, config.train.kind)
                              .price;
  for (std::size_t a = 0; a < architectures.size(); ++a) {
    SweepRow row;
    row.architecture = architectures[a].name();
    row.param_count = nn::param_count(architectures[a]);
    std::vector<double> prices, losses, epochs, walls;
    for (std::size_t s = 0; s < per_arch; ++s) {
      const RunRecord& r = result.runs[a * per_arch + s];
      prices.push_back(r.history.final_price);
      losses.push_back(r.final_loss);
      if (r.convergence.converged) {
        epochs.push_back(static_cast<double>(r.convergence.iteration));
        walls.push_back(r.convergence.wall_ms);
      }
    }
    row.mean_price = mean_of(prices);
    row.std_price = pop_std(prices);
    row.mean_loss = mean_of(losses);
    row.std_loss = pop_std(losses);
    row.converged = epochs.size();
    row.mean_epochs = mean_of(epochs);
    row.mean_wall_ms = mean_of(walls);
    result.rows.push_back(row);
  }
  return result;
}

json summary_json(const ExperimentConfig& config, const SweepResult& result) {
  json runs = json::array();
  for (const RunRecord& r : result.runs) {
    runs.push_back({{"architecture", r.network.name()},
                    {"seed", r.seed},
                    {"param_count", nn::param_count(r.network)},
                    {"csv", run_file_name(r.network, r.seed)},
                    {"iterations", r.history.iterations()},
                    {"initial_price", r.history.initial_price},
                    {"final_price", r.history.final_price},
                    {"final_loss", r.final_loss},
                    {"time_to_converge", convergence_json(r.convergence)},
                    {"wallclock_ms", r.history.wall_ms},
                    {"cpu_ms", r.history.cpu_ms}});
  }
  json rows = json::array();
  for (const SweepRow& s : result.rows) {
    rows.push_back({{"architecture", s.architecture},
                    {"param_count", s.param_count},
                    {"mean_final_price", s.mean_price},
                    {"std_final_price", s.std_price},
                    {"mean_final_loss", s.mean_loss},
                    {"std_final_loss", s.std_loss},
                    {"converged_runs", s.converged},
                    {"mean_epochs_to_threshold", s.mean_epochs},
                    {"mean_wallclock_ms_to_threshold", s.mean_wall_ms}});
  }
  return {{"schema", "v1"},
          {"kind", kind_name(config.kind)},
          {"config_hash", config.hash()},
          {"analytic_price", result.analytic_price},
          {"threshold", result.threshold},
          {"window", config.window},
          {"architectures", rows},
          {"runs", runs}};
}

int run(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out);
  const auto summary_path = config.out / "summary.json";

  switch (config.kind) {
    case ExperimentKind::Analytic: {
      const auto& t = config.train;
      const auto call = pricing::heston_european(t.heston, t.strike, t.heston.maturity, pricing::OptionKind::Call);
      const auto put = pricing::heston_european(t.heston, t.strike, t.heston.maturity, pricing::OptionKind::Put);
      const json j = {{"schema", "v1"},
                      {"kind", "analytic"},
                      {"config_hash", config.hash()},
                      {"strike", t.strike},
                      {"maturity", t.heston.maturity},
                      {"option", t.kind == bsde::OptionKind::Call ? "call" : "put"},
                      {"price", t.kind == bsde::OptionKind::Call ? call.price : put.price},
                      {"call", call.price},
                      {"put", put.price},
                      {"quadrature_nodes", call.quadrature_nodes},
                      {"omega_max", call.omega_max},
                      {"est_error", std::max(call.est_error, put.est_error)}};
      write_file(summary_path, j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    case ExperimentKind::Simulate: {
      json files = json::array();
      for (std::uint64_t s : config.seeds()) {
        const auto ps = sde::simulate_heston(config.train.heston, config.train.steps, config.paths, s);
        std::ostringstream csv;
        sde::write_paths_csv(csv, ps);
        const std::string name = "paths_seed" + std::to_string(s) + ".csv";
        write_file(config.out / name, csv.str());
        files.push_back(name);
      }
      write_file(summary_path, json{{"schema", "v1"},
                                    {"kind", "simulate"},
                                    {"config_hash", config.hash()},
                                    {"paths", config.paths},
                                    {"steps", config.train.steps},
                                    {"files", files}}
                                       .dump(2) + "\n");
      return 0;
    }
    case ExperimentKind::Bermudan: {
      json results = json::array();
      std::vector<double> prices;
      int status = 0;
      for (std::uint64_t s : config.seeds()) {
        bermudan::BermudanSpec spec = config.bermudan;
        spec.seed = s;
        try {
          const auto r = bermudan::ls_nn_price(spec);
          std::ostringstream csv;
          bermudan::write_trace_csv(csv, r.trace);
          const std::string name = "bermudan_" + file_stem(spec.regressor) + "_seed" + std::to_string(s) + ".csv";
          write_file(config.out / name, csv.str());
          json j = bermudan::result_json(spec, r);
          j["csv"] = name;
          results.push_back(j);
          prices.push_back(r.price);
        } catch (const std::exception& ex) {
          std::cerr << "bermudan run seed " << s << " aborted: " << ex.what() << "\n";
          status = 1;
        }
      }
      write_file(summary_path, json{{"schema", "v1"},
                                    {"kind", "bermudan"},
                                    {"config_hash", config.hash()},
                                    {"mean_price", mean_of(prices)},
                                    {"cross_seed_std", pop_std(prices)},
                                    {"results", results}}
                                       .dump(2) + "\n");
      return status;
    }
    case ExperimentKind::European:
    case ExperimentKind::Sweep: {
      std::vector<nn::NetworkSpec> archs = config.kind == ExperimentKind::Sweep
                                               ? config.architectures
                                               : std::vector<nn::NetworkSpec>{config.train.network};
      SweepResult result;
      try {
        result = sweep(config, archs);
      } catch (const std::exception& ex) {
        std::cerr << "training aborted: " << ex.what() << "\n";
        return 1;
      }
      for (const RunRecord& r : result.runs) {
        std::ostringstream csv;
        bsde::write_history_csv(csv, r.history);
        write_file(config.out / run_file_name(r.network, r.seed), csv.str());
      }
      write_file(summary_path, summary_json(config, result).dump(2) + "\n");
      return 0;
    }
  }
  return 1;
}

int run_experiment(const std::filesystem::path& config_path) { return run(ExperimentConfig::load(config_path)); }

}  // namespace tnn::bench
