#include "balance/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "balance/csv.hpp"

namespace balance {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key, "expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_uint(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define BAL_NUM(name, member)                                                                     \
  Field {                                                                                         \
    name, [](ExperimentConfig& c, const std::string& v) { c.member = to_double(name, v); },       \
        [](const ExperimentConfig& c) { return format_double(c.member); }                         \
  }
#define BAL_UINT(name, member)                                                                    \
  Field {                                                                                         \
    name, [](ExperimentConfig& c, const std::string& v) { c.member = to_uint(name, v); },         \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"kind", [](ExperimentConfig& c, const std::string& v) { c.kind = parse_kind(v); },
       [](const ExperimentConfig& c) { return std::string(kind_name(c.kind)); }},
      {"seed", [](ExperimentConfig& c, const std::string& v) { apply_seed(c, to_uint("seed", v)); },
       [](const ExperimentConfig& c) { return std::to_string(c.trainer.seed); }},
      {"output_dir", [](ExperimentConfig& c, const std::string& v) { c.output_dir = v; },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      BAL_UINT("num_classes", data.num_classes),
      BAL_NUM("rho", data.rho),
      BAL_UINT("n_max", data.n_max),
      BAL_UINT("dim", data.dim),
      BAL_NUM("radius", data.radius),
      BAL_NUM("stddev", data.stddev),
      BAL_UINT("test_per_class", test_per_class),
      BAL_UINT("annotator_per_class", annotator_per_class),
      BAL_UINT("cas_samples", cas_samples),
      {"clf_hidden", [](ExperimentConfig& c, const std::string& v) { c.classifier.hidden = to_sizes("clf_hidden", v); },
       [](const ExperimentConfig& c) { return join(c.classifier.hidden); }},
      BAL_UINT("clf_epochs", classifier.epochs),
      BAL_UINT("clf_batch_size", classifier.batch_size),
      BAL_NUM("clf_lr", classifier.lr),
      {"clf_rho", [](ExperimentConfig& c, const std::string& v) { c.clf_rho = to_double("clf_rho", v); },
       [](const ExperimentConfig& c) { return c.clf_rho ? format_double(*c.clf_rho) : std::string("same"); }},
      BAL_UINT("noise_dim", trainer.noise_dim),
      {"g_hidden", [](ExperimentConfig& c, const std::string& v) { c.trainer.g_hidden = to_sizes("g_hidden", v); },
       [](const ExperimentConfig& c) { return join(c.trainer.g_hidden); }},
      {"d_hidden", [](ExperimentConfig& c, const std::string& v) { c.trainer.d_hidden = to_sizes("d_hidden", v); },
       [](const ExperimentConfig& c) { return join(c.trainer.d_hidden); }},
      {"g_activation", [](ExperimentConfig& c, const std::string& v) { c.trainer.g_activation = parse_activation(v); },
       [](const ExperimentConfig& c) { return std::string(activation_name(c.trainer.g_activation)); }},
      {"d_activation", [](ExperimentConfig& c, const std::string& v) { c.trainer.d_activation = parse_activation(v); },
       [](const ExperimentConfig& c) { return std::string(activation_name(c.trainer.d_activation)); }},
      BAL_UINT("batch_size", trainer.batch_size),
      BAL_UINT("iterations", trainer.iterations),
      BAL_NUM("lr_g", trainer.lr_g),
      BAL_NUM("lr_d", trainer.lr_d),
      BAL_NUM("adam_beta1", trainer.adam_beta1),
      BAL_NUM("adam_beta2", trainer.adam_beta2),
      BAL_NUM("lambda", trainer.lambda),
      BAL_NUM("alpha", trainer.alpha),
      BAL_NUM("beta", trainer.beta),
      BAL_UINT("cycle_len", trainer.cycle_len),
      {"soft_counts", [](ExperimentConfig& c, const std::string& v) { c.trainer.soft_counts = to_bool("soft_counts", v); },
       [](const ExperimentConfig& c) { return std::string(c.trainer.soft_counts ? "true" : "false"); }},
      BAL_NUM("ema_decay", trainer.ema_decay),
      {"ema_start", [](ExperimentConfig& c, const std::string& v) { c.trainer.ema_start = to_uint("ema_start", v); },
       [](const ExperimentConfig& c) {
         return c.trainer.ema_start ? std::to_string(*c.trainer.ema_start) : std::string("auto");
       }},
      BAL_UINT("eval_samples", trainer.eval_samples),
      {"label_proposal",
       [](ExperimentConfig& c, const std::string& v) { c.trainer.label_proposal = parse_label_proposal(v); },
       [](const ExperimentConfig& c) { return std::string(label_proposal_name(c.trainer.label_proposal)); }},
      {"fixed_n_hat", [](ExperimentConfig& c, const std::string& v) { c.fixed_n_hat = to_doubles("fixed_n_hat", v); },
       [](const ExperimentConfig& c) { return join(c.fixed_n_hat); }},
      BAL_UINT("fixed_warmup", fixed_warmup),
      {"sweep_values", [](ExperimentConfig& c, const std::string& v) { c.sweep_values = to_doubles("sweep_values", v); },
       [](const ExperimentConfig& c) { return join(c.sweep_values); }},
      {"sweep_drop_tail",
       [](ExperimentConfig& c, const std::string& v) { c.sweep_drop_tail = to_bool("sweep_drop_tail", v); },
       [](const ExperimentConfig& c) { return std::string(c.sweep_drop_tail ? "true" : "false"); }},
      BAL_UINT("trials", theory.trials),
      BAL_UINT("k_min", theory.k_min),
      BAL_UINT("k_max", theory.k_max),
      BAL_NUM("bound_tol", theory.bound_tol),
      BAL_NUM("prop2_tol", theory.prop2_tol),
      BAL_NUM("oracle_tol", theory.oracle_tol),
      BAL_NUM("tight_tol", theory.tight_tol),
  };
  return table;
}

#undef BAL_NUM
#undef BAL_UINT

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

// Validation messages lead with the offending field name.
std::string leading_key(const std::string& message) { return message.substr(0, message.find(' ')); }

void check(const ExperimentConfig& c) {
  try {
    validate(c.data);
    validate(c.trainer);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(leading_key(e.what()), e.what());
  }
  if (c.test_per_class < 1) throw ConfigError("test_per_class", "must be >= 1");
  if (c.annotator_per_class < 1) throw ConfigError("annotator_per_class", "must be >= 1");
  if (c.clf_rho && !(*c.clf_rho >= 1.0)) throw ConfigError("clf_rho", "must be >= 1");
  if (c.kind == ExperimentKind::FixedStats) {
    if (c.fixed_n_hat.size() != c.data.num_classes) {
      throw ConfigError("fixed_n_hat", "needs exactly num_classes = " + std::to_string(c.data.num_classes) + " values");
    }
    for (double v : c.fixed_n_hat)
      if (!(v > 0.0)) throw ConfigError("fixed_n_hat", "values must be > 0");
  }
  if (c.theory.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (c.theory.k_min < 2 || c.theory.k_max < c.theory.k_min) throw ConfigError("k_min", "need 2 <= k_min <= k_max");
}

}  // namespace

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Train: return "train";
    case ExperimentKind::Baseline: return "baseline";
    case ExperimentKind::FixedStats: return "fixed-stats";
    case ExperimentKind::Theory: return "theory";
    case ExperimentKind::ClassifierSweep: return "classifier-sweep";
    case ExperimentKind::BetaAblation: return "beta-ablation";
    case ExperimentKind::CycleSweep: return "cycle-sweep";
  }
  return "train";
}

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Train, ExperimentKind::Baseline, ExperimentKind::FixedStats, ExperimentKind::Theory,
                 ExperimentKind::ClassifierSweep, ExperimentKind::BetaAblation, ExperimentKind::CycleSweep}) {
    if (name == kind_name(k)) return k;
  }
  throw ConfigError("kind", "unknown experiment kind '" + name + "'");
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.data.seed = seed;
  cfg.trainer.seed = seed;
  cfg.classifier.seed = seed;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  bool have_kind = false;
  bool beta_is_alpha = false;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) throw ConfigError(key, "unknown key");
    try {
      if (key == "beta" && value == "alpha") {
        beta_is_alpha = true;
      } else if (key == "clf_rho" && value == "same") {
        cfg.clf_rho.reset();
      } else if (key == "ema_start" && value == "auto") {
        cfg.trainer.ema_start.reset();
      } else {
        if (key == "beta") beta_is_alpha = false;
        f->set(cfg, value);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(key, e.what());
    }
    have_kind = have_kind || key == "kind";
  }
  if (!have_kind) throw ConfigError("kind", "missing required key");
  if (beta_is_alpha) cfg.trainer.beta = cfg.trainer.alpha;
  check(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse_config(in);
}

std::string serialize(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : serialize(cfg)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace balance
