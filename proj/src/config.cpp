#include "ogdbench/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "ogdbench/errors.hpp"

namespace ogdbench {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw InvalidSpec("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw InvalidSpec("config key '" + key + "': expected number, got '" + v + "'");
  }
}

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& v, const std::string& key, Parse parse) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(parse(item, key));
  return out;
}

// key registry: one entry per config key, with parse and canonical-print
struct KeyHandler {
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

const std::map<std::string, KeyHandler>& key_registry() {
  static const std::map<std::string, KeyHandler> registry = [] {
    std::map<std::string, KeyHandler> r;
    r["name"] = {[](ExperimentSpec& s, const std::string& v) { s.name = v; },
                 [](const ExperimentSpec& s) { return s.name; }};
    r["suite"] = {[](ExperimentSpec& s, const std::string& v) {
                    s.suite.suite = suite_kind_from_string(v);
                  },
                  [](const ExperimentSpec& s) { return std::string(to_string(s.suite.suite)); }};
    r["num_tasks"] = {
        [](ExperimentSpec& s, const std::string& v) { s.suite.num_tasks = parse_int(v, "num_tasks"); },
        [](const ExperimentSpec& s) { return std::to_string(s.suite.num_tasks); }};
    r["angles"] = {[](ExperimentSpec& s, const std::string& v) {
                     s.suite.angles = parse_list<double>(v, "angles", parse_double);
                   },
                   [](const ExperimentSpec& s) {
                     std::string out;
                     for (std::size_t i = 0; i < s.suite.angles.size(); ++i) {
                       out += (i ? "," : "") + fmt_double(s.suite.angles[i]);
                     }
                     return out;
                   }};
    r["partitions"] = {[](ExperimentSpec& s, const std::string& v) {
                         s.suite.partitions.clear();
                         if (trim(v).empty()) return;
                         for (const auto& group : split(v, '|')) {
                           s.suite.partitions.push_back(
                               parse_list<int>(group, "partitions", parse_int));
                         }
                       },
                       [](const ExperimentSpec& s) {
                         std::string out;
                         for (std::size_t i = 0; i < s.suite.partitions.size(); ++i) {
                           if (i) out += "|";
                           for (std::size_t j = 0; j < s.suite.partitions[i].size(); ++j) {
                             out += (j ? "," : "") + std::to_string(s.suite.partitions[i][j]);
                           }
                         }
                         return out;
                       }};
    r["seed"] = {[](ExperimentSpec& s, const std::string& v) {
                   s.suite.seed = static_cast<std::uint64_t>(std::stoull(v));
                 },
                 [](const ExperimentSpec& s) { return std::to_string(s.suite.seed); }};
    r["methods"] = {[](ExperimentSpec& s, const std::string& v) {
                      s.methods.clear();
                      for (const auto& m : split(v, ',')) {
                        s.methods.push_back(method_from_string(m));
                      }
                    },
                    [](const ExperimentSpec& s) {
                      std::string out;
                      for (std::size_t i = 0; i < s.methods.size(); ++i) {
                        out += std::string(i ? "," : "") + to_string(s.methods[i]);
                      }
                      return out;
                    }};
    r["method"] = {[](ExperimentSpec& s, const std::string& v) {
                     s.methods = {method_from_string(v)};
                   },
                   [](const ExperimentSpec& s) {
                     return s.methods.empty() ? std::string()
                                              : std::string(to_string(s.methods[0]));
                   }};
    r["seeds"] = {[](ExperimentSpec& s, const std::string& v) {
                    s.seeds.clear();
                    for (const auto& item : split(v, ',')) {
                      s.seeds.push_back(static_cast<std::uint64_t>(std::stoull(item)));
                    }
                  },
                  [](const ExperimentSpec& s) {
                    std::string out;
                    for (std::size_t i = 0; i < s.seeds.size(); ++i) {
                      out += (i ? "," : "") + std::to_string(s.seeds[i]);
                    }
                    return out;
                  }};
    r["epochs_per_task"] = {[](ExperimentSpec& s, const std::string& v) {
                              s.train.epochs_per_task = parse_int(v, "epochs_per_task");
                            },
                            [](const ExperimentSpec& s) {
                              return std::to_string(s.train.epochs_per_task);
                            }};
    r["batch_size"] = {
        [](ExperimentSpec& s, const std::string& v) { s.train.batch_size = parse_int(v, "batch_size"); },
        [](const ExperimentSpec& s) { return std::to_string(s.train.batch_size); }};
    r["lr"] = {[](ExperimentSpec& s, const std::string& v) { s.train.lr = parse_double(v, "lr"); },
               [](const ExperimentSpec& s) { return fmt_double(s.train.lr); }};
    r["hidden_dims"] = {[](ExperimentSpec& s, const std::string& v) {
                          s.train.hidden_dims = parse_list<int>(v, "hidden_dims", parse_int);
                        },
                        [](const ExperimentSpec& s) {
                          std::string out;
                          for (std::size_t i = 0; i < s.train.hidden_dims.size(); ++i) {
                            out += (i ? "," : "") + std::to_string(s.train.hidden_dims[i]);
                          }
                          return out;
                        }};
    r["ogd.variant"] = {[](ExperimentSpec& s, const std::string& v) {
                          s.train.ogd.variant = ogd_variant_from_string(v);
                        },
                        [](const ExperimentSpec& s) {
                          return std::string(to_string(s.train.ogd.variant));
                        }};
    r["ogd.budget_per_task"] = {[](ExperimentSpec& s, const std::string& v) {
                                  s.train.ogd.budget_per_task =
                                      parse_int(v, "ogd.budget_per_task");
                                },
                                [](const ExperimentSpec& s) {
                                  return std::to_string(s.train.ogd.budget_per_task);
                                }};
    r["ogd.drop_tol"] = {[](ExperimentSpec& s, const std::string& v) {
                           s.train.ogd.drop_tol = parse_double(v, "ogd.drop_tol");
                         },
                         [](const ExperimentSpec& s) { return fmt_double(s.train.ogd.drop_tol); }};
    r["ewc_lambda"] = {
        [](ExperimentSpec& s, const std::string& v) { s.train.ewc_lambda = parse_double(v, "ewc_lambda"); },
        [](const ExperimentSpec& s) { return fmt_double(s.train.ewc_lambda); }};
    r["ewc_fisher_samples"] = {[](ExperimentSpec& s, const std::string& v) {
                                 s.train.ewc_fisher_samples = parse_int(v, "ewc_fisher_samples");
                               },
                               [](const ExperimentSpec& s) {
                                 return std::to_string(s.train.ewc_fisher_samples);
                               }};
    r["agem.capacity_per_task"] = {[](ExperimentSpec& s, const std::string& v) {
                                     s.train.agem_capacity_per_task =
                                         parse_int(v, "agem.capacity_per_task");
                                   },
                                   [](const ExperimentSpec& s) {
                                     return std::to_string(s.train.agem_capacity_per_task);
                                   }};
    r["agem.ref_batch_size"] = {[](ExperimentSpec& s, const std::string& v) {
                                  s.train.agem_ref_batch_size =
                                      parse_int(v, "agem.ref_batch_size");
                                },
                                [](const ExperimentSpec& s) {
                                  return std::to_string(s.train.agem_ref_batch_size);
                                }};
    r["eval_every"] = {
        [](ExperimentSpec& s, const std::string& v) { s.train.eval_every = parse_int(v, "eval_every"); },
        [](const ExperimentSpec& s) { return std::to_string(s.train.eval_every); }};
    return r;
  }();
  return registry;
}

// canonical serialization order ("method" is an alias, not serialized)
const std::vector<std::string>& canonical_keys() {
  static const std::vector<std::string> keys = {
      "name",       "suite",         "num_tasks",       "angles",
      "partitions", "seed",          "methods",         "seeds",
      "epochs_per_task", "batch_size", "lr",            "hidden_dims",
      "ogd.variant", "ogd.budget_per_task", "ogd.drop_tol", "ewc_lambda",
      "ewc_fisher_samples", "agem.capacity_per_task", "agem.ref_batch_size",
      "eval_every"};
  return keys;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) throw InvalidSpec("experiment name must not be empty");
  suite.validate();
  train.validate();
  if (methods.empty()) throw InvalidSpec("no methods configured");
  if (seeds.empty()) throw InvalidSpec("no seeds configured");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      if (methods[i] == methods[j]) throw InvalidSpec("duplicate method in config");
    }
  }
}

ExperimentSpec parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidSpec(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    apply_override(spec, key, value);
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, "cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

void apply_override(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  const auto& registry = key_registry();
  const auto it = registry.find(key);
  if (it == registry.end()) throw InvalidSpec("unknown config key: " + key);
  it->second.set(spec, value);
}

std::string serialize_config(const ExperimentSpec& spec) {
  const auto& registry = key_registry();
  std::string out;
  for (const auto& key : canonical_keys()) {
    if (key == "method") continue;
    const std::string value = registry.at(key).get(spec);
    out += key + " = " + value + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentSpec& spec) {
  const std::string text = serialize_config(spec);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

ExperimentSpec base_spec(const std::string& name, SuiteKind kind, int num_tasks) {
  ExperimentSpec s;
  s.name = name;
  s.suite.suite = kind;
  s.suite.num_tasks = num_tasks;
  s.suite.seed = 42;
  s.methods = {Method::kMtl, Method::kOgd, Method::kAgem, Method::kEwc, Method::kSgd};
  return s;
}

std::vector<std::uint64_t> seed_range(int n) {
  std::vector<std::uint64_t> seeds;
  for (int i = 1; i <= n; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  return seeds;
}

std::vector<double> step10_angles(int n) {
  std::vector<double> angles;
  for (int i = 0; i < n; ++i) angles.push_back(10.0 * i);
  return angles;
}

std::vector<std::vector<int>> pair_partitions() {
  return {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"permuted3",  "permuted5", "rotated2-sweep",      "rotated5",
          "split2",     "split5",    "appendix-a1-rotated", "appendix-a1-permuted",
          "appendix-a2"};
}

std::vector<ExperimentSpec> resolve_preset(const std::string& name) {
  // Seed counts follow the benchmark protocol: 10 runs for 2- and 3-task
  // experiments, 5 runs for 5-task ones.
  if (name == "permuted3") {
    ExperimentSpec s = base_spec(name, SuiteKind::kPermuted, 3);
    s.seeds = seed_range(10);
    s.train.eval_every = 1000;  // per-task accuracy curves
    return {s};
  }
  if (name == "permuted5") {
    ExperimentSpec s = base_spec(name, SuiteKind::kPermuted, 5);
    s.seeds = seed_range(5);
    return {s};
  }
  if (name == "rotated2-sweep") {
    // Accuracy on task 1 after training 0deg then Xdeg, as a function of X.
    // The angle grid is a documented choice (10deg steps to 180deg).
    std::vector<ExperimentSpec> cells;
    for (int angle = 10; angle <= 180; angle += 10) {
      ExperimentSpec s = base_spec(name + "/" + std::to_string(angle) + "deg",
                                   SuiteKind::kRotated, 2);
      s.suite.angles = {0.0, static_cast<double>(angle)};
      s.seeds = seed_range(10);
      cells.push_back(std::move(s));
    }
    return cells;
  }
  if (name == "rotated5") {
    ExperimentSpec s = base_spec(name, SuiteKind::kRotated, 5);
    s.suite.angles = step10_angles(5);
    s.seeds = seed_range(5);
    return {s};
  }
  if (name == "split2") {
    ExperimentSpec s = base_spec(name, SuiteKind::kSplit, 2);
    s.suite.partitions = {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}};
    s.seeds = seed_range(10);
    return {s};
  }
  if (name == "split5") {
    ExperimentSpec s = base_spec(name, SuiteKind::kSplit, 5);
    s.suite.partitions = pair_partitions();
    s.seeds = seed_range(5);
    return {s};
  }
  if (name == "appendix-a1-rotated" || name == "appendix-a1-permuted") {
    // variant x stored-gradient-budget grid on a two-task problem
    const bool rotated = name == "appendix-a1-rotated";
    std::vector<ExperimentSpec> cells;
    for (OgdVariant variant : {OgdVariant::kAll, OgdVariant::kAve, OgdVariant::kGtl}) {
      for (int budget : {20, 200, 2000}) {
        ExperimentSpec s = base_spec(
            name + "/" + to_string(variant) + "-" + std::to_string(budget),
            rotated ? SuiteKind::kRotated : SuiteKind::kPermuted, 2);
        if (rotated) s.suite.angles = {0.0, 45.0};  // rotation angle: documented choice
        s.methods = {Method::kOgd};
        s.train.ogd.variant = variant;
        s.train.ogd.budget_per_task = budget;
        s.seeds = seed_range(10);
        cells.push_back(std::move(s));
      }
    }
    return cells;
  }
  if (name == "appendix-a2") {
    std::vector<ExperimentSpec> cells;
    for (int epochs : {20, 40, 80, 120}) {
      ExperimentSpec s =
          base_spec(name + "/" + std::to_string(epochs) + "ep", SuiteKind::kPermuted, 2);
      s.train.epochs_per_task = epochs;
      s.seeds = seed_range(10);
      cells.push_back(std::move(s));
    }
    return cells;
  }
  throw InvalidSpec("unknown preset: " + name);
}

}  // namespace ogdbench
