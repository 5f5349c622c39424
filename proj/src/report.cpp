#include "ogdbench/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ogdbench/errors.hpp"

namespace ogdbench {

namespace {

namespace fs = std::filesystem;

std::string fmt_acc(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_pct(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path.string(), "cannot open for writing");
  out << content;
}

std::string render_trajectory_csv(const ExperimentResult& result) {
  std::string out = "method,suite,seed,step,task_id,accuracy\n";
  const std::string suite = result.spec.suite.str();
  for (const auto& mr : result.methods) {
    for (const auto& run : mr.runs) {
      for (const auto& pt : run.trajectory) {
        out += std::string(to_string(mr.method)) + "," + suite + "," +
               std::to_string(run.seed) + "," + std::to_string(pt.step) + "," +
               std::to_string(pt.task_id + 1) + "," + fmt_acc(pt.accuracy) + "\n";
      }
    }
  }
  return out;
}

std::string summary_cell(double mean, double stdev, int n_seeds) {
  std::string cell = fmt_pct(mean);
  if (n_seeds >= 2) {
    cell += " ± " + fmt_pct(stdev);
  } else {
    cell += " ± n/a";
  }
  return cell;
}

}  // namespace

ExperimentResult run_experiment(const MnistData& data, const ExperimentSpec& spec,
                                const std::string& out_root, int jobs, const LogFn& log) {
  spec.validate();
  ExperimentResult result;
  result.spec = spec;
  result.hash = config_hash(spec);

  const std::vector<TaskDataset> suite = build_suite(data, spec.suite);
  for (Method method : spec.methods) {
    if (log) log("training " + std::string(to_string(method)) + " on " + spec.name);
    TrainConfig cfg = spec.train;
    cfg.method = method;
    MethodRuns mr;
    mr.method = method;
    mr.runs = run_seeds(suite, cfg, spec.seeds, jobs);
    mr.summary = aggregate(mr.runs);
    result.methods.push_back(std::move(mr));
  }

  if (!out_root.empty()) {
    std::string dir_name = spec.name + "-" + result.hash.substr(0, 8);
    for (auto& ch : dir_name) {
      if (ch == '/' || ch == '\\') ch = '_';
    }
    const fs::path dir = fs::path(out_root) / dir_name;
    fs::create_directories(dir);
    write_file(dir / "config.cfg", serialize_config(spec));
    write_file(dir / "raw.csv", render_raw_csv(rows_from_result(result)));
    write_file(dir / "summary.md", render_summary_md(result));
    if (spec.train.eval_every > 0) {
      write_file(dir / "trajectory.csv", render_trajectory_csv(result));
    }
    result.out_dir = dir.string();
    if (log) log("wrote " + result.out_dir);
  }
  return result;
}

std::vector<RawRow> rows_from_result(const ExperimentResult& result) {
  std::vector<RawRow> rows;
  const std::string suite = result.spec.suite.str();
  for (const auto& mr : result.methods) {
    for (const auto& run : mr.runs) {
      for (std::size_t t = 0; t < run.final_accuracy.size(); ++t) {
        rows.push_back({to_string(mr.method), suite, run.seed, static_cast<int>(t),
                        run.final_accuracy[t], result.hash});
      }
    }
  }
  return rows;
}

std::string render_raw_csv(const std::vector<RawRow>& rows) {
  std::string out = "method,suite,seed,task_id,final_accuracy,config_hash\n";
  for (const auto& r : rows) {
    out += r.method + "," + r.suite + "," + std::to_string(r.seed) + "," +
           std::to_string(r.task_id) + "," + fmt_acc(r.final_accuracy) + "," + r.config_hash +
           "\n";
  }
  return out;
}

std::vector<RawRow> parse_raw_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError(origin, "empty csv");
  if (line != "method,suite,seed,task_id,final_accuracy,config_hash") {
    throw FormatError(origin, "unexpected csv header: " + line);
  }
  std::vector<RawRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    // suite strings contain no commas; plain 6-field split
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() != 6) {
      throw FormatError(origin, "line " + std::to_string(lineno) + ": expected 6 fields");
    }
    RawRow r;
    r.method = fields[0];
    r.suite = fields[1];
    try {
      r.seed = std::stoull(fields[2]);
      r.task_id = std::stoi(fields[3]);
      r.final_accuracy = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw FormatError(origin, "line " + std::to_string(lineno) + ": bad numeric field");
    }
    r.config_hash = fields[5];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<RawRow> load_raw_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_raw_csv(buffer.str(), path);
}

std::string render_summary_md(const ExperimentResult& result) {
  std::ostringstream md;
  md << "# " << result.spec.name << "\n\n";
  md << "suite: `" << result.spec.suite.str() << "`  \n";
  md << "seeds: " << result.spec.seeds.size() << "  \n";
  md << "config: `" << result.hash << "`\n\n";

  const int tasks = result.spec.suite.num_tasks;
  md << "| Method |";
  for (int t = 1; t <= tasks; ++t) md << " Task " << t << " |";
  md << "\n|---|";
  for (int t = 0; t < tasks; ++t) md << "---|";
  md << "\n";
  md << std::string();
  for (const auto& mr : result.methods) {
    md << "| " << to_string(mr.method) << " |";
    for (int t = 0; t < tasks; ++t) {
      md << " " << summary_cell(mr.summary.mean_pct[t], mr.summary.std_pct[t], mr.summary.num_seeds)
         << " |";
    }
    md << "\n";
  }
  md << "\nAccuracy ± sample std over seeds, in percent.\n";
  return md.str();
}

std::string render_merged_report(const std::vector<RawRow>& rows) {
  // group: (suite, config_hash) -> method -> seed -> per-task accuracies
  std::map<std::pair<std::string, std::string>,
           std::map<std::string, std::map<std::uint64_t, std::map<int, double>>>>
      groups;
  for (const auto& r : rows) {
    groups[{r.suite, r.config_hash}][r.method][r.seed][r.task_id] = r.final_accuracy;
  }
  std::ostringstream md;
  md << "# Merged report\n";
  for (const auto& [key, methods] : groups) {
    int tasks = 0;
    for (const auto& [method, seeds] : methods) {
      for (const auto& [seed, accs] : seeds) {
        for (const auto& [task, acc] : accs) tasks = std::max(tasks, task + 1);
      }
    }
    md << "\n## suite `" << key.first << "` (config `" << key.second << "`)\n\n";
    md << "| Method | Seeds |";
    for (int t = 1; t <= tasks; ++t) md << " Task " << t << " |";
    md << "\n|---|---|";
    for (int t = 0; t < tasks; ++t) md << "---|";
    md << "\n";
    for (const auto& [method, seeds] : methods) {
      md << "| " << method << " | " << seeds.size() << " |";
      for (int t = 0; t < tasks; ++t) {
        std::vector<double> accs;
        for (const auto& [seed, by_task] : seeds) {
          const auto it = by_task.find(t);
          if (it != by_task.end()) accs.push_back(it->second);
        }
        if (accs.empty()) {
          md << " - |";
          continue;
        }
        double mean = 0;
        for (double a : accs) mean += a;
        mean /= accs.size();
        if (accs.size() >= 2) {
          double ss = 0;
          for (double a : accs) ss += (a - mean) * (a - mean);
          const double stdev = std::sqrt(ss / (accs.size() - 1));
          md << " " << summary_cell(100 * mean, 100 * stdev, static_cast<int>(accs.size()))
             << " |";
        } else {
          md << " " << summary_cell(100 * mean, 0, 1) << " |";
        }
      }
      md << "\n";
    }
  }
  md << "\nAccuracy ± sample std over seeds, in percent.\n";
  return md.str();
}

}  // namespace ogdbench
