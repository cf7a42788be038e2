#include "ipdnet/grid.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ipdnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool parse_number(std::string_view text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_number(std::string_view text, std::int64_t& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool read_lines(const fs::path& path, std::vector<std::string>& lines) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return true;
}

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

/// Returns an error message, or empty on success.
std::string load_metrics(const fs::path& path, std::vector<MetricsRow>& rows) {
  std::vector<std::string> lines;
  if (!read_lines(path, lines)) return "cannot read " + path.string();
  if (lines.empty() || lines.front() != kMetricsHeader) return "bad metrics header";
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    MetricsRow row;
    if (f.size() != 13 || !parse_number(f[4], row.bin) || !parse_number(f[5], row.episodes) ||
        !parse_number(f[6], row.mutual_coop_rate) || !parse_number(f[7], row.connection_rate) ||
        !parse_number(f[8], row.coop_rate[0]) || !parse_number(f[9], row.coop_rate[1]) ||
        !parse_number(f[10], row.reward[0]) || !parse_number(f[11], row.reward[1]) ||
        !parse_number(f[12], row.epsilon)) {
      return "malformed metrics row " + std::to_string(i + 1);
    }
    if (!in_unit_interval(row.mutual_coop_rate) || !in_unit_interval(row.connection_rate) ||
        !in_unit_interval(row.coop_rate[0]) || !in_unit_interval(row.coop_rate[1])) {
      return "rate out of [0,1] on row " + std::to_string(i + 1);
    }
    rows.push_back(row);
  }
  if (rows.empty()) return "no metrics rows";
  return {};
}

struct ResponseEntry {
  int agent;
  std::string other_prev;
  std::optional<double> fraction;
  std::int64_t samples;
};

std::string load_response(const fs::path& path, std::vector<ResponseEntry>& entries) {
  std::vector<std::string> lines;
  if (!read_lines(path, lines)) return "cannot read " + path.string();
  if (lines.empty() || lines.front() != kResponseHeader) return "bad response header";
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    ResponseEntry e;
    std::int64_t agent = 0;
    if (f.size() != 5 || !parse_number(f[1], agent) || !parse_number(f[4], e.samples) ||
        (agent != 0 && agent != 1) || (f[2] != "cooperate" && f[2] != "defect")) {
      return "malformed response row " + std::to_string(i + 1);
    }
    e.agent = static_cast<int>(agent);
    e.other_prev = std::string(f[2]);
    if (!f[3].empty()) {
      double v = 0.0;
      if (!parse_number(f[3], v) || !in_unit_interval(v)) {
        return "bad connect_fraction on row " + std::to_string(i + 1);
      }
      e.fraction = v;
    }
    entries.push_back(e);
  }
  return {};
}

std::string condition_columns(const std::string& condition) {
  const auto parts = split(condition, ':');
  const std::string rewiring = parts.size() > 2 ? std::string(parts[2]) : "learned";
  return condition + "," + std::string(parts[0]) + "," +
         (parts.size() > 1 ? std::string(parts[1]) : std::string()) + "," + rewiring;
}

json entry_to_json(const ManifestEntry& e) {
  return json{{"run_id", e.run_id},
              {"condition", e.condition},
              {"schedule", e.schedule},
              {"bias", e.bias},
              {"rewiring_learning", e.rewiring_learning},
              {"seed", e.seed},
              {"status", e.status},
              {"error", e.error},
              {"wall_time_s", e.wall_time_s},
              {"code_version", e.code_version},
              {"outputs",
               {{"metrics", e.metrics_path},
                {"response", e.response_path},
                {"checkpoint", e.checkpoint_path},
                {"config", e.config_path}}}};
}

}  // namespace

std::optional<RunConfig> parse_condition(std::string_view text, const RunConfig& base) {
  const auto parts = split(text, ':');
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
  const auto schedule = parse_schedule(parts[0]);
  const auto bias = parse_bias(parts[1]);
  if (!schedule || !bias) return std::nullopt;
  RunConfig config = base;
  config.schedule = *schedule;
  config.bias = *bias;
  config.rewiring_learning = true;
  if (parts.size() == 3) {
    const auto frozen = parse_frozen_rewiring(parts[2]);
    if (!frozen || *schedule == RewiringSchedule::kNone) return std::nullopt;
    config.rewiring_learning = false;
    config.frozen_rewiring = *frozen;
  }
  return config;
}

std::vector<std::string> default_conditions() {
  std::vector<std::string> out;
  for (const char* schedule : {"none", "half", "full"}) {
    for (const char* bias : {"none", "allc", "tft", "ostracism"}) {
      out.push_back(std::string(schedule) + ":" + bias);
    }
  }
  return out;
}

std::vector<RunConfig> expand_grid(const std::vector<RunConfig>& conditions, int seeds) {
  std::vector<RunConfig> out;
  for (const RunConfig& c : conditions) {
    for (int s = 1; s <= seeds; ++s) {
      RunConfig config = c;
      config.seed = static_cast<std::uint64_t>(s);
      out.push_back(config);
    }
  }
  return out;
}

std::vector<ManifestEntry> run_grid(const std::vector<RunConfig>& configs, const fs::path& out_dir,
                                    int parallelism, const RunOptions& options) {
  fs::create_directories(configs.empty() ? out_dir : out_dir / "runs");
  std::vector<ManifestEntry> entries(configs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      const RunConfig& config = configs[i];
      ManifestEntry& e = entries[i];
      e.run_id = config.run_id();
      e.condition = config.condition();
      e.schedule = std::string(to_string(config.schedule));
      e.bias = std::string(to_string(config.bias));
      e.rewiring_learning = config.rewiring_learning;
      e.seed = config.seed;
      e.code_version = std::string(code_version());
      const fs::path rel = fs::path("runs") / e.run_id;
      e.metrics_path = (rel / "metrics.csv").generic_string();
      e.response_path = (rel / "response.csv").generic_string();
      e.checkpoint_path = (rel / "checkpoint.bin").generic_string();
      e.config_path = (rel / "config.json").generic_string();

      const auto start = std::chrono::steady_clock::now();
      try {
        RunOptions run_options;
        if (parallelism <= 1) run_options = options;
        run_to_directory(config, out_dir / rel, run_options);
        e.status = "ok";
      } catch (const std::exception& ex) {
        e.status = "failed";
        e.error = ex.what();
      }
      e.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (options.progress) {
        std::lock_guard lock(log_mutex);
        *options.progress << "[" << i + 1 << "/" << configs.size() << "] " << e.run_id << " "
                          << e.status << " (" << e.wall_time_s << " s)" << std::endl;
      }
    }
  };

  const int threads = std::clamp<int>(parallelism, 1, std::max<int>(1, int(configs.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  write_manifest(out_dir / "manifest.json", entries);
  return entries;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  json list = json::array();
  for (const ManifestEntry& e : entries) list.push_back(entry_to_json(e));
  write_file_atomic(path, list.dump(2) + "\n");
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest not found: " + path.string());
  const json list = json::parse(in);
  if (!list.is_array()) throw std::runtime_error("manifest must be a JSON list");
  std::vector<ManifestEntry> entries;
  for (const json& j : list) {
    ManifestEntry e;
    e.run_id = j.at("run_id").get<std::string>();
    e.condition = j.at("condition").get<std::string>();
    e.schedule = j.value("schedule", "");
    e.bias = j.value("bias", "");
    e.rewiring_learning = j.value("rewiring_learning", true);
    e.seed = j.value("seed", std::uint64_t{0});
    e.status = j.at("status").get<std::string>();
    e.error = j.value("error", "");
    e.wall_time_s = j.value("wall_time_s", 0.0);
    e.code_version = j.value("code_version", "");
    const json& out = j.at("outputs");
    e.metrics_path = out.at("metrics").get<std::string>();
    e.response_path = out.at("response").get<std::string>();
    e.checkpoint_path = out.value("checkpoint", "");
    e.config_path = out.value("config", "");
    entries.push_back(e);
  }
  return entries;
}

MeanSe mean_and_se(const std::vector<double>& values) {
  MeanSe r;
  r.n = values.size();
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(r.n);
  if (r.n < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  r.se = sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

Analysis analyze(const fs::path& results_dir) {
  const std::vector<ManifestEntry> manifest = read_manifest(results_dir / "manifest.json");

  struct ConditionData {
    std::vector<std::vector<MetricsRow>> runs;
    std::vector<std::vector<ResponseEntry>> responses;
  };
  std::vector<std::string> order;
  std::map<std::string, ConditionData> data;

  Analysis analysis;
  for (const ManifestEntry& e : manifest) {
    if (e.status != "ok") {
      analysis.excluded.push_back(e.run_id + ": run status " + e.status);
      continue;
    }
    std::vector<MetricsRow> rows;
    std::vector<ResponseEntry> response;
    std::string err = load_metrics(results_dir / e.metrics_path, rows);
    if (err.empty()) err = load_response(results_dir / e.response_path, response);
    if (!err.empty()) {
      analysis.excluded.push_back(e.run_id + ": " + err);
      continue;
    }
    if (!data.count(e.condition)) order.push_back(e.condition);
    data[e.condition].runs.push_back(std::move(rows));
    data[e.condition].responses.push_back(std::move(response));
  }

  for (const std::string& condition : order) {
    const ConditionData& d = data[condition];
    std::map<std::int64_t, std::array<std::vector<double>, 4>> by_bin;
    std::map<std::int64_t, std::int64_t> episodes;
    for (const auto& run : d.runs) {
      for (const MetricsRow& row : run) {
        auto& cols = by_bin[row.bin];
        cols[0].push_back(row.mutual_coop_rate);
        cols[1].push_back(row.connection_rate);
        cols[2].push_back(row.coop_rate[0]);
        cols[3].push_back(row.coop_rate[1]);
        episodes[row.bin] = row.episodes;
      }
    }
    for (const auto& [bin, cols] : by_bin) {
      analysis.curves.push_back({condition, bin, episodes[bin], mean_and_se(cols[0]),
                                 mean_and_se(cols[1]), mean_and_se(cols[2]),
                                 mean_and_se(cols[3])});
    }
    for (int agent = 0; agent < 2; ++agent) {
      for (const char* prev : {"cooperate", "defect"}) {
        std::vector<double> fractions;
        std::int64_t samples = 0;
        for (const auto& run : d.responses) {
          for (const ResponseEntry& r : run) {
            if (r.agent != agent || r.other_prev != prev) continue;
            samples += r.samples;
            if (r.fraction) fractions.push_back(*r.fraction);
          }
        }
        analysis.responses.push_back({condition, agent, prev, mean_and_se(fractions), samples});
      }
    }
  }

  std::ostringstream curves;
  curves << "condition,schedule,bias,rewiring,bin,episodes,n_seeds,mutual_coop_mean,"
            "mutual_coop_se,connection_rate_mean,connection_rate_se,coop_rate_a0_mean,"
            "coop_rate_a0_se,coop_rate_a1_mean,coop_rate_a1_se\n";
  for (const AggregateRow& r : analysis.curves) {
    curves << condition_columns(r.condition) << ',' << r.bin << ',' << r.episodes << ','
           << r.mutual_coop.n << ',' << format_double(r.mutual_coop.mean) << ','
           << format_double(r.mutual_coop.se) << ',' << format_double(r.connection.mean) << ','
           << format_double(r.connection.se) << ',' << format_double(r.coop_a0.mean) << ','
           << format_double(r.coop_a0.se) << ',' << format_double(r.coop_a1.mean) << ','
           << format_double(r.coop_a1.se) << '\n';
  }
  write_file_atomic(results_dir / "aggregate.csv", curves.str());

  std::ostringstream responses;
  responses << "condition,schedule,bias,rewiring,agent,other_prev_action,connect_fraction_mean,"
               "connect_fraction_se,n_seeds,n_samples\n";
  for (const ResponseAggregateRow& r : analysis.responses) {
    responses << condition_columns(r.condition) << ',' << r.agent << ',' << r.other_prev_action
              << ',';
    if (r.connect_fraction.n > 0) {
      responses << format_double(r.connect_fraction.mean) << ','
                << format_double(r.connect_fraction.se);
    } else {
      responses << ',';
    }
    responses << ',' << r.connect_fraction.n << ',' << r.total_samples << '\n';
  }
  write_file_atomic(results_dir / "response_aggregate.csv", responses.str());

  json report{{"excluded", analysis.excluded}, {"conditions", order}};
  write_file_atomic(results_dir / "analysis.json", report.dump(2) + "\n");
  return analysis;
}

}  // namespace ipdnet
