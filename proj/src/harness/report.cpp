// Copyright 2026 The MRA Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mra/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mra/common/errors.hpp"

namespace mra::harness {

namespace fs = std::filesystem;

namespace {

const char* kLevels[3] = {"train", "interpolate", "extrapolate"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ContractError("cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Status {
  std::string status;
  std::uint64_t frames = 0;
  double wall_seconds = 0.0;
};

Status read_status(const fs::path& p) {
  std::istringstream in(read_file(p));
  Status s;
  std::getline(in, s.status);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "frames") s.frames = std::stoull(v);
    if (k == "wall_seconds") s.wall_seconds = std::stod(v);
  }
  return s;
}

std::size_t rank_of(const std::vector<std::string>& order, const std::string& x) {
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), x) - order.begin());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

ScoreReport build_report(const fs::path& root) {
  if (!fs::is_directory(root)) throw ContractError("report: no such directory " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "status.txt") dirs.push_back(e.path().parent_path());
  }
  std::sort(dirs.begin(), dirs.end());

  struct Key {
    std::string config, family;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<SeedScore>> scores;
  ScoreReport rep;
  for (const fs::path& dir : dirs) {
    const Status st = read_status(dir / "status.txt");
    const RunSettings s = load_settings(dir / "run.cfg");
    ManifestEntry m;
    m.family = taskforge::family_name(s.family);
    m.config = s.config.name();
    m.seed = s.seed;
    m.status = st.status;
    m.frames = st.frames;
    m.wall_seconds = st.wall_seconds;
    m.dir = fs::relative(dir, root).generic_string();
    if (st.status == "ok") {
      const double alpha = s.ewma_alpha > 0 ? s.ewma_alpha : taskforge::ewma_alpha(s.family);
      const SeedScore sc =
          score_seed(read_eval_csv(dir / "eval.csv"), read_baselines_csv(dir / "baselines.csv"), alpha, s.window);
      m.snapshot_step = sc.snapshot_step;
      scores[{m.config, m.family}].push_back(sc);
    }
    rep.runs.push_back(std::move(m));
  }

  std::vector<std::string> config_order, family_order;
  for (const auto& c : ablation_configs()) config_order.push_back(c.name());
  for (auto f : taskforge::all_families()) family_order.push_back(taskforge::family_name(f));
  std::vector<Key> keys;
  for (const auto& [k, v] : scores) keys.push_back(k);
  std::sort(keys.begin(), keys.end(), [&](const Key& a, const Key& b) {
    const auto ra = std::pair(rank_of(config_order, a.config), rank_of(family_order, a.family));
    const auto rb = std::pair(rank_of(config_order, b.config), rank_of(family_order, b.family));
    return ra != rb ? ra < rb : a < b;
  });
  for (const Key& k : keys) {
    const auto& seeds = scores.at(k);
    for (int l = 0; l < 3; ++l) {
      std::vector<double> sc, rw;
      for (const SeedScore& s : seeds) {
        sc.push_back(s.score[l]);
        rw.push_back(s.reward[l]);
      }
      const Aggregate a = aggregate(sc);
      rep.rows.push_back({k.config, k.family, kLevels[l], a.mean, a.stderr_, a.n, aggregate(rw).mean});
    }
  }
  return rep;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "config,family,level,score,stderr,seeds,reward\n";
  for (const ReportRow& r : rows) {
    out += r.config + ',' + r.family + ',' + r.level + ',' + fmt(r.score) + ',' + fmt(r.stderr_) + ',' +
           std::to_string(r.seeds) + ',' + fmt(r.reward) + '\n';
  }
  return out;
}

std::vector<ReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "config,family,level,score,stderr,seeds,reward") {
    throw ContractError("report csv: unexpected header");
  }
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw ContractError("report csv: wrong column count in '" + line + "'");
    ReportRow r;
    r.config = f[0];
    r.family = f[1];
    r.level = f[2];
    try {
      r.score = std::stod(f[3]);
      r.stderr_ = std::stod(f[4]);
      r.seeds = std::stoull(f[5]);
      r.reward = std::stod(f[6]);
    } catch (const std::exception&) {
      throw ContractError("report csv: bad number in '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string manifest_csv(const std::vector<ManifestEntry>& runs) {
  std::string out = "family,config,seed,status,frames,wall_seconds,snapshot_step,dir\n";
  for (const ManifestEntry& m : runs) {
    std::string status = m.status;
    std::replace(status.begin(), status.end(), ',', ';');
    out += m.family + ',' + m.config + ',' + std::to_string(m.seed) + ',' + status + ',' + std::to_string(m.frames) +
           ',' + fmt(m.wall_seconds) + ',' + std::to_string(m.snapshot_step) + ',' + m.dir + '\n';
  }
  return out;
}

HeatmapOrder heatmap_order(const std::vector<ReportRow>& rows) {
  std::map<std::string, std::pair<double, int>> by_config, by_family;
  for (const ReportRow& r : rows) {
    if (r.level != "train") continue;
    auto& c = by_config[r.config];
    c.first += r.score;
    ++c.second;
    auto& f = by_family[r.family];
    f.first += r.score;
    ++f.second;
  }
  auto order = [](const std::map<std::string, std::pair<double, int>>& m) {
    std::vector<std::pair<double, std::string>> v;
    for (const auto& [k, s] : m) v.emplace_back(s.first / s.second, k);
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (auto& [mean, k] : v) out.push_back(k);
    return out;
  };
  return {order(by_config), order(by_family)};
}

std::string heatmap_text(const std::vector<ReportRow>& rows) {
  const HeatmapOrder ord = heatmap_order(rows);
  std::map<std::tuple<std::string, std::string, std::string>, double> cell;
  for (const ReportRow& r : rows) cell[{r.level, r.config, r.family}] = r.score;
  std::size_t w0 = 6;
  for (const auto& c : ord.configs) w0 = std::max(w0, c.size());
  std::ostringstream os;
  os << "oracle-normalized score (0 = random, 100 = oracle); not comparable to human-normalized values\n";
  os << "columns:\n";
  for (std::size_t j = 0; j < ord.families.size(); ++j) os << "  " << j << "  " << ord.families[j] << '\n';
  for (const char* level : kLevels) {
    os << '\n' << level << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w0), "model");
    os << buf;
    for (std::size_t j = 0; j < ord.families.size(); ++j) {
      std::snprintf(buf, sizeof buf, " %7zu", j);
      os << buf;
    }
    os << '\n';
    for (const auto& c : ord.configs) {
      std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(w0), c.c_str());
      os << buf;
      for (const auto& f : ord.families) {
        const auto it = cell.find({level, c, f});
        if (it == cell.end()) {
          os << "       -";
        } else {
          std::snprintf(buf, sizeof buf, " %7.1f", it->second);
          os << buf;
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

void emit_report(const ScoreReport& report, const fs::path& out_dir) {
  if (report.rows.empty()) throw ContractError("report: no completed runs to report");
  fs::create_directories(out_dir);
  std::ofstream(out_dir / "report.csv") << report_csv(report.rows);
  std::ofstream(out_dir / "heatmap.txt") << heatmap_text(report.rows);
  std::ofstream(out_dir / "manifest.csv") << manifest_csv(report.runs);
}

}  // namespace mra::harness
