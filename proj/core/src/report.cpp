#include "bridge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "bridge/error.hpp"

namespace bridge {

using nlohmann::ordered_json;

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string_view rank_name(Rank r) {
  switch (r) {
    case Rank::best: return "best";
    case Rank::second: return "second";
    case Rank::none: break;
  }
  return "";
}

}  // namespace

ordered_json to_json(const MilestoneRecord& r) {
  ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["round"] = r.entry.round;
  j["milestone"] = r.entry.milestone;
  j["subset_ids"] = r.entry.subset_ids;
  j["pool_path"] = r.entry.pool_path;
  j["metric"] = r.entry.metric ? ordered_json(*r.entry.metric) : ordered_json();
  return j;
}

MilestoneRecord milestone_record_from_json(const ordered_json& j) {
  MilestoneRecord r;
  try {
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.entry.round = j.at("round").get<int>();
    r.entry.milestone = j.at("milestone").get<std::string>();
    r.entry.subset_ids = j.at("subset_ids").get<std::vector<std::string>>();
    r.entry.pool_path = j.at("pool_path").get<std::string>();
    if (!j.at("metric").is_null()) r.entry.metric = j.at("metric").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("milestone record: ") + e.what());
  }
  return r;
}

std::vector<MilestoneRecord> load_milestones(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<MilestoneRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(milestone_record_from_json(ordered_json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

Report aggregate_milestones(const std::vector<std::vector<MilestoneRecord>>& runs) {
  Report report;
  std::map<std::string, std::vector<double>> values;
  std::vector<std::string> present;
  for (const auto& run : runs) {
    for (const auto& r : run) {
      if (report.config_hash.empty()) {
        report.config_hash = r.config_hash;
      } else if (r.config_hash != report.config_hash) {
        throw Error("refusing to aggregate runs with different config hashes (" +
                    report.config_hash + " vs " + r.config_hash + ")");
      }
      if (std::find(report.seeds.begin(), report.seeds.end(), r.seed) == report.seeds.end()) {
        report.seeds.push_back(r.seed);
      }
      if (!values.contains(r.entry.milestone)) present.push_back(r.entry.milestone);
      auto& v = values[r.entry.milestone];
      if (r.entry.metric) v.push_back(*r.entry.metric);
    }
  }
  if (present.empty()) throw Error("no milestone records to report");
  std::stable_sort(present.begin(), present.end(), [](const auto& a, const auto& b) {
    return milestone_rank(a) < milestone_rank(b);
  });

  for (const auto& m : present) {
    const auto& v = values[m];
    MilestoneSummary s;
    s.milestone = m;
    s.runs = v.size();
    if (!v.empty()) {
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / static_cast<double>(v.size());
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.stdev = std::sqrt(ss / static_cast<double>(v.size() - 1));
      }
    }
    report.columns.push_back(s);
  }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    if (report.columns[i].runs > 0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.columns[a].mean > report.columns[b].mean;
  });
  if (!order.empty()) report.columns[order[0]].rank = Rank::best;
  if (order.size() > 1) report.columns[order[1]].rank = Rank::second;

  if (runs.size() == 1) {
    report.notes.push_back("warning: single seed; stdev is reported as 0");
  }
  std::map<std::uint64_t, std::size_t> runs_per_seed;
  for (const auto& run : runs) {
    if (!run.empty()) ++runs_per_seed[run.front().seed];
  }
  for (const auto& [seed, n] : runs_per_seed) {
    if (n > 1) {
      report.notes.push_back("warning: seed " + std::to_string(seed) + " appears in " +
                             std::to_string(n) + " runs; repeats are not independent");
    }
  }
  const bool has_pair = std::any_of(present.begin(), present.end(), [](const auto& m) {
    return m == "2O" || m == "2G";
  });
  if (has_pair) report.notes.push_back("note: 2G and 2O are the recommended stopping points");
  return report;
}

Report build_report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() == "milestones.jsonl") files.push_back(e.path());
  }
  if (files.empty()) throw Error("no milestone ledgers found under " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<std::vector<MilestoneRecord>> runs;
  for (const auto& f : files) {
    auto records = load_milestones(f);
    if (!records.empty()) runs.push_back(std::move(records));
  }
  if (runs.empty()) throw Error("milestone ledgers under " + dir.string() + " are empty");
  return aggregate_milestones(runs);
}

std::string format_report(const Report& report) {
  std::ostringstream o;
  o << "config_hash " << report.config_hash << "\nseeds";
  for (auto s : report.seeds) o << ' ' << s;
  o << "\n\n";
  constexpr int kWidth = 18;
  auto cell = [&](const std::string& s) {
    o << s << std::string(s.size() < kWidth ? kWidth - s.size() : 1, ' ');
  };
  cell("milestone");
  for (const auto& c : report.columns) cell(c.milestone);
  o << '\n';
  cell("mean +- stdev");
  for (const auto& c : report.columns) {
    cell(c.runs ? fixed(c.mean) + " +- " + fixed(c.stdev) : "n/a");
  }
  o << '\n';
  cell("runs");
  for (const auto& c : report.columns) cell(std::to_string(c.runs));
  o << '\n';
  cell("rank");
  for (const auto& c : report.columns) cell(std::string(rank_name(c.rank)));
  o << '\n';
  if (!report.notes.empty()) o << '\n';
  for (const auto& n : report.notes) o << n << '\n';
  return o.str();
}

std::string report_csv(const Report& report) {
  std::ostringstream o;
  o << "# config_hash=" << report.config_hash << " seeds=";
  for (std::size_t i = 0; i < report.seeds.size(); ++i) o << (i ? "," : "") << report.seeds[i];
  o << "\nmilestone,runs,mean,stdev,rank\n";
  for (const auto& c : report.columns) {
    o << c.milestone << ',' << c.runs << ',' << (c.runs ? fixed(c.mean) : "") << ','
      << (c.runs ? fixed(c.stdev) : "") << ',' << rank_name(c.rank) << '\n';
  }
  return o.str();
}

}  // namespace bridge
