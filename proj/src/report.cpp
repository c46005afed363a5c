#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gaze2seg/harness.hpp"

namespace g2s {

using nlohmann::json;

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd r;
  r.n = xs.size();
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return r;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string records_to_csv(const std::vector<EvalRecord>& records) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    out += csv_field(r.case_id) + "," + csv_field(r.organ) + "," + r.strategy + "," + r.source + "," + r.backend + ",";
    out += r.failed ? std::string("NA") : fmt("%.6f", r.dice);
    out += "," + fmt("%.3f", r.prompt_ms) + "," + fmt("%.3f", r.segment_ms) + "," + fmt("%.3f", r.interp_ms) + "," +
           fmt("%.3f", r.total_ms) + "\n";
  }
  return out;
}

std::string records_to_json(const std::vector<EvalRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) {
    json j{{"case", r.case_id},
           {"organ", r.organ},
           {"strategy", r.strategy},
           {"source", r.source},
           {"backend", r.backend},
           {"dice", r.failed ? json(nullptr) : json(r.dice)},
           {"prompt_ms", r.prompt_ms},
           {"segment_ms", r.segment_ms},
           {"interp_ms", r.interp_ms},
           {"total_ms", r.total_ms},
           {"prompted_slices", r.prompted_slices},
           {"failed", r.failed}};
    if (r.failed) j["error"] = r.error;
    if (!r.masklet_path.empty()) j["masklet"] = r.masklet_path;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::string summary_markdown(const std::vector<EvalRecord>& records) {
  struct Cell {
    std::vector<double> dice, secs;
    std::size_t failed = 0;
  };
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  std::map<std::tuple<std::string, std::string, std::string>, Cell> cells;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.backend, r.source, r.strategy);
    if (!cells.contains(key)) order.push_back(key);
    auto& c = cells[key];
    if (r.failed) {
      ++c.failed;
      continue;
    }
    c.dice.push_back(r.dice);
    c.secs.push_back(r.total_ms / 1000.0);
  }

  std::ostringstream md;
  md << "| Backend | Prompts | Strategy | Dice score | Time (sec) | Cases | Failed |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const auto& key : order) {
    const auto& c = cells[key];
    const auto d = mean_sd(c.dice);
    const auto t = mean_sd(c.secs);
    md << "| " << std::get<0>(key) << " | " << std::get<1>(key) << " | " << std::get<2>(key) << " | ";
    if (d.n) {
      md << fmt("%.3f", d.mean) << " ± " << fmt("%.3f", d.sd) << " | " << fmt("%.3f", t.mean) << " ± "
         << fmt("%.3f", t.sd);
    } else {
      md << "n/a | n/a";
    }
    md << " | " << d.n << " | " << c.failed << " |\n";
  }
  md << "\nTimes are wall-clock pipeline seconds on this machine (prompt construction, backend calls and "
        "interpolation). They exclude human interaction and are not comparable to GPU model timings.\n";
  return md.str();
}

void write_reports(const std::vector<EvalRecord>& records, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    write_file(dir / name, std::as_bytes(std::span(text.data(), text.size())));
  };
  put("records.csv", records_to_csv(records));
  put("records.json", records_to_json(records));
  put("summary.md", summary_markdown(records));
}

}  // namespace g2s
