// SPDX-License-Identifier: Apache-2.0
//
// Report serialization: versioned JSON (schema 1), cases.csv with a header
// row and '.' decimals, and whitespace-separated gnuplot .dat files.
// Re-running with an identical config reproduces byte-identical JSON except
// for the isolated "generated_at" key.

#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dkp/carleson.hpp"
#include "dkp/probes.hpp"

namespace dkp {

using Json = nlohmann::ordered_json;

inline Json carleson_report_json(const CarlesonReport& rep) {
  Json j;
  j["norm"] = rep.norm;
  j["norm_sq"] = rep.norm * rep.norm;
  Json am;
  am["scale"] = rep.argmax.r;
  am["scale_j"] = rep.argmax.scale_j;
  Json ctr = Json::array();
  for (int d = 0; d < rep.argmax.center.size(); ++d)
    ctr.push_back(rep.argmax.center[d]);
  am["center"] = ctr;
  j["argmax_tent"] = am;
  j["per_scale"] = rep.per_scale;
  j["diverging"] = rep.diverging;
  if (!rep.msq_by_J.empty()) {
    Json trace = Json::array();
    for (const auto& [jj, m2] : rep.msq_by_J)
      trace.push_back(Json{{"J", jj}, {"norm_sq", m2}});
    j["norm_sq_by_J"] = trace;
  }
  return j;
}

inline Json probe_report_json(const ProbeReport& rep) {
  Json j;
  j["probe"] = rep.probe;
  j["preset"] = rep.preset;
  for (const auto& [k, v] : rep.params) j["params"][k] = v;
  Json cases = Json::array();
  for (const auto& c : rep.cases) {
    Json cj;
    cj["id"] = c.id;
    cj["num"] = c.num;
    cj["den"] = c.den;
    cj["ratio"] = c.ratio;
    if (c.skipped) {
      cj["skipped"] = true;
      cj["note"] = c.note;
    }
    cases.push_back(cj);
  }
  j["cases"] = cases;
  j["max_ratio"] = rep.max_ratio;
  j["spread"] = rep.spread;
  return j;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write: " + path.string());
  out << text;
}

inline void write_report_json(const std::filesystem::path& dir, Json body,
                              const std::string& timestamp) {
  Json j;
  j["schema"] = 1;
  j["generated_at"] = timestamp;  // the only run-dependent key
  for (auto& [k, v] : body.items()) j[k] = v;
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", j.dump(2) + "\n");
}

inline void write_cases_csv(const std::filesystem::path& dir,
                            const ProbeReport& rep) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  os << "case,num,den,ratio,skipped\n";
  os.setf(std::ios::fmtflags(0), std::ios::floatfield);
  os.precision(12);
  for (const auto& c : rep.cases)
    os << c.id << "," << c.num << "," << c.den << "," << c.ratio << ","
       << (c.skipped ? 1 : 0) << "\n";
  write_text(dir / "cases.csv", os.str());
}

inline void write_probe_dat(const std::filesystem::path& dir,
                            const ProbeReport& rep) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  os << "# case num den ratio\n";
  os.precision(12);
  int idx = 0;
  for (const auto& c : rep.cases) {
    if (c.skipped) continue;
    os << idx++ << " " << c.num << " " << c.den << " " << c.ratio << "\n";
  }
  write_text(dir / (rep.probe + ".dat"), os.str());
}

inline void write_tent_csv(const std::filesystem::path& dir,
                           const CarlesonReport& rep) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  os << "scale_j,center,average\n";
  os.precision(12);
  for (const auto& t : rep.tents)
    os << t.scale_j << "," << t.center[0] << "," << t.average << "\n";
  write_text(dir / "tents.csv", os.str());
}

// ------------------------------------------------------ report merging

struct MergedRow {
  std::string probe, preset;
  double J = 0, p = 0;
  double max_ratio = 0, spread = 0;
  std::string origin;
};

// Merge report.json files; malformed inputs are skipped with a warning on
// stderr; succeeds when at least one file is valid.
inline std::vector<MergedRow> merge_reports(const std::vector<std::string>& files,
                                            std::ostream& warn) {
  std::vector<MergedRow> rows;
  for (const auto& f : files) {
    try {
      std::ifstream in(f);
      if (!in) throw std::runtime_error("cannot open");
      Json j = Json::parse(in);
      MergedRow r;
      r.probe = j.value("probe", std::string("?"));
      r.preset = j.value("preset", std::string("?"));
      if (j.contains("params")) {
        r.J = j["params"].value("J", 0.0);
        r.p = j["params"].value("p", 0.0);
      }
      r.max_ratio = j.value("max_ratio", 0.0);
      r.spread = j.value("spread", 0.0);
      r.origin = f;
      rows.push_back(r);
    } catch (const std::exception& e) {
      warn << "warning: skipping malformed report " << f << ": " << e.what()
           << "\n";
    }
  }
  std::sort(rows.begin(), rows.end(), [](const MergedRow& a, const MergedRow& b) {
    return std::tie(a.probe, a.preset, a.J, a.p) <
           std::tie(b.probe, b.preset, b.J, b.p);
  });
  return rows;
}

inline std::string merged_csv(const std::vector<MergedRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "probe,preset,J,p,max_ratio,spread,origin\n";
  for (const auto& r : rows)
    os << r.probe << "," << r.preset << "," << r.J << "," << r.p << ","
       << r.max_ratio << "," << r.spread << "," << r.origin << "\n";
  return os.str();
}

}  // namespace dkp
