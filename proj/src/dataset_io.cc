/*
 * Copyright 2026 The Orthocast Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "orthocast/dataset_io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "orthocast/errors.h"

namespace orthocast {
namespace {

using Json = nlohmann::ordered_json;

std::string LinePrefix(long line) { return "line " + std::to_string(line) + ": "; }

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double ParseDouble(const std::string& text, long line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError(LinePrefix(line) + "cannot parse number '" + text + "'");
  }
  return v;
}

int ParseInt(const std::string& text, long line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(LinePrefix(line) + "cannot parse integer '" + text + "'");
  }
  return v;
}

bool IsBlank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

void ParseMetadata(const Json& meta, Dataset* ds, long line) {
  for (const char* key : {"d", "p_s", "p_x"}) {
    if (!meta.contains(key) || !meta[key].is_number_integer()) {
      throw DataError(LinePrefix(line) + "metadata record missing integer '" +
                      key + "'");
    }
  }
  ds->d = meta["d"].get<int>();
  ds->dims.p_s = meta["p_s"].get<int>();
  ds->dims.p_x = meta["p_x"].get<int>();
  if (meta.contains("encoding")) {
    try {
      ds->encoding = ParseEncoding(meta["encoding"].get<std::string>());
    } catch (const ConfigError& e) {
      throw DataError(LinePrefix(line) + e.what());
    }
  }
  if (ds->dims.p_s < 0 || ds->dims.p_x < 0) {
    throw DataError(LinePrefix(line) + "negative feature dimension");
  }
}

TimeSeries ParseSeriesRecord(const Json& rec, const Dataset& ds, long line) {
  TimeSeries s;
  try {
    s.id = rec.at("id").get<std::string>();
    if (rec.contains("group")) s.group = rec["group"].get<std::string>();
    s.static_features = rec.at("static").get<std::vector<double>>();
    const auto rows = rec.at("temporal").get<std::vector<std::vector<double>>>();
    s.temporal_features.resize(static_cast<Eigen::Index>(rows.size()),
                               ds.dims.p_x);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<int>(rows[r].size()) != ds.dims.p_x) {
        throw DataError(LinePrefix(line) + "series '" + s.id +
                        "': temporal row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " columns, expected " +
                        std::to_string(ds.dims.p_x));
      }
      for (int c = 0; c < ds.dims.p_x; ++c) {
        s.temporal_features(static_cast<Eigen::Index>(r), c) = rows[r][c];
      }
    }
    s.treatments = rec.at("treatments").get<std::vector<double>>();
    s.outcomes = rec.at("outcomes").get<std::vector<double>>();
    s.tau = rec.at("tau").get<int>();
    if (rec.contains("weekday") && !rec["weekday"].is_null()) {
      s.weekday = rec["weekday"].get<std::vector<int>>();
    }
  } catch (const Json::exception& e) {
    throw DataError(LinePrefix(line) + "malformed series record: " + e.what());
  }
  return s;
}

Json SeriesToJson(const TimeSeries& s, const Dataset& ds) {
  Json rec;
  rec["id"] = s.id;
  if (!s.group.empty()) rec["group"] = s.group;
  rec["static"] = s.static_features;
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < s.temporal_features.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < s.temporal_features.cols(); ++c) {
      row.push_back(s.temporal_features(r, c));
    }
    rows.push_back(std::move(row));
  }
  rec["temporal"] = std::move(rows);
  if (IsCategorical(ds.encoding)) {
    Json t = Json::array();
    for (double v : s.treatments) t.push_back(std::lround(v));
    rec["treatments"] = std::move(t);
  } else {
    rec["treatments"] = s.treatments;
  }
  rec["outcomes"] = s.outcomes;
  rec["tau"] = s.tau;
  if (s.has_weekday()) rec["weekday"] = s.weekday;
  return rec;
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

DataFormat FormatFromPath(const std::string& path) {
  const auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") {
    return DataFormat::kCsv;
  }
  return DataFormat::kJsonl;
}

std::string StaticSidecarPath(const std::string& csv_path) {
  const auto dot = csv_path.rfind('.');
  const auto slash = csv_path.find_last_of('/');
  const bool has_ext =
      dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? csv_path.substr(0, dot) : csv_path) + ".static.csv";
}

Dataset ReadJsonl(std::istream& in) {
  Dataset ds;
  bool have_meta = false;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (IsBlank(line)) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(LinePrefix(lineno) + "JSON parse error: " + e.what());
    }
    if (!rec.is_object()) {
      throw DataError(LinePrefix(lineno) + "expected a JSON object");
    }
    if (!have_meta) {
      ParseMetadata(rec, &ds, lineno);
      have_meta = true;
      continue;
    }
    ds.series.push_back(ParseSeriesRecord(rec, ds, lineno));
  }
  if (!have_meta) throw DataError("empty dataset");
  ValidateDataset(ds);
  return ds;
}

void WriteJsonl(const Dataset& ds, std::ostream& out) {
  Json meta;
  meta["d"] = ds.d;
  meta["p_s"] = ds.dims.p_s;
  meta["p_x"] = ds.dims.p_x;
  meta["encoding"] = std::string(EncodingName(ds.encoding));
  out << meta.dump() << '\n';
  for (const auto& s : ds.series) out << SeriesToJson(s, ds).dump() << '\n';
}

Dataset ReadCsv(std::istream& in, std::istream& static_in) {
  Dataset ds;
  std::string line;
  long lineno = 0;

  // Metadata comment line.
  while (std::getline(in, line)) {
    ++lineno;
    if (!IsBlank(line)) break;
  }
  if (lineno == 0 || IsBlank(line)) throw DataError("empty dataset");
  if (line.rfind("#", 0) != 0) {
    throw DataError(LinePrefix(lineno) + "missing '# d=..' metadata line");
  }
  {
    Json meta = Json::object();
    std::string body = line.substr(1);
    for (const auto& kv : SplitCsv(body)) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      std::string key = kv.substr(0, eq);
      std::string value = kv.substr(eq + 1);
      key.erase(0, key.find_first_not_of(' '));
      if (key == "encoding") {
        meta[key] = value;
      } else {
        meta[key] = ParseInt(value, lineno);
      }
    }
    ParseMetadata(meta, &ds, lineno);
  }
  if (!std::getline(in, line)) throw DataError("empty dataset");
  ++lineno;
  const auto header = SplitCsv(line);
  const size_t expected_cols = 5 + static_cast<size_t>(ds.dims.p_x);
  if (header.size() != expected_cols || header[0] != "series_id") {
    throw DataError(LinePrefix(lineno) + "unexpected CSV header");
  }

  // Static sidecar: defines series order, tau, group and S.
  std::map<std::string, size_t> index_of;
  {
    std::string sline;
    long sno = 0;
    if (!std::getline(static_in, sline)) {
      throw DataError("static sidecar: empty file");
    }
    ++sno;
    while (std::getline(static_in, sline)) {
      ++sno;
      if (IsBlank(sline)) continue;
      const auto f = SplitCsv(sline);
      if (f.size() != 3 + static_cast<size_t>(ds.dims.p_s)) {
        throw DataError("static sidecar " + LinePrefix(sno) +
                        "wrong number of columns");
      }
      TimeSeries s;
      s.id = f[0];
      s.tau = ParseInt(f[1], sno);
      s.group = f[2];
      for (int k = 0; k < ds.dims.p_s; ++k) {
        s.static_features.push_back(ParseDouble(f[3 + k], sno));
      }
      if (!index_of.emplace(s.id, ds.series.size()).second) {
        throw DataError("duplicate series id '" + s.id + "'");
      }
      ds.series.push_back(std::move(s));
    }
  }

  std::vector<std::vector<std::vector<double>>> xrows(ds.series.size());
  while (std::getline(in, line)) {
    ++lineno;
    if (IsBlank(line)) continue;
    const auto f = SplitCsv(line);
    if (f.size() != expected_cols) {
      throw DataError(LinePrefix(lineno) + "expected " +
                      std::to_string(expected_cols) + " columns, got " +
                      std::to_string(f.size()));
    }
    auto it = index_of.find(f[0]);
    if (it == index_of.end()) {
      throw DataError(LinePrefix(lineno) + "series '" + f[0] +
                      "' missing from static sidecar");
    }
    TimeSeries& s = ds.series[it->second];
    const int t = ParseInt(f[1], lineno);
    if (t != static_cast<int>(s.treatments.size()) + 1) {
      throw DataError(LinePrefix(lineno) + "non-consecutive time index for '" +
                      s.id + "'");
    }
    if (!f[2].empty()) s.weekday.push_back(ParseInt(f[2], lineno));
    s.treatments.push_back(ParseDouble(f[3], lineno));
    s.outcomes.push_back(ParseDouble(f[4], lineno));
    std::vector<double> x;
    for (int k = 0; k < ds.dims.p_x; ++k) {
      x.push_back(ParseDouble(f[5 + k], lineno));
    }
    xrows[it->second].push_back(std::move(x));
  }
  for (size_t i = 0; i < ds.series.size(); ++i) {
    auto& s = ds.series[i];
    s.temporal_features.resize(static_cast<Eigen::Index>(xrows[i].size()),
                               ds.dims.p_x);
    for (size_t r = 0; r < xrows[i].size(); ++r) {
      for (int c = 0; c < ds.dims.p_x; ++c) {
        s.temporal_features(static_cast<Eigen::Index>(r), c) = xrows[i][r][c];
      }
    }
  }
  if (ds.series.empty()) throw DataError("empty dataset");
  ValidateDataset(ds);
  return ds;
}

void WriteCsv(const Dataset& ds, std::ostream& out, std::ostream& static_out) {
  out << "# d=" << ds.d << ",p_s=" << ds.dims.p_s << ",p_x=" << ds.dims.p_x
      << ",encoding=" << EncodingName(ds.encoding) << '\n';
  out << "series_id,t,weekday,treatment,outcome";
  for (int k = 1; k <= ds.dims.p_x; ++k) out << ",x_" << k;
  out << '\n';
  static_out << "series_id,tau,group";
  for (int k = 1; k <= ds.dims.p_s; ++k) static_out << ",s_" << k;
  static_out << '\n';
  for (const auto& s : ds.series) {
    static_out << s.id << ',' << s.tau << ',' << s.group;
    for (double v : s.static_features) static_out << ',' << FormatDouble(v);
    static_out << '\n';
    for (int t = 1; t <= s.length(); ++t) {
      out << s.id << ',' << t << ',';
      if (s.has_weekday()) out << s.weekday_at(t);
      out << ',' << FormatDouble(s.treatment(t)) << ',' << FormatDouble(s.y(t));
      for (int k = 0; k < ds.dims.p_x; ++k) {
        out << ',' << FormatDouble(s.temporal_features(t - 1, k));
      }
      out << '\n';
    }
  }
}

Dataset LoadDataset(const std::string& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  if (format == DataFormat::kJsonl) return ReadJsonl(in);
  const std::string sidecar = StaticSidecarPath(path);
  std::ifstream static_in(sidecar);
  if (!static_in) throw DataError("cannot open static sidecar '" + sidecar + "'");
  return ReadCsv(in, static_in);
}

Dataset LoadDataset(const std::string& path) {
  return LoadDataset(path, FormatFromPath(path));
}

void SaveDataset(const Dataset& ds, const std::string& path,
                 DataFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  if (format == DataFormat::kJsonl) {
    WriteJsonl(ds, out);
    return;
  }
  std::ofstream static_out(StaticSidecarPath(path));
  if (!static_out) throw DataError("cannot write static sidecar for '" + path + "'");
  WriteCsv(ds, out, static_out);
}

}  // namespace orthocast
