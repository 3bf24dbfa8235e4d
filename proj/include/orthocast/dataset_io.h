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

// Reading and writing panel datasets. Two interchangeable on-disk formats are
// supported (see docs/formats.md):
//
//   jsonl: a metadata record {"d","p_s","p_x","encoding"} followed by one
//          record per series.
//   csv:   long format (one row per series and step) with a leading
//          "# d=..,p_s=..,p_x=..,encoding=.." line, plus a sidecar
//          "<stem>.static.csv" carrying tau, group and static features.

#ifndef ORTHOCAST_DATASET_IO_H_
#define ORTHOCAST_DATASET_IO_H_

#include <iosfwd>
#include <string>

#include "orthocast/timeseries.h"

namespace orthocast {

enum class DataFormat { kJsonl, kCsv };

// Infers the format from the file extension (".csv" -> csv, else jsonl).
DataFormat FormatFromPath(const std::string& path);

// Loads and validates a dataset. Throws DataError on parse errors (with the
// line number), on an empty file ("empty dataset"), and on validation errors
// (naming the offending series).
Dataset LoadDataset(const std::string& path, DataFormat format);
Dataset LoadDataset(const std::string& path);

Dataset ReadJsonl(std::istream& in);
void WriteJsonl(const Dataset& ds, std::ostream& out);

// `static_path` receives the sidecar static-features table.
Dataset ReadCsv(std::istream& in, std::istream& static_in);
void WriteCsv(const Dataset& ds, std::ostream& out, std::ostream& static_out);

// "<dir>/<stem>.static.csv" for "<dir>/<stem>.csv".
std::string StaticSidecarPath(const std::string& csv_path);

void SaveDataset(const Dataset& ds, const std::string& path,
                 DataFormat format);

// Shortest round-trip decimal representation.
std::string FormatDouble(double v);

}  // namespace orthocast

#endif  // ORTHOCAST_DATASET_IO_H_
