#pragma once

#include <map>
#include <string>

#include "qdcascade/analysis.hpp"
#include "qdcascade/detection_chain.hpp"

namespace qdc {

using Metadata = std::map<std::string, std::string>;

// Time-tag files: "# key=value" header lines (always including
// "# format=qdcascade-timetags/1"), then "detector_id,timestamp_ps" rows
// sorted by timestamp. The binary variant carries the same header as a
// length-prefixed block followed by packed (int32, int64) records.
void write_timetags(const TimeTagStream& stream, const std::string& path,
                    const Metadata& metadata = {}, bool binary = false);

struct TimeTagFile {
  TimeTagStream stream;
  Metadata metadata;
};

// Throws std::runtime_error naming the offending line on malformed rows;
// rejects unsorted input unless allow_unsorted (which sorts after read).
TimeTagFile read_timetags(const std::string& path, bool allow_unsorted = false);

// Histogram files: metadata header plus "bin_start_ps,count" rows.
void write_histogram(const CoincidenceHistogram& h, const std::string& path,
                     const Metadata& extra = {});
CoincidenceHistogram read_histogram(const std::string& path);

// Two-column CSV with a metadata header, used for plot data and curves.
void write_xy_csv(const std::vector<std::pair<double, double>>& rows,
                  const std::string& path, const std::string& x_name,
                  const std::string& y_name, const Metadata& extra = {});
std::vector<std::pair<double, double>> read_xy_csv(const std::string& path);

// FNV-1a hash of a string; used for config provenance stamps.
std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace qdc
