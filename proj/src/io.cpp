#include "qdcascade/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qdc {

namespace {

constexpr const char* kTimetagsFormat = "qdcascade-timetags/1";
constexpr const char* kHistogramFormat = "qdcascade-histogram/1";
constexpr const char* kXyFormat = "qdcascade-xy/1";
constexpr char kBinaryMagic[8] = {'Q', 'D', 'T', 'T', 'B', 'I', 'N', '1'};

void write_header(std::ostream& out, const std::string& format, const Metadata& metadata) {
  out << "# format=" << format << "\n";
  for (const auto& [key, value] : metadata) {
    if (key == "format") continue;
    out << "# " << key << "=" << value << "\n";
  }
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_number,
                            const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + what);
}

bool parse_header_line(const std::string& line, Metadata& metadata) {
  if (line.empty() || line[0] != '#') return false;
  std::size_t start = line.find_first_not_of("# \t");
  if (start == std::string::npos) return true;
  const std::size_t eq = line.find('=', start);
  if (eq == std::string::npos) return true;
  metadata[line.substr(start, eq - start)] = line.substr(eq + 1);
  return true;
}

template <typename T>
T parse_number(const std::string& path, std::size_t line_number, const char* first,
               const char* last) {
  T value{};
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) fail_line(path, line_number, "malformed number");
  return value;
}

}  // namespace

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void write_timetags(const TimeTagStream& stream, const std::string& path,
                    const Metadata& metadata, bool binary) {
  if (!is_sorted_stream(stream))
    throw std::invalid_argument("write_timetags requires a time-sorted stream");

  if (binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    std::ostringstream header;
    write_header(header, kTimetagsFormat, metadata);
    const std::string header_text = header.str();
    const std::uint64_t header_size = header_text.size();
    const std::uint64_t count = stream.size();
    out.write(kBinaryMagic, sizeof(kBinaryMagic));
    out.write(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
    out.write(header_text.data(), static_cast<std::streamsize>(header_size));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const TimeTag& tag : stream) {
      out.write(reinterpret_cast<const char*>(&tag.detector_id), sizeof(tag.detector_id));
      out.write(reinterpret_cast<const char*>(&tag.timestamp_ps), sizeof(tag.timestamp_ps));
    }
    return;
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_header(out, kTimetagsFormat, metadata);
  for (const TimeTag& tag : stream)
    out << tag.detector_id << ',' << tag.timestamp_ps << '\n';
}

TimeTagFile read_timetags(const std::string& path, bool allow_unsorted) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path);
  char magic[sizeof(kBinaryMagic)] = {};
  probe.read(magic, sizeof(magic));
  TimeTagFile file;

  if (probe.gcount() == sizeof(magic) && std::memcmp(magic, kBinaryMagic, sizeof(magic)) == 0) {
    std::uint64_t header_size = 0;
    probe.read(reinterpret_cast<char*>(&header_size), sizeof(header_size));
    std::string header_text(header_size, '\0');
    probe.read(header_text.data(), static_cast<std::streamsize>(header_size));
    std::istringstream header(header_text);
    std::string line;
    while (std::getline(header, line)) parse_header_line(line, file.metadata);
    std::uint64_t count = 0;
    probe.read(reinterpret_cast<char*>(&count), sizeof(count));
    file.stream.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      probe.read(reinterpret_cast<char*>(&file.stream[i].detector_id),
                 sizeof(file.stream[i].detector_id));
      probe.read(reinterpret_cast<char*>(&file.stream[i].timestamp_ps),
                 sizeof(file.stream[i].timestamp_ps));
    }
    if (!probe) throw std::runtime_error(path + ": truncated binary time-tag file");
  } else {
    probe.close();
    std::ifstream in(path);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (line.empty()) continue;
      if (parse_header_line(line, file.metadata)) continue;
      const std::size_t comma = line.find(',');
      if (comma == std::string::npos) fail_line(path, line_number, "expected 'id,timestamp'");
      TimeTag tag;
      tag.detector_id = parse_number<std::int32_t>(path, line_number, line.data(),
                                                   line.data() + comma);
      tag.timestamp_ps = parse_number<std::int64_t>(path, line_number,
                                                    line.data() + comma + 1,
                                                    line.data() + line.size());
      file.stream.push_back(tag);
    }
  }

  if (!is_sorted_stream(file.stream)) {
    if (!allow_unsorted)
      throw std::runtime_error(path + ": unsorted time tags (pass the sort flag to accept)");
    sort_stream(file.stream);
  }
  return file;
}

void write_histogram(const CoincidenceHistogram& h, const std::string& path,
                     const Metadata& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  Metadata metadata = extra;
  metadata["bin_width_ps"] = std::to_string(h.bin_width_ps);
  metadata["origin_ps"] = std::to_string(h.origin_ps);
  std::ostringstream floats;
  floats.precision(12);
  floats << h.integration_time_s;
  metadata["integration_time_s"] = floats.str();
  floats.str("");
  floats << h.singles_rates_cps[0];
  metadata["singles0_cps"] = floats.str();
  floats.str("");
  floats << h.singles_rates_cps[1];
  metadata["singles1_cps"] = floats.str();
  floats.str("");
  floats << h.period_ps;
  metadata["period_ps"] = floats.str();
  write_header(out, kHistogramFormat, metadata);
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    out << h.origin_ps + static_cast<std::int64_t>(j) * h.bin_width_ps << ','
        << h.counts[j] << '\n';
  }
}

CoincidenceHistogram read_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  CoincidenceHistogram h;
  Metadata metadata;
  std::string line;
  std::size_t line_number = 0;
  bool first_row = true;
  std::int64_t expected_start = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (parse_header_line(line, metadata)) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) fail_line(path, line_number, "expected 'bin_start,count'");
    const std::int64_t bin_start = parse_number<std::int64_t>(path, line_number, line.data(),
                                                              line.data() + comma);
    const std::uint64_t count = parse_number<std::uint64_t>(
        path, line_number, line.data() + comma + 1, line.data() + line.size());
    if (first_row) {
      h.origin_ps = bin_start;
      if (metadata.count("bin_width_ps"))
        h.bin_width_ps = std::stoll(metadata["bin_width_ps"]);
      expected_start = bin_start;
      first_row = false;
    }
    if (h.bin_width_ps > 0 && bin_start != expected_start)
      fail_line(path, line_number, "non-contiguous bins");
    expected_start = bin_start + h.bin_width_ps;
    h.counts.push_back(count);
  }
  if (metadata.count("integration_time_s"))
    h.integration_time_s = std::stod(metadata["integration_time_s"]);
  if (metadata.count("singles0_cps"))
    h.singles_rates_cps[0] = std::stod(metadata["singles0_cps"]);
  if (metadata.count("singles1_cps"))
    h.singles_rates_cps[1] = std::stod(metadata["singles1_cps"]);
  if (metadata.count("period_ps")) h.period_ps = std::stod(metadata["period_ps"]);
  return h;
}

void write_xy_csv(const std::vector<std::pair<double, double>>& rows,
                  const std::string& path, const std::string& x_name,
                  const std::string& y_name, const Metadata& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  Metadata metadata = extra;
  metadata["columns"] = x_name + "," + y_name;
  write_header(out, kXyFormat, metadata);
  out.precision(12);
  for (const auto& [x, y] : rows) out << x << ',' << y << '\n';
}

std::vector<std::pair<double, double>> read_xy_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  Metadata metadata;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    if (parse_header_line(line, metadata)) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) fail_line(path, line_number, "expected 'x,y'");
    try {
      rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      fail_line(path, line_number, "malformed number");
    }
  }
  return rows;
}

}  // namespace qdc
