#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nozzleflow/config.hpp"

namespace nozzle {

inline constexpr const char* kVersion = "0.1.0";

// Diagnostics report: `key = value` lines under `[section]` headers.
class Report {
 public:
  void section(const std::string& name);
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long long value);
  void add(const std::string& key, int value) { add(key, static_cast<long long>(value)); }
  void add(const std::string& key, bool value);
  void write(std::ostream& os) const;
  // Value of `section.key`, or empty if absent.
  std::string get(const std::string& section, const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

struct ManifestFile {
  std::string name;
  std::uintmax_t bytes = 0;
  std::uint32_t crc32 = 0;
};

struct RunManifest {
  std::string config_echo;
  std::string version = kVersion;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::vector<ManifestFile> files;
  bool passed = true;  // verify mode: every property check passed
  Report report;
};

std::uint32_t file_crc32(const std::filesystem::path& path);

// Executes the mode pipeline and writes report.txt, manifest.txt and the mode's
// tables into cfg.output_dir.  threads = 1 selects the deterministic path.
RunManifest run(const RunConfig& cfg);

}  // namespace nozzle
