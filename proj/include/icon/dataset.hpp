#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icon/families.hpp"
#include "icon/kv.hpp"

namespace icon {

// One family's data in memory: M operators, N condition/QoI pairs each.
struct FamilyData {
  int family = 0;
  int M = 0, N = 0;
  std::uint64_t seed = 0;
  std::vector<OperatorSpec> operators;   // size M
  std::vector<CondQoIRecord> records;    // size M*N, operator-major

  const CondQoIRecord& record(int operator_index, int pair_index) const;
  void validate() const;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  int M = 0, N = 0;
  struct Entry {
    int family = 0;
    std::string file;       // file name relative to the manifest directory
    int record_count = 0;
    std::string crc32_hex;  // checksum of the whole file
  };
  std::vector<Entry> entries;
};

// CRC-32 (IEEE 802.3, reflected polynomial), the checksum used by the file
// format and manifest.
std::uint32_t crc32(const unsigned char* data, std::size_t len,
                    std::uint32_t crc = 0);

// Generate one file per family under out_dir plus manifest.json; returns
// the manifest. Deterministic in (families, M, N, seed): the same call
// writes byte-identical files. Partially written output is removed if a
// solver or I/O error interrupts generation. `override_` relaxes the
// per-family parameter ranges (used for out-of-distribution sweeps).
DatasetManifest generate_dataset(const std::vector<int>& families, int M, int N,
                                 std::uint64_t seed, const std::string& out_dir,
                                 const ParamOverride* override_ = nullptr);

// Generate one family in memory without touching disk; same sampling paths
// as generate_dataset.
FamilyData generate_family(int family, int M, int N, std::uint64_t seed,
                           const ParamOverride* override_ = nullptr);

// Load one family file; validates version, checksum, and schema.
FamilyData load_family(const std::string& path);

DatasetManifest load_manifest(const std::string& dir);

// Load every family listed in a manifest directory, verifying checksums.
std::vector<FamilyData> load_dataset(const std::string& dir);

}  // namespace icon
