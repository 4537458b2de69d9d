#include "icon/dataset.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace icon {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint32_t kFormatVersion = 1;

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    table[i] = c;
  }
  return table;
}

// --- binary payload helpers (little-endian, 32-bit floats) ---

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, double v) {
  float f = float(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

void put_f32_array(std::string& out, const Eigen::VectorXd& v) {
  put_u32(out, std::uint32_t(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put_f32(out, v[i]);
}

struct Cursor {
  const unsigned char* p;
  std::size_t left;

  std::uint32_t u32() {
    if (left < 4) throw FormatError(FormatError::Kind::Truncated, "file payload truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    return v;
  }

  double f32() {
    std::uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return double(f);
  }

  Eigen::VectorXd f32_array() {
    const std::uint32_t n = u32();
    if (left < 4ull * n)
      throw FormatError(FormatError::Kind::Truncated, "file payload truncated");
    Eigen::VectorXd v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = f32();
    return v;
  }
};

void put_function(std::string& out, const KeyValueFunction& f) {
  put_u32(out, std::uint32_t(f.size()));
  for (int i = 0; i < f.size(); ++i) put_f32(out, f.t[i]);
  for (int i = 0; i < f.size(); ++i) put_f32(out, f.x[i]);
  for (int i = 0; i < f.size(); ++i) put_f32(out, f.v[i]);
}

KeyValueFunction get_function(Cursor& c, int term_id) {
  const std::uint32_t n = c.u32();
  if (c.left < 12ull * n)
    throw FormatError(FormatError::Kind::Truncated, "file payload truncated");
  KeyValueFunction f;
  f.term_id = term_id;
  f.t.resize(n);
  f.x.resize(n);
  f.v.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) f.t[i] = c.f32();
  for (std::uint32_t i = 0; i < n; ++i) f.x[i] = c.f32();
  for (std::uint32_t i = 0; i < n; ++i) f.v[i] = c.f32();
  return f;
}

std::string encode_family(const FamilyData& d) {
  const FamilySchema& schema = family_schema(d.family);
  json header = {
      {"format", "icds"}, {"version", kFormatVersion}, {"family", d.family},
      {"name", schema.name}, {"M", d.M}, {"N", d.N},
      {"seed", d.seed}, {"dtype", "f32"},
  };
  std::string out = header.dump();
  out.push_back('\n');
  const std::size_t payload_start = out.size();

  for (const OperatorSpec& op : d.operators) {
    for (const std::string& name : schema.scalar_param_names)
      put_f32(out, op.scalars.at(name));
    if (!schema.param_function_name.empty()) put_f32_array(out, op.param_function);
  }
  for (const CondQoIRecord& rec : d.records) {
    for (const KeyValueFunction& f : rec.condition) put_function(out, f);
    put_function(out, rec.qoi);
  }
  const std::uint32_t crc =
      crc32(reinterpret_cast<const unsigned char*>(out.data()) + payload_start,
            out.size() - payload_start);
  put_u32(out, crc);
  return out;
}

FamilyData decode_family(const std::string& bytes) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos)
    throw FormatError(FormatError::Kind::Truncated, "missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, nl));
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::SchemaViolation,
                      std::string("bad header: ") + e.what());
  }
  if (header.value("format", "") != "icds")
    throw FormatError(FormatError::Kind::SchemaViolation, "not an icds file");
  if (header.value("version", 0u) != kFormatVersion)
    throw FormatError(FormatError::Kind::VersionMismatch,
                      "unsupported format version");
  if (header.value("dtype", "") != "f32")
    throw FormatError(FormatError::Kind::SchemaViolation, "unsupported dtype");

  FamilyData d;
  d.family = header.value("family", 0);
  d.M = header.value("M", 0);
  d.N = header.value("N", 0);
  d.seed = header.value("seed", std::uint64_t(0));
  const FamilySchema& schema = family_schema(d.family);
  if (d.M < 1 || d.N < 1)
    throw FormatError(FormatError::Kind::SchemaViolation, "bad M/N in header");

  if (bytes.size() < nl + 1 + 4)
    throw FormatError(FormatError::Kind::Truncated, "missing checksum footer");
  const std::size_t payload_len = bytes.size() - nl - 1 - 4;
  const unsigned char* payload =
      reinterpret_cast<const unsigned char*>(bytes.data()) + nl + 1;
  Cursor footer{payload + payload_len, 4};
  if (crc32(payload, payload_len) != footer.u32())
    throw FormatError(FormatError::Kind::ChecksumFailure, "payload checksum mismatch");

  Cursor c{payload, payload_len};
  d.operators.resize(d.M);
  for (OperatorSpec& op : d.operators) {
    op.family = d.family;
    for (const std::string& name : schema.scalar_param_names)
      op.scalars[name] = c.f32();
    if (!schema.param_function_name.empty()) {
      op.param_function = c.f32_array();
      if (int(op.param_function.size()) != schema.param_function_size)
        throw FormatError(FormatError::Kind::SchemaViolation,
                          "parameter function size mismatch");
    }
  }
  d.records.reserve(std::size_t(d.M) * d.N);
  for (int i = 0; i < d.M; ++i)
    for (int j = 0; j < d.N; ++j) {
      CondQoIRecord rec;
      rec.operator_index = i;
      rec.pair_index = j;
      for (std::size_t k = 0; k < schema.condition_terms.size(); ++k)
        rec.condition.push_back(get_function(c, int(k)));
      rec.qoi = get_function(c, 0);
      d.records.push_back(std::move(rec));
    }
  if (c.left != 0)
    throw FormatError(FormatError::Kind::SchemaViolation, "trailing payload bytes");
  d.validate();
  return d;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

std::string crc_hex(const std::string& bytes) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x",
                crc32(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  return buf;
}

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc) {
  static const auto table = make_crc_table();
  crc ^= 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

const CondQoIRecord& FamilyData::record(int operator_index, int pair_index) const {
  if (operator_index < 0 || operator_index >= M || pair_index < 0 || pair_index >= N)
    throw InvalidInputError("FamilyData::record: index out of range");
  return records[std::size_t(operator_index) * N + pair_index];
}

void FamilyData::validate() const {
  const FamilySchema& schema = family_schema(family);
  if (int(operators.size()) != M || records.size() != std::size_t(M) * N)
    throw FormatError(FormatError::Kind::SchemaViolation, "operator/record count mismatch");
  for (const CondQoIRecord& rec : records) {
    if (rec.condition.size() != schema.condition_terms.size())
      throw FormatError(FormatError::Kind::SchemaViolation, "condition term count mismatch");
    for (std::size_t k = 0; k < rec.condition.size(); ++k) {
      const KeyValueFunction& f = rec.condition[k];
      if (f.size() != schema.condition_terms[k].count || f.term_id != int(k))
        throw FormatError(FormatError::Kind::SchemaViolation, "condition term size mismatch");
      f.validate();
    }
    if (rec.qoi.size() != schema.qoi.count)
      throw FormatError(FormatError::Kind::SchemaViolation, "qoi size mismatch");
    rec.qoi.validate();
  }
}

FamilyData generate_family(int family, int M, int N, std::uint64_t seed,
                           const ParamOverride* override_) {
  if (M < 1 || N < 1) throw InvalidInputError("generate_family: M, N must be >= 1");
  const SeedTree branch = SeedTree(seed).child("family", std::uint64_t(family));
  FamilyData d;
  d.family = family;
  d.M = M;
  d.N = N;
  d.seed = seed;
  d.operators.reserve(M);
  d.records.reserve(std::size_t(M) * N);
  for (int i = 0; i < M; ++i) {
    const SeedTree op_branch = branch.child("operator", std::uint64_t(i));
    Rng op_rng = op_branch.rng();
    d.operators.push_back(sample_operator(family, op_rng, override_));
    for (int j = 0; j < N; ++j) {
      Rng pair_rng = op_branch.child("pair", std::uint64_t(j)).rng();
      try {
        d.records.push_back(generate_pair(d.operators.back(), i, j, pair_rng));
      } catch (const NumericalError& e) {
        throw NumericalError("family " + std::to_string(family) + " operator " +
                             std::to_string(i) + " pair " + std::to_string(j) + ": " +
                             e.what());
      }
    }
  }
  return d;
}

DatasetManifest generate_dataset(const std::vector<int>& families, int M, int N,
                                 std::uint64_t seed, const std::string& out_dir,
                                 const ParamOverride* override_) {
  if (families.empty()) throw InvalidInputError("generate_dataset: no families");
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.seed = seed;
  manifest.M = M;
  manifest.N = N;
  std::vector<fs::path> written;
  try {
    for (int family : families) {
      const FamilyData d = generate_family(family, M, N, seed, override_);
      const std::string file = "family_" + std::to_string(family) + ".icds";
      const fs::path path = fs::path(out_dir) / file;
      const std::string bytes = encode_family(d);
      {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInputError("cannot write " + path.string());
        out.write(bytes.data(), std::streamsize(bytes.size()));
        if (!out) throw InvalidInputError("write failed: " + path.string());
      }
      written.push_back(path);
      manifest.entries.push_back({family, file, M * N, crc_hex(bytes)});
    }
    json j = {{"format", "icds-manifest"}, {"version", kFormatVersion},
              {"seed", seed}, {"M", M}, {"N", N}, {"files", json::array()}};
    for (const auto& e : manifest.entries)
      j["files"].push_back({{"family", e.family}, {"file", e.file},
                            {"records", e.record_count}, {"crc32", e.crc32_hex}});
    const fs::path mpath = fs::path(out_dir) / "manifest.json";
    std::ofstream out(mpath, std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + mpath.string());
    out << j.dump(2) << "\n";
    if (!out) throw InvalidInputError("write failed: " + mpath.string());
  } catch (...) {
    std::error_code ec;
    for (const fs::path& p : written) fs::remove(p, ec);
    throw;
  }
  return manifest;
}

FamilyData load_family(const std::string& path) { return decode_family(read_file(path)); }

DatasetManifest load_manifest(const std::string& dir) {
  const std::string text = read_file((fs::path(dir) / "manifest.json").string());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::SchemaViolation,
                      std::string("bad manifest: ") + e.what());
  }
  if (j.value("format", "") != "icds-manifest")
    throw FormatError(FormatError::Kind::SchemaViolation, "not a dataset manifest");
  if (j.value("version", 0u) != kFormatVersion)
    throw FormatError(FormatError::Kind::VersionMismatch, "unsupported manifest version");
  DatasetManifest m;
  m.seed = j.value("seed", std::uint64_t(0));
  m.M = j.value("M", 0);
  m.N = j.value("N", 0);
  for (const auto& f : j.at("files"))
    m.entries.push_back({f.value("family", 0), f.value("file", ""),
                         f.value("records", 0), f.value("crc32", "")});
  return m;
}

std::vector<FamilyData> load_dataset(const std::string& dir) {
  const DatasetManifest m = load_manifest(dir);
  std::vector<FamilyData> out;
  for (const auto& e : m.entries) {
    const std::string bytes = read_file((fs::path(dir) / e.file).string());
    if (crc_hex(bytes) != e.crc32_hex)
      throw FormatError(FormatError::Kind::ChecksumFailure,
                        "manifest checksum mismatch for " + e.file);
    out.push_back(decode_family(bytes));
  }
  return out;
}

}  // namespace icon
