#include "bronchograph/volume_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace bronchograph {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class ElementType { U8, U16, F64 };

std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::U8: return 1;
    case ElementType::U16: return 2;
    case ElementType::F64: return 8;
  }
  return 1;
}

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::string& head, std::span<const unsigned char> body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

// Byte order is assembled explicitly so decoding never depends on the host.
std::vector<unsigned char> encode_payload(const Volume& v) {
  std::vector<unsigned char> out;
  if (v.kind() == VolumeKind::Binary) {
    out.reserve(v.size());
    for (auto x : v.data()) out.push_back(static_cast<unsigned char>(x));
  } else {
    out.reserve(v.size() * 2);
    for (auto x : v.data()) {
      out.push_back(static_cast<unsigned char>(x & 0xFF));
      out.push_back(static_cast<unsigned char>(x >> 8));
    }
  }
  return out;
}

std::vector<std::uint16_t> decode_ints(std::span<const unsigned char> bytes, ElementType t, bool big_endian) {
  std::vector<std::uint16_t> out;
  if (t == ElementType::U8) {
    out.assign(bytes.begin(), bytes.end());
    return out;
  }
  out.resize(bytes.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned lo = bytes[2 * i + (big_endian ? 1 : 0)];
    const unsigned hi = bytes[2 * i + (big_endian ? 0 : 1)];
    out[i] = static_cast<std::uint16_t>(lo | (hi << 8));
  }
  return out;
}

VolumeKind infer_kind(ElementType t, const std::vector<std::uint16_t>& data) {
  if (t == ElementType::U8 && std::all_of(data.begin(), data.end(), [](auto x) { return x <= 1; })) {
    return VolumeKind::Binary;
  }
  return VolumeKind::Labels;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

struct NrrdHeader {
  ElementType type = ElementType::U8;
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  bool big_endian = false;
  std::string data_file;
  std::size_t header_bytes = 0;  // offset of attached payload
};

ElementType parse_type(const std::string& raw) {
  const auto t = lower(raw);
  if (t == "uchar" || t == "unsigned char" || t == "uint8" || t == "uint8_t") return ElementType::U8;
  if (t == "ushort" || t == "unsigned short" || t == "unsigned short int" || t == "uint16" || t == "uint16_t") {
    return ElementType::U16;
  }
  if (t == "double" || t == "float64") return ElementType::F64;
  throw Error(ErrorCode::UnsupportedEncoding, "unsupported NRRD type '" + raw + "'");
}

Vec3 parse_space_directions(const std::string& value) {
  // "(a,b,c) (d,e,f) (g,h,i)"
  std::vector<std::array<double, 3>> rows;
  std::size_t pos = 0;
  while ((pos = value.find('(', pos)) != std::string::npos) {
    auto close = value.find(')', pos);
    if (close == std::string::npos) throw Error(ErrorCode::MalformedHeader, "unterminated space direction");
    std::string inner = value.substr(pos + 1, close - pos - 1);
    std::replace(inner.begin(), inner.end(), ',', ' ');
    std::istringstream is(inner);
    std::array<double, 3> r{};
    if (!(is >> r[0] >> r[1] >> r[2])) throw Error(ErrorCode::MalformedHeader, "bad space direction vector");
    rows.push_back(r);
    pos = close + 1;
  }
  if (rows.size() != 3) throw Error(ErrorCode::MalformedHeader, "expected 3 space direction vectors");
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      if (a != b && rows[a][b] != 0.0) {
        throw Error(ErrorCode::UnsupportedEncoding, "non-diagonal space directions are not supported");
      }
    }
    spacing[a] = std::abs(rows[a][a]);
  }
  return spacing;
}

NrrdHeader parse_nrrd_header(std::span<const unsigned char> bytes) {
  NrrdHeader h;
  std::size_t pos = 0;
  auto next_line = [&](std::string& line) {
    if (pos >= bytes.size()) return false;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    line.assign(reinterpret_cast<const char*>(bytes.data()) + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = std::min(end + 1, bytes.size());
    return true;
  };

  std::string line;
  if (!next_line(line) || line.rfind("NRRD000", 0) != 0) {
    throw Error(ErrorCode::MalformedHeader, "missing NRRD magic");
  }
  std::map<std::string, std::string> fields;
  bool terminated = false;
  while (next_line(line)) {
    if (line.empty()) {
      terminated = true;
      break;
    }
    if (line[0] == '#') continue;
    if (line.find(":=") != std::string::npos) continue;  // key/value pairs are ignored
    auto colon = line.find(": ");
    if (colon == std::string::npos) throw Error(ErrorCode::MalformedHeader, "bad header line '" + line + "'");
    fields[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 2));
  }
  h.header_bytes = pos;

  auto require = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw Error(ErrorCode::MalformedHeader, std::string("missing field '") + key + "'");
    return it->second;
  };

  h.type = parse_type(require("type"));
  if (trim(require("dimension")) != "3") throw Error(ErrorCode::UnsupportedEncoding, "only dimension 3 is supported");
  {
    std::istringstream is(require("sizes"));
    if (!(is >> h.dims.nx >> h.dims.ny >> h.dims.nz) || h.dims.nx <= 0 || h.dims.ny <= 0 || h.dims.nz <= 0) {
      throw Error(ErrorCode::MalformedHeader, "bad sizes");
    }
  }
  if (lower(require("encoding")) != "raw") throw Error(ErrorCode::UnsupportedEncoding, "only raw encoding is supported");
  if (auto it = fields.find("endian"); it != fields.end()) {
    const auto e = lower(it->second);
    if (e == "big") h.big_endian = true;
    else if (e != "little") throw Error(ErrorCode::MalformedHeader, "bad endian field");
  } else if (h.type != ElementType::U8) {
    throw Error(ErrorCode::MalformedHeader, "multi-byte type without endian field");
  }
  if (auto it = fields.find("space directions"); it != fields.end()) {
    h.spacing = parse_space_directions(it->second);
  } else if (auto sp = fields.find("spacings"); sp != fields.end()) {
    std::istringstream is(sp->second);
    if (!(is >> h.spacing[0] >> h.spacing[1] >> h.spacing[2])) throw Error(ErrorCode::MalformedHeader, "bad spacings");
  }
  try {
    check_spacing(h.spacing);
  } catch (const Error&) {
    throw Error(ErrorCode::MalformedHeader, "spacing must be finite and > 0");
  }
  if (auto it = fields.find("data file"); it != fields.end()) {
    h.data_file = it->second;
  } else if (auto it2 = fields.find("datafile"); it2 != fields.end()) {
    h.data_file = it2->second;
  } else if (!terminated) {
    throw Error(ErrorCode::MalformedHeader, "attached NRRD without blank line before payload");
  }
  return h;
}

std::vector<unsigned char> nrrd_payload(const fs::path& path, const NrrdHeader& h,
                                        const std::vector<unsigned char>& bytes) {
  const std::size_t expected = h.dims.count() * element_size(h.type);
  std::vector<unsigned char> payload;
  if (!h.data_file.empty()) {
    payload = read_file(path.parent_path() / h.data_file);
  } else {
    payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.header_bytes), bytes.end());
  }
  if (payload.size() != expected) {
    throw Error(ErrorCode::DimsMismatch, "payload has " + std::to_string(payload.size()) + " bytes, header implies " +
                                             std::to_string(expected));
  }
  return payload;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string nrrd_header(const Dims& d, const Vec3& s, const char* type, bool multibyte, const std::string& data_file) {
  std::ostringstream os;
  os << "NRRD0004\n";
  os << "type: " << type << "\n";
  os << "dimension: 3\n";
  os << "space: left-posterior-superior\n";
  os << "sizes: " << d.nx << " " << d.ny << " " << d.nz << "\n";
  os << "space directions: (" << format_double(s[0]) << ",0,0) (0," << format_double(s[1]) << ",0) (0,0,"
     << format_double(s[2]) << ")\n";
  os << "kinds: domain domain domain\n";
  if (multibyte) os << "endian: little\n";
  os << "encoding: raw\n";
  if (!data_file.empty()) os << "data file: " << data_file << "\n";
  os << "\n";
  return os.str();
}

fs::path raw_json_payload_path(const fs::path& sidecar) {
  auto p = sidecar;
  p.replace_extension(".raw");
  return p;
}

}  // namespace

VolumeFormat format_from_path(const fs::path& path) {
  const auto ext = lower(path.extension().string());
  if (ext == ".nrrd" || ext == ".nhdr") return VolumeFormat::Nrrd;
  if (ext == ".json" || ext == ".raw") return VolumeFormat::RawJson;
  throw Error(ErrorCode::UnsupportedEncoding, "cannot infer format from extension '" + ext + "'");
}

Volume decode_raw_json(std::string_view sidecar_json, std::span<const unsigned char> payload) {
  json j;
  try {
    j = json::parse(sidecar_json);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, std::string("sidecar is not JSON: ") + e.what());
  }
  Dims d;
  Vec3 s{};
  VolumeKind kind = VolumeKind::Binary;
  try {
    const auto& dims = j.at("dims");
    const auto& spacing = j.at("spacing");
    if (dims.size() != 3 || spacing.size() != 3) throw Error(ErrorCode::MalformedHeader, "dims/spacing need 3 entries");
    d = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    s = {spacing[0].get<double>(), spacing[1].get<double>(), spacing[2].get<double>()};
    const auto k = j.value("kind", std::string("binary"));
    if (k == "binary") kind = VolumeKind::Binary;
    else if (k == "labels") kind = VolumeKind::Labels;
    else throw Error(ErrorCode::MalformedHeader, "kind must be 'binary' or 'labels'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, e.what());
  }
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0) throw Error(ErrorCode::MalformedHeader, "dims must be positive");
  for (double v : s) {
    if (!(std::isfinite(v) && v > 0)) throw Error(ErrorCode::MalformedHeader, "spacing must be finite and > 0");
  }
  const auto type = kind == VolumeKind::Binary ? ElementType::U8 : ElementType::U16;
  if (payload.size() != d.count() * element_size(type)) {
    throw Error(ErrorCode::DimsMismatch, "payload has " + std::to_string(payload.size()) + " bytes, sidecar implies " +
                                             std::to_string(d.count() * element_size(type)));
  }
  Volume v(d, s, kind, decode_ints(payload, type, false));
  if (kind == VolumeKind::Binary) {
    try {
      v.validate();
    } catch (const Error&) {
      throw Error(ErrorCode::MalformedHeader, "binary payload holds values other than 0/1");
    }
  }
  return v;
}

std::string encode_nrrd_header(const Volume& v, const std::string& data_file) {
  const bool labels = v.kind() == VolumeKind::Labels;
  return nrrd_header(v.dims(), v.spacing(), labels ? "uint16" : "uint8", labels, data_file);
}

Volume load_volume(const fs::path& path, VolumeFormat format) {
  if (format == VolumeFormat::RawJson) {
    fs::path sidecar = path;
    if (lower(path.extension().string()) == ".raw") sidecar.replace_extension(".json");
    const auto text = read_file(sidecar);
    const auto payload = read_file(raw_json_payload_path(sidecar));
    return decode_raw_json(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()), payload);
  }
  const auto bytes = read_file(path);
  const auto h = parse_nrrd_header(bytes);
  if (h.type == ElementType::F64) throw Error(ErrorCode::UnsupportedEncoding, "float64 NRRD is a field, not a mask");
  const auto payload = nrrd_payload(path, h, bytes);
  auto data = decode_ints(payload, h.type, h.big_endian);
  const auto kind = infer_kind(h.type, data);
  return Volume(h.dims, h.spacing, kind, std::move(data));
}

Volume load_volume(const fs::path& path) { return load_volume(path, format_from_path(path)); }

void save_volume(const Volume& v, const fs::path& path, VolumeFormat format) {
  const auto payload = encode_payload(v);
  if (format == VolumeFormat::RawJson) {
    fs::path sidecar = path;
    if (lower(path.extension().string()) == ".raw") sidecar.replace_extension(".json");
    json j;
    j["dims"] = {v.dims().nx, v.dims().ny, v.dims().nz};
    j["spacing"] = {v.spacing()[0], v.spacing()[1], v.spacing()[2]};
    j["kind"] = v.kind() == VolumeKind::Binary ? "binary" : "labels";
    write_file(sidecar, j.dump() + "\n", {});
    write_file(raw_json_payload_path(sidecar), {}, payload);
    return;
  }
  if (lower(path.extension().string()) == ".nhdr") {
    auto raw = path;
    raw.replace_extension(".raw");
    write_file(path, encode_nrrd_header(v, raw.filename().string()), {});
    write_file(raw, {}, payload);
  } else {
    write_file(path, encode_nrrd_header(v), payload);
  }
}

void save_volume(const Volume& v, const fs::path& path) { save_volume(v, path, format_from_path(path)); }

void save_field_nrrd(const ScalarField& f, const fs::path& path) {
  std::vector<unsigned char> payload(f.data.size() * 8);
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &f.data[i], 8);
    for (int b = 0; b < 8; ++b) payload[8 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  write_file(path, nrrd_header(f.dims, f.spacing, "double", true, {}), payload);
}

ScalarField load_field_nrrd(const fs::path& path) {
  const auto bytes = read_file(path);
  const auto h = parse_nrrd_header(bytes);
  if (h.type != ElementType::F64) throw Error(ErrorCode::UnsupportedEncoding, "field files must be float64");
  const auto payload = nrrd_payload(path, h, bytes);
  ScalarField f{h.dims, h.spacing, std::vector<double>(h.dims.count())};
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const int src = h.big_endian ? 7 - b : b;
      bits |= static_cast<std::uint64_t>(payload[8 * i + src]) << (8 * b);
    }
    std::memcpy(&f.data[i], &bits, 8);
  }
  return f;
}

}  // namespace bronchograph
