#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "bronchograph/volume_io.hpp"

using namespace bronchograph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "bronchograph_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Volume random_labels(std::mt19937_64& rng, Dims d, std::uint16_t max_label) {
  Volume v(d, {0.7, 0.8, 1.25}, VolumeKind::Labels);
  std::uniform_int_distribution<int> dist(0, max_label);
  for (std::size_t i = 0; i < d.count(); ++i) v[i] = static_cast<std::uint16_t>(dist(rng));
  return v;
}

}  // namespace

TEST_CASE("raw json decode of a 2x2x2 all-ones payload") {
  const std::vector<unsigned char> payload(8, 0x01);
  const auto v = decode_raw_json(R"({"dims":[2,2,2],"spacing":[1,1,1]})", payload);
  CHECK(v.kind() == VolumeKind::Binary);
  CHECK(v.foreground_count() == 8);
  CHECK(v.dims() == Dims{2, 2, 2});
}

TEST_CASE("raw json rejects bad headers and short payloads") {
  const std::vector<unsigned char> payload(8, 0x01);
  auto code_of = [&](std::string_view sidecar, std::span<const unsigned char> p) {
    try {
      decode_raw_json(sidecar, p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of("{not json", payload) == ErrorCode::MalformedHeader);
  CHECK(code_of(R"({"dims":[2,2],"spacing":[1,1,1]})", payload) == ErrorCode::MalformedHeader);
  CHECK(code_of(R"({"dims":[2,2,3],"spacing":[1,1,1]})", payload) == ErrorCode::DimsMismatch);
  CHECK(code_of(R"({"dims":[2,2,2],"spacing":[1,0,1]})", payload) == ErrorCode::MalformedHeader);
  const std::vector<unsigned char> twos(8, 0x02);
  CHECK(code_of(R"({"dims":[2,2,2],"spacing":[1,1,1]})", twos) == ErrorCode::MalformedHeader);
}

TEST_CASE("1x1x1 zero mask writes a one-byte payload") {
  Volume v({1, 1, 1}, {1, 1, 1}, VolumeKind::Binary);
  const auto p = scratch("one.json");
  save_volume(v, p, VolumeFormat::RawJson);
  CHECK(fs::file_size(scratch("one.raw")) == 1);
  CHECK(load_volume(p) == v);
}

TEST_CASE("label volumes use 16-bit payloads") {
  Volume v({3, 2, 1}, {1, 1, 1}, VolumeKind::Labels);
  v[0] = 127;
  v[5] = 300;
  const auto p = scratch("labels.json");
  save_volume(v, p, VolumeFormat::RawJson);
  CHECK(fs::file_size(scratch("labels.raw")) == 12);
  std::ifstream is(scratch("labels.raw"), std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)), {});
  CHECK(static_cast<unsigned char>(bytes[0]) == 127);
  CHECK(static_cast<unsigned char>(bytes[1]) == 0);
  CHECK(static_cast<unsigned char>(bytes[10]) == (300 & 0xff));
  CHECK(static_cast<unsigned char>(bytes[11]) == (300 >> 8));
  CHECK(load_volume(p) == v);
}

TEST_CASE("random 64^3 masks round-trip through both formats") {
  std::mt19937_64 rng(7);
  Volume v({64, 64, 64}, {0.5, 0.5, 0.625}, VolumeKind::Binary);
  std::bernoulli_distribution coin(0.3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = coin(rng);
  for (const auto* name : {"rand.json", "rand.nrrd", "rand.nhdr"}) {
    CAPTURE(name);
    const auto p = scratch(name);
    save_volume(v, p);
    CHECK(load_volume(p) == v);
  }
  const auto labels = random_labels(rng, {9, 7, 5}, 150);
  for (const auto* name : {"lab.json", "lab.nrrd", "lab.nhdr"}) {
    CAPTURE(name);
    save_volume(labels, scratch(name));
    CHECK(load_volume(scratch(name)) == labels);
  }
}

TEST_CASE("hand-written NRRD header with diagonal space directions") {
  std::string bytes =
      "NRRD0004\n"
      "# written by hand\n"
      "type: unsigned char\n"
      "dimension: 3\n"
      "sizes: 2 3 1\n"
      "space: left-posterior-superior\n"
      "space directions: (0.5,0,0) (0,0.5,0) (0,0,0.625)\n"
      "encoding: raw\n"
      "\n";
  bytes += std::string("\x01\x00\x01\x00\x00\x01", 6);
  const auto p = scratch("hand.nrrd");
  write_bytes(p, bytes);
  const auto v = load_volume(p);
  CHECK(v.spacing() == Vec3{0.5, 0.5, 0.625});
  CHECK(v.dims() == Dims{2, 3, 1});
  CHECK(v.foreground_count() == 3);
  CHECK(v.at(1, 2, 0) == 1);
}

TEST_CASE("big-endian 16-bit NRRD decodes to the same values") {
  std::string bytes =
      "NRRD0004\n"
      "type: uint16\n"
      "dimension: 3\n"
      "sizes: 2 1 1\n"
      "spacings: 1 1 2\n"
      "endian: big\n"
      "encoding: raw\n"
      "\n";
  bytes += std::string("\x01\x02\x00\x05", 4);
  const auto p = scratch("be.nrrd");
  write_bytes(p, bytes);
  const auto v = load_volume(p);
  CHECK(v.kind() == VolumeKind::Labels);
  CHECK(v[0] == 0x0102);
  CHECK(v[1] == 5);
  CHECK(v.spacing()[2] == 2.0);
}

TEST_CASE("NRRD subset rejections") {
  auto code_for = [](const std::string& header) {
    const auto p = scratch("bad.nrrd");
    write_bytes(p, header + std::string(8, '\0'));
    try {
      load_volume(p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  const std::string head = "NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 2 2\n";
  CHECK(code_for(head + "encoding: gzip\n\n") == ErrorCode::UnsupportedEncoding);
  CHECK(code_for(head + "space directions: (1,0.1,0) (0,1,0) (0,0,1)\nencoding: raw\n\n") == ErrorCode::UnsupportedEncoding);
  CHECK(code_for("NRRD0004\ntype: uint8\ndimension: 2\nsizes: 2 4\nencoding: raw\n\n") == ErrorCode::UnsupportedEncoding);
  CHECK(code_for("P6\n") == ErrorCode::MalformedHeader);
  CHECK(code_for("NRRD0004\ntype: float\ndimension: 3\nsizes: 2 2 2\nencoding: raw\n\n") == ErrorCode::UnsupportedEncoding);
}

TEST_CASE("missing files report IoFailure") {
  try {
    load_volume(scratch("does_not_exist.nrrd"));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}

TEST_CASE("distance fields round-trip as float64 NRRD") {
  ScalarField f{{3, 2, 2}, {0.5, 1, 2}, {}};
  for (int i = 0; i < 12; ++i) f.data.push_back(i * 0.1 + 1e-12);
  save_field_nrrd(f, scratch("field.nrrd"));
  const auto g = load_field_nrrd(scratch("field.nrrd"));
  CHECK(g.dims == f.dims);
  CHECK(g.spacing == f.spacing);
  CHECK(g.data == f.data);
}
