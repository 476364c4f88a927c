#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "bronchograph/volume.hpp"

namespace bronchograph {

/// On-disk formats.
///  - RawJson: `<stem>.json` sidecar {"dims","spacing","kind"} plus `<stem>.raw`
///    payload; uint8 for binary masks, little-endian uint16 for label volumes.
///  - Nrrd: NRRD0004 subset, `dimension: 3`, `encoding: raw`, diagonal
///    `space directions` (or `spacings`). `.nrrd` carries the payload after the
///    header; `.nhdr` points to it with `data file:`.
enum class VolumeFormat { Nrrd, RawJson };

VolumeFormat format_from_path(const std::filesystem::path& path);

Volume load_volume(const std::filesystem::path& path, VolumeFormat format);
Volume load_volume(const std::filesystem::path& path);
void save_volume(const Volume& v, const std::filesystem::path& path, VolumeFormat format);
void save_volume(const Volume& v, const std::filesystem::path& path);

/// Float64 NRRD for distance fields.
void save_field_nrrd(const ScalarField& f, const std::filesystem::path& path);
ScalarField load_field_nrrd(const std::filesystem::path& path);

/// In-memory decoders, exposed for tests and for embedding.
Volume decode_raw_json(std::string_view sidecar_json, std::span<const unsigned char> payload);
std::string encode_nrrd_header(const Volume& v, const std::string& data_file = {});

}  // namespace bronchograph
