#pragma once

#include "coremix/errors.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace coremix {

enum class MixKind { pixel, patch, none };
enum class PatchDirection { original_onto_generated, generated_onto_original };

struct PatchRect {
  std::size_t x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const PatchRect &, const PatchRect &) = default;
};

/// One manifest line: everything needed to audit or replay one augmented sample.
struct AugmentationRecord {
  std::string record_id;
  std::string class_name;
  std::string source_path;
  std::optional<std::string> generated_path;
  std::optional<double> similarity;
  double tau = 0.0;
  bool accepted = false;
  std::uint32_t attempts = 1;
  MixKind mix_kind = MixKind::none;
  std::optional<double> lambda;
  std::optional<PatchRect> patch_rect;
  std::optional<PatchDirection> patch_direction;
  std::uint64_t eta_seed = 0;
  std::uint64_t gen_seed = 0;
  std::optional<std::string> output_path;

  friend bool operator==(const AugmentationRecord &, const AugmentationRecord &) = default;
};

inline const char *to_string(MixKind k) {
  switch (k) {
  case MixKind::pixel: return "pixel";
  case MixKind::patch: return "patch";
  case MixKind::none: return "none";
  }
  return "?";
}

inline const char *to_string(PatchDirection d) {
  return d == PatchDirection::original_onto_generated ? "original_onto_generated" : "generated_onto_original";
}

inline void validate(const AugmentationRecord &r) {
  auto fail = [&](const std::string &why) { throw ValidationError("record '" + r.record_id + "': " + why); };
  if (r.record_id.empty())
    fail("empty record_id");
  if (r.class_name.empty())
    fail("empty class_name");
  if (r.attempts < 1)
    fail("attempts must be >= 1");
  if (r.similarity && !(*r.similarity >= -1.0 - 1e-9 && *r.similarity <= 1.0 + 1e-9))
    fail("similarity outside [-1,1]");
  const bool above = r.similarity && *r.similarity > r.tau;
  if (r.accepted != above)
    fail("accepted must hold exactly when similarity > tau");
  switch (r.mix_kind) {
  case MixKind::pixel:
    if (!r.lambda || r.patch_rect || r.patch_direction)
      fail("pixel mix needs lambda and no patch fields");
    if (!(*r.lambda >= 0.0 && *r.lambda <= 1.0))
      fail("lambda outside [0,1]");
    break;
  case MixKind::patch:
    if (r.lambda || !r.patch_rect || !r.patch_direction)
      fail("patch mix needs patch_rect and patch_direction and no lambda");
    if (r.patch_rect->w < 1 || r.patch_rect->h < 1)
      fail("empty patch_rect");
    break;
  case MixKind::none:
    if (r.lambda || r.patch_rect || r.patch_direction)
      fail("unmixed record carries mix parameters");
    break;
  }
  if (r.mix_kind != MixKind::none && !r.accepted)
    fail("mixed record must be accepted");
}

namespace detail {

template <class T> nlohmann::ordered_json opt(const std::optional<T> &v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const AugmentationRecord &r) {
  nlohmann::ordered_json j;
  j["record_id"] = r.record_id;
  j["class_name"] = r.class_name;
  j["source_path"] = r.source_path;
  j["generated_path"] = opt(r.generated_path);
  j["similarity"] = opt(r.similarity);
  j["tau"] = r.tau;
  j["accepted"] = r.accepted;
  j["attempts"] = r.attempts;
  j["mix_kind"] = to_string(r.mix_kind);
  j["lambda"] = opt(r.lambda);
  if (r.patch_rect)
    j["patch_rect"] = {r.patch_rect->x, r.patch_rect->y, r.patch_rect->w, r.patch_rect->h};
  else
    j["patch_rect"] = nullptr;
  j["patch_direction"] = r.patch_direction ? nlohmann::ordered_json(to_string(*r.patch_direction))
                                           : nlohmann::ordered_json(nullptr);
  j["eta_seed"] = r.eta_seed;
  j["gen_seed"] = r.gen_seed;
  j["output_path"] = opt(r.output_path);
  return j;
}

inline const nlohmann::json &field(const nlohmann::json &j, const char *key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string("missing key '") + key + "'");
  return *it;
}

template <class T> std::optional<T> opt_field(const nlohmann::json &j, const char *key) {
  const auto &v = field(j, key);
  if (v.is_null())
    return std::nullopt;
  return v.get<T>();
}

inline AugmentationRecord from_json(const nlohmann::json &j) {
  if (!j.is_object())
    throw ParseError("record is not an object");
  AugmentationRecord r;
  try {
    r.record_id = field(j, "record_id").get<std::string>();
    r.class_name = field(j, "class_name").get<std::string>();
    r.source_path = field(j, "source_path").get<std::string>();
    r.generated_path = opt_field<std::string>(j, "generated_path");
    r.similarity = opt_field<double>(j, "similarity");
    r.tau = field(j, "tau").get<double>();
    r.accepted = field(j, "accepted").get<bool>();
    r.attempts = field(j, "attempts").get<std::uint32_t>();
    const auto kind = field(j, "mix_kind").get<std::string>();
    if (kind == "pixel")
      r.mix_kind = MixKind::pixel;
    else if (kind == "patch")
      r.mix_kind = MixKind::patch;
    else if (kind == "none")
      r.mix_kind = MixKind::none;
    else
      throw ParseError("unknown mix_kind '" + kind + "'");
    r.lambda = opt_field<double>(j, "lambda");
    if (auto rect = opt_field<std::array<std::size_t, 4>>(j, "patch_rect"))
      r.patch_rect = PatchRect{(*rect)[0], (*rect)[1], (*rect)[2], (*rect)[3]};
    if (auto dir = opt_field<std::string>(j, "patch_direction")) {
      if (*dir == "original_onto_generated")
        r.patch_direction = PatchDirection::original_onto_generated;
      else if (*dir == "generated_onto_original")
        r.patch_direction = PatchDirection::generated_onto_original;
      else
        throw ParseError("unknown patch_direction '" + *dir + "'");
    }
    r.eta_seed = field(j, "eta_seed").get<std::uint64_t>();
    r.gen_seed = field(j, "gen_seed").get<std::uint64_t>();
    r.output_path = opt_field<std::string>(j, "output_path");
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(e.what());
  }
  return r;
}

} // namespace detail

/// One JSON object per line. Identical record sequences produce identical bytes.
inline std::string serialize_manifest(const std::vector<AugmentationRecord> &records) {
  std::string out;
  for (const auto &r : records) {
    validate(r);
    out += detail::to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline void write_manifest(const std::vector<AugmentationRecord> &records, const std::filesystem::path &path) {
  const std::string text = serialize_manifest(records); // validate everything before touching the file
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write manifest " + path.string());
  out << text;
  if (!out)
    throw IoError("short write to manifest " + path.string());
}

inline std::vector<AugmentationRecord> parse_manifest(std::string_view text) {
  std::vector<AugmentationRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    try {
      auto record = detail::from_json(nlohmann::json::parse(line));
      validate(record);
      records.push_back(std::move(record));
    } catch (const nlohmann::json::exception &e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError &e) {
      throw ParseError(e.what(), line_no);
    } catch (const ValidationError &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return records;
}

inline std::vector<AugmentationRecord> read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest(text);
}

} // namespace coremix
