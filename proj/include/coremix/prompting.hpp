#pragma once

#include "coremix/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace coremix {

inline constexpr std::string_view kLabelPlaceholder = "<lab_name>";
inline constexpr std::string_view kDatasetTypePlaceholder = "<dataset_type>";

struct PromptPair {
  std::string contextual; // steers generation toward the class
  std::string negative;   // content to suppress
  double guidance_scale = 7.0;
  friend bool operator==(const PromptPair &, const PromptPair &) = default;
};

class PromptTemplate {
public:
  PromptTemplate(std::vector<std::string> context_patterns, std::vector<std::string> negative_patterns)
      : context_(std::move(context_patterns)), negative_(std::move(negative_patterns)) {
    if (context_.empty())
      throw ValidationError("prompt template needs at least one context pattern");
    if (negative_.empty())
      throw ValidationError("prompt template needs at least one negative pattern");
    for (const auto &p : context_)
      if (p.find(kLabelPlaceholder) == std::string::npos || p.find(kDatasetTypePlaceholder) == std::string::npos)
        throw ValidationError("context pattern \"" + p + "\" must contain both <lab_name> and <dataset_type>");
  }

  const std::vector<std::string> &context_patterns() const noexcept { return context_; }
  const std::vector<std::string> &negative_patterns() const noexcept { return negative_; }

  static std::vector<std::string> default_negative_patterns() {
    return {"cartoon, illustration, painting", "blurry, distorted, deformed", "text, watermark, logo"};
  }

  // First entry is the snow pattern; the rest keep its grammatical shape.
  static PromptTemplate builtin() {
    return PromptTemplate(
        {
            "Generate heavy snow to the <lab_name>, a <dataset_type> object",
            "Generate heavy rain to the <lab_name>, a <dataset_type> object",
            "Generate dense fog to the <lab_name>, a <dataset_type> object",
            "Generate bright sunlight to the <lab_name>, a <dataset_type> object",
            "Generate autumn leaves to the <lab_name>, a <dataset_type> object",
        },
        default_negative_patterns());
  }

private:
  std::vector<std::string> context_;
  std::vector<std::string> negative_;
};

/// Picks pattern `variant_index` (cyclically) from each list and substitutes the label and dataset type.
/// Placeholders are expanded once; text inside the substituted values is not re-scanned.
inline PromptPair build_prompt_pair(const PromptTemplate &tpl, std::string_view class_name,
                                    std::string_view dataset_type, std::size_t variant_index,
                                    double guidance_scale = 7.0) {
  if (class_name.empty())
    throw ValidationError("class_name must be nonempty");
  if (!(guidance_scale > 0.0))
    throw ValidationError("guidance_scale must be > 0");
  const auto &ctx = tpl.context_patterns()[variant_index % tpl.context_patterns().size()];
  std::string out;
  for (std::size_t i = 0; i < ctx.size();) {
    if (ctx.compare(i, kLabelPlaceholder.size(), kLabelPlaceholder) == 0) {
      out += class_name;
      i += kLabelPlaceholder.size();
    } else if (ctx.compare(i, kDatasetTypePlaceholder.size(), kDatasetTypePlaceholder) == 0) {
      out += dataset_type;
      i += kDatasetTypePlaceholder.size();
    } else {
      out += ctx[i++];
    }
  }
  return {std::move(out), tpl.negative_patterns()[variant_index % tpl.negative_patterns().size()], guidance_scale};
}

inline PromptTemplate parse_templates(const nlohmann::json &j) {
  if (!j.is_object())
    throw ParseError("prompt template file must hold an object");
  auto string_list = [&](const char *key) {
    const auto &v = j.at(key);
    if (!v.is_array())
      throw ParseError(std::string("key '") + key + "' must be a list of strings");
    std::vector<std::string> out;
    for (const auto &e : v) {
      if (!e.is_string())
        throw ParseError(std::string("key '") + key + "' must be a list of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  };
  if (!j.contains("context_patterns"))
    throw ParseError("missing key 'context_patterns'");
  auto ctx = string_list("context_patterns");
  auto neg = j.contains("negative_patterns") ? string_list("negative_patterns")
                                             : PromptTemplate::default_negative_patterns();
  return PromptTemplate(std::move(ctx), std::move(neg));
}

/// Loads a JSON template file. A missing path (or none given) falls back to the
/// built-in template only when `allow_default` is set.
inline PromptTemplate load_templates(const std::optional<std::filesystem::path> &path, bool allow_default) {
  if (!path || !std::filesystem::exists(*path)) {
    if (allow_default)
      return PromptTemplate::builtin();
    throw IoError(path ? "prompt template file not found: " + path->string()
                       : std::string("no prompt template given (pass --prompts or --allow-default-prompts)"));
  }
  std::ifstream in(*path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(path->string() + ": " + e.what());
  }
  return parse_templates(j);
}

} // namespace coremix
