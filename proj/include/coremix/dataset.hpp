#pragma once

#include "coremix/errors.hpp"
#include "coremix/image.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace coremix {

struct ClassEntry {
  std::string class_name;
  std::vector<std::filesystem::path> image_paths; // lexicographic; the order every sampler indexes into

  std::size_t n_k() const noexcept { return image_paths.size(); }
  friend bool operator==(const ClassEntry &, const ClassEntry &) = default;
};

struct DatasetIndex {
  std::filesystem::path root_path;
  std::vector<ClassEntry> classes;
  std::string dataset_type; // free-text domain word used in prompts ("bird", "car", ...)
  std::vector<std::string> warnings; // skipped files

  const ClassEntry *find(std::string_view name) const {
    for (const auto &c : classes)
      if (c.class_name == name)
        return &c;
    return nullptr;
  }
  friend bool operator==(const DatasetIndex &, const DatasetIndex &) = default;
};

enum class DatasetLayout { folder_per_class };

/// Unordered pairs among n items: n(n-1)/2.
constexpr std::uint64_t pair_count(std::uint64_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

/// Scans an ImageNet-style tree: each immediate subdirectory of `root` is one class.
/// Every file is probed by decoding it; files that fail are skipped and listed in `warnings`.
inline DatasetIndex scan_dataset(const std::filesystem::path &root, std::string dataset_type = "object",
                                 DatasetLayout layout = DatasetLayout::folder_per_class) {
  namespace fs = std::filesystem;
  (void)layout;
  if (!fs::is_directory(root))
    throw IoError("dataset root does not exist: " + root.string());

  std::vector<fs::path> class_dirs;
  for (const auto &entry : fs::directory_iterator(root))
    if (entry.is_directory())
      class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw ValidationError("no classes under " + root.string());

  DatasetIndex index{root, {}, std::move(dataset_type), {}};
  for (const auto &dir : class_dirs) {
    ClassEntry entry{dir.filename().string(), {}};
    std::vector<fs::path> files;
    for (const auto &f : fs::directory_iterator(dir))
      if (f.is_regular_file())
        files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (auto &f : files) {
      try {
        (void)decode_png(read_file_bytes(f));
        entry.image_paths.push_back(std::move(f));
      } catch (const Error &e) {
        index.warnings.push_back("skipped " + f.string() + ": " + e.what());
      }
    }
    if (entry.image_paths.empty())
      throw ValidationError("class '" + entry.class_name + "' has no decodable images");
    index.classes.push_back(std::move(entry));
  }
  return index;
}

} // namespace coremix
