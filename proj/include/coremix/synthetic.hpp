#pragma once

// Writes small folder-per-class PNG datasets drawn from the mock generator's
// subject fields, for demos and tests with the mock backends.

#include "coremix/generation.hpp"
#include "coremix/image.hpp"
#include "coremix/rng.hpp"

#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace coremix {

struct SyntheticDatasetSpec {
  std::vector<std::string> class_names;
  std::size_t images_per_class = 20;
  std::string dataset_type = "object";
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 0;
};

/// Instance `index` of `class_name`. Same subject field the mock generator draws for
/// the built-in prompts, with stronger per-instance variation than a generation.
inline ImageBuffer synthetic_instance(std::string_view class_name, std::string_view dataset_type, std::size_t index,
                                     std::size_t height, std::size_t width, std::uint64_t seed) {
  const std::string subject = std::string(class_name) + ", a " + std::string(dataset_type) + " object";
  Rng rng(Hasher{}.str("synthetic").u64(seed).str(class_name).u64(index).digest());
  return render_mock_field(mock_field_params(subject), height, width, rng, kMockInstanceJitter, 0.25, kMockInstanceDeviation,
                           kMockInstanceGrain);
}

inline void write_synthetic_dataset(const std::filesystem::path &root, const SyntheticDatasetSpec &spec) {
  for (const auto &name : spec.class_names)
    for (std::size_t i = 0; i < spec.images_per_class; ++i) {
      std::ostringstream file;
      file << "img_" << std::setw(4) << std::setfill('0') << i << ".png";
      write_png(root / name / file.str(),
                synthetic_instance(name, spec.dataset_type, i, spec.height, spec.width, spec.seed));
    }
}

} // namespace coremix
