// Filters and mixes a single original image with a mock generative counterpart.
//
//   mix_pair <original.png> <class name> <dataset type> <out.png>

#include "coremix/coremix.hpp"

#include <iostream>

int main(int argc, char **argv) {
  using namespace coremix;
  if (argc != 5) {
    std::cerr << "usage: mix_pair <original.png> <class> <dataset_type> <out.png>\n";
    return 1;
  }
  const ImageBuffer original = read_png(argv[1]);
  const Embedding original_embedding = mock_embed(original);

  // A one-image class has no pairs; threshold against a few synthetic siblings instead.
  std::vector<Embedding> siblings{original_embedding};
  for (std::size_t i = 0; i < 8; ++i)
    siblings.push_back(mock_embed(synthetic_instance(argv[2], argv[3], i, original.height(), original.width(), 0)));
  const ClassThreshold threshold = estimate_threshold(siblings, 500, 0, argv[2]);

  MockGenerator gen;
  MockEncoder enc;
  const auto prompt = build_prompt_pair(PromptTemplate::builtin(), argv[2], argv[3], 0);
  const auto result =
      acquire_aligned(original_embedding, GenerationRequest::from(prompt, 512, 512, 42), gen, enc, threshold, 5);
  if (const auto *failure = std::get_if<FailureReport>(&result)) {
    std::cerr << "no aligned generation after " << failure->attempts.size() << " attempts\n";
    return 2;
  }
  const auto &aligned = std::get<AlignedSample>(result);
  std::cout << "prompt: " << prompt.contextual << "\nsimilarity " << aligned.decision.similarity << " > tau "
            << threshold.tau << " after " << aligned.attempts << " attempt(s)\n";

  const auto generated = resize_bilinear(aligned.image, original.height(), original.width());
  const auto spec = sample_mix_spec(7, original.height(), original.width());
  write_png(argv[4], mix(original, generated, spec));
  std::cout << "wrote " << to_string(spec.kind) << " mix to " << argv[4] << "\n";
  return 0;
}
