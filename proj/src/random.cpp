#include "synsem/random.hpp"

#include <string>

namespace synsem {

std::uint64_t sentence_seed(std::uint64_t global, std::string_view story, int sent_index) {
  std::string key(story);
  key += '\x1f';
  key += std::to_string(sent_index);
  return mix_seed(global ^ fnv1a(key));
}

}  // namespace synsem
