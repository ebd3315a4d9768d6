#include "lar/types.hpp"

#include <algorithm>

namespace lar {

std::string to_string(Task task) {
  return task == Task::linear ? "linear" : "logistic";
}

Task task_from_string(const std::string& name) {
  if (name == "linear") return Task::linear;
  if (name == "logistic") return Task::logistic;
  throw ConfigError("unknown task: " + name);
}

void validate(const Dataset& data) {
  if (data.responses.size() != data.features.rows())
    throw ConfigError("dataset: responses length does not match sample count");
  if (data.truth && data.truth->size() != data.features.cols())
    throw ConfigError("dataset: truth length does not match dimension");
}

Partition Partition::from_bags(std::vector<std::vector<std::size_t>> bags,
                               std::size_t min_size) {
  if (min_size == 0) throw ConfigError("partition: min_size must be positive");
  std::size_t total = 0;
  for (auto& bag : bags) {
    if (bag.size() < min_size)
      throw ConfigError("partition: bag smaller than min_size");
    std::sort(bag.begin(), bag.end());
    total += bag.size();
  }
  // Coverage check: indices must be exactly {0..total-1}, each once.
  std::vector<char> seen(total, 0);
  for (const auto& bag : bags)
    for (std::size_t index : bag) {
      if (index >= total || seen[index])
        throw ConfigError("partition: bags must cover {0..n-1} disjointly");
      seen[index] = 1;
    }
  std::sort(bags.begin(), bags.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  Partition out;
  out.bags = std::move(bags);
  out.min_size = min_size;
  return out;
}

std::size_t Partition::sample_count() const {
  std::size_t total = 0;
  for (const auto& bag : bags) total += bag.size();
  return total;
}

}  // namespace lar
