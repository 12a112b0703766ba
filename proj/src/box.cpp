#include "propbench/box.hpp"

#include "propbench/error.hpp"

namespace propbench {

bool ProposalSet::scored() const {
  return std::any_of(items.begin(), items.end(), [](const ScoredBox& s) { return s.score.has_value(); });
}

std::vector<BBox> ProposalSet::boxes() const {
  std::vector<BBox> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.box);
  return out;
}

void validate(const ProposalSet& ps) {
  const bool any_scored = ps.scored();
  std::optional<double> prev;
  for (std::size_t i = 0; i < ps.items.size(); ++i) {
    const auto& it = ps.items[i];
    if (!it.box.valid())
      throw InvalidArgument("proposal " + std::to_string(i) + " of image '" + ps.image_id + "' is not a valid box");
    if (it.oracle) continue;
    if (any_scored && !it.score)
      throw InvalidArgument("image '" + ps.image_id + "': scored and unscored proposals mixed");
    if (it.score && !std::isfinite(*it.score))
      throw InvalidArgument("image '" + ps.image_id + "': non-finite score");
    if (ps.ordering_meaningful && it.score) {
      if (prev && *it.score > *prev)
        throw InvalidArgument("image '" + ps.image_id + "': sorted proposals have increasing scores");
      prev = it.score;
    }
  }
}

}  // namespace propbench
