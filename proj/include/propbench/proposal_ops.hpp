#pragma once

#include "propbench/box.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace propbench {

/// Observed mean proposal count per method parameter value.
struct CalibrationTable {
  std::vector<std::pair<double, double>> points;  // (parameter, count), counts strictly ascending
};

/// Ranking order used by every op: oracle items first, then score descending,
/// ties by input position. For unscored ordered sets, input position alone.
std::vector<std::size_t> rank_order(const ProposalSet& ps);

/// Collapses bit-identical boxes to the highest-scored (earliest on ties) copy,
/// keeping input order.
ProposalSet dedup(const ProposalSet& ps);

/// The k best-ranked items, in rank order. Throws InvalidArgument for sets
/// that are neither scored nor ordered.
ProposalSet top_k(const ProposalSet& ps, std::size_t k);

/// Uniform sample of k items without replacement, kept in input order.
ProposalSet random_k(const ProposalSet& ps, std::size_t k, std::uint64_t seed);

/// Parameter value expected to yield `target_count` proposals, by piecewise
/// linear interpolation of parameter as a function of count.
double calibrate_count(const CalibrationTable& table, double target_count);

/// Greedy NMS: visit by rank, suppress boxes whose IoU with a kept box exceeds
/// beta. Survivors keep input order.
ProposalSet nms(const ProposalSet& ps, double beta);

struct AdaptiveNmsParams {
  double beta0 = 0.90;
  double eta = 0.9996;
};

struct AdaptiveNmsResult {
  ProposalSet kept;
  double final_beta = 0.0;  // threshold after the last acceptance
};

/// NMS whose threshold decays multiplicatively (beta <- beta * eta) after each
/// kept box; stops after k keeps. Survivors keep input order.
AdaptiveNmsResult adaptive_nms(const ProposalSet& ps, std::size_t k, const AdaptiveNmsParams& params = {});

}  // namespace propbench
