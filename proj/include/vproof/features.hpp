#pragma once

// Fixed numeric views of statements and trees shared by the approximate
// verifier, the policy and the drift detector.

#include <Eigen/Core>

#include "vproof/kernel.hpp"
#include "vproof/prooftree.hpp"

namespace vproof {

inline constexpr int kEmbeddingDim = 7;
using Embedding = Eigen::Matrix<double, kEmbeddingDim, 1>;

/// Normalized constructor counts {0, S, +, *, var} over both sides, then the
/// larger side depth and the binder count, each scaled to roughly [0, 1].
Embedding embed(const Statement& s);

/// Cosine similarity; 1 when both vectors are zero, 0 when exactly one is.
double cosine(const Embedding& a, const Embedding& b);

/// 1 - cosine over each reachable parent-child edge in DFS order; edges back
/// to an ancestor are skipped.
std::vector<double> edge_drops(const ProofTree& t);
double max_edge_drop(const ProofTree& t);

}  // namespace vproof
