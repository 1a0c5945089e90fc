#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bridge/embedding.hpp"
#include "bridge/pool.hpp"

namespace bridge {

// std::nullopt selects every example.
using TopK = std::optional<std::size_t>;

inline constexpr std::size_t kRetrievalPresets[] = {10, 25};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Top-k pool indices by cosine similarity to `query`, least similar first
// so the closest example ends up last in the prompt.
std::vector<std::size_t> retrieve_topk(const EmbeddingMatrix& embeddings,
                                       const Eigen::VectorXd& query, TopK k);

// k-means (k-means++ seeding), then the example nearest each centroid.
SubsetVector diverse_k(const EmbeddingMatrix& embeddings, std::size_t k, Rng& rng);

// Mean of the rows; the per-dataset query for retrieval in the optimize slot.
Eigen::VectorXd mean_query(const EmbeddingMatrix& embeddings);

std::string example_text(const Example& e);
EmbeddingMatrix embed_pool(Embedder& embedder, const ExamplePool& pool);

}  // namespace bridge
