#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bridge {

// Row i is the embedding of pool example i.
struct EmbeddingMatrix {
  Eigen::MatrixXd vectors;

  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingMatrix embed(const std::vector<std::string>& ids,
                                const std::vector<std::string>& texts) = 0;
};

// Cache file: "d=<dim>" header, then "<id> v_1 ... v_d" per line.
void save_embedding_cache(const std::filesystem::path& path,
                          const std::vector<std::string>& ids, const EmbeddingMatrix& m);
EmbeddingMatrix load_embedding_cache(const std::filesystem::path& path,
                                     const std::vector<std::string>& ids);

// Deterministic feature-hashing embedder. Test fixture, not a language model.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 32) : dim_(dim) {}
  EmbeddingMatrix embed(const std::vector<std::string>& ids,
                        const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
};

}  // namespace bridge
