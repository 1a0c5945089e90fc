#include "bridge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "bridge/error.hpp"

namespace bridge {

namespace {

constexpr int kMaxKMeansIterations = 300;
constexpr double kKMeansTolerance = 1e-6;

void check_finite(const EmbeddingMatrix& e) {
  if (!e.vectors.allFinite()) throw Error("embedding matrix has non-finite entries");
}

}  // namespace

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

std::vector<std::size_t> retrieve_topk(const EmbeddingMatrix& embeddings,
                                       const Eigen::VectorXd& query, TopK k) {
  check_finite(embeddings);
  const std::size_t m = embeddings.rows();
  if (static_cast<std::size_t>(query.size()) != embeddings.dim()) {
    throw Error("retrieve_topk: query dimension " + std::to_string(query.size()) +
                " does not match embedding dimension " + std::to_string(embeddings.dim()));
  }
  if (query.norm() == 0.0) throw Error("retrieve_topk: query vector has zero norm");
  if (k && *k > m) {
    throw Error("retrieve_topk: k=" + std::to_string(*k) + " exceeds pool size " +
                std::to_string(m));
  }
  std::vector<double> sim(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd row = embeddings.vectors.row(static_cast<Eigen::Index>(i));
    if (row.norm() == 0.0) {
      throw Error("retrieve_topk: example " + std::to_string(i) + " has a zero-norm embedding");
    }
    sim[i] = cosine_similarity(row, query);
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  // Most similar first, lower index on ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  order.resize(k.value_or(m));
  std::reverse(order.begin(), order.end());
  return order;
}

SubsetVector diverse_k(const EmbeddingMatrix& embeddings, std::size_t k, Rng& rng) {
  check_finite(embeddings);
  const std::size_t m = embeddings.rows();
  if (k < 1 || k > m) {
    throw Error("diverse_k: k=" + std::to_string(k) + " must lie in [1, " +
                std::to_string(m) + "]");
  }
  const auto& x = embeddings.vectors;
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd centroids(kk, x.cols());

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> first(0, m - 1);
  centroids.row(0) = x.row(static_cast<Eigen::Index>(first(rng)));
  std::vector<double> d2(m, std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 1; c < kk; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - centroids.row(c - 1)).squaredNorm());
    }
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen + 1 < m; ++chosen) {
        target -= d2[chosen];
        if (target < 0.0 && d2[chosen] > 0.0) break;
      }
    } else {
      chosen = first(rng);
    }
    centroids.row(c) = x.row(static_cast<Eigen::Index>(chosen));
  }

  // Lloyd iterations.
  std::vector<Eigen::Index> assign(m, 0);
  for (int iter = 0; iter < kMaxKMeansIterations; ++iter) {
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < kk; ++c) {
        const double d = (x.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
    }
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(kk, x.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < m; ++i) {
      next.row(assign[i]) += x.row(static_cast<Eigen::Index>(i));
      ++counts[static_cast<std::size_t>(assign[i])];
    }
    double movement = 0.0;
    for (Eigen::Index c = 0; c < kk; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        next.row(c) = centroids.row(c);  // empty cluster keeps its centroid
      } else {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
      movement = std::max(movement, (next.row(c) - centroids.row(c)).norm());
    }
    centroids = next;
    if (movement <= kKMeansTolerance) break;
  }

  // Greedy one-to-one matching of centroids to their nearest examples.
  std::vector<std::tuple<double, Eigen::Index, std::size_t>> pairs;
  pairs.reserve(k * m);
  for (Eigen::Index c = 0; c < kk; ++c) {
    for (std::size_t i = 0; i < m; ++i) {
      pairs.emplace_back((x.row(static_cast<Eigen::Index>(i)) - centroids.row(c)).norm(), c, i);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> centroid_done(k, false);
  SubsetVector selected(m);
  std::size_t taken = 0;
  for (const auto& [dist, c, i] : pairs) {
    if (taken == k) break;
    if (centroid_done[static_cast<std::size_t>(c)] || selected.test(i)) continue;
    centroid_done[static_cast<std::size_t>(c)] = true;
    selected.set(i);
    ++taken;
  }
  return selected;
}

Eigen::VectorXd mean_query(const EmbeddingMatrix& embeddings) {
  if (embeddings.rows() == 0) throw Error("mean_query: no embeddings");
  return embeddings.vectors.colwise().mean().transpose();
}

std::string example_text(const Example& e) {
  return e.input + "\n" + e.rationale + "\n" + e.output;
}

EmbeddingMatrix embed_pool(Embedder& embedder, const ExamplePool& pool) {
  std::vector<std::string> ids, texts;
  for (const auto& e : pool.examples()) {
    ids.push_back(e.id);
    texts.push_back(example_text(e));
  }
  auto m = embedder.embed(ids, texts);
  if (m.rows() != pool.size()) {
    throw Error("embedder returned " + std::to_string(m.rows()) + " vectors for " +
                std::to_string(pool.size()) + " examples");
  }
  return m;
}

void save_embedding_cache(const std::filesystem::path& path,
                          const std::vector<std::string>& ids, const EmbeddingMatrix& m) {
  if (ids.size() != m.rows()) throw Error("embedding cache: id count mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write embedding cache " + path.string());
  out << "d=" << m.dim() << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (std::size_t c = 0; c < m.dim(); ++c) {
      out << ' ' << m.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    }
    out << '\n';
  }
}

EmbeddingMatrix load_embedding_cache(const std::filesystem::path& path,
                                     const std::vector<std::string>& ids) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read embedding cache " + path.string());
  std::string header;
  std::getline(in, header);
  if (header.rfind("d=", 0) != 0) throw ParseError("embedding cache: missing d=<dim> header");
  std::size_t dim = 0;
  try {
    dim = std::stoul(header.substr(2));
  } catch (const std::exception&) {
    throw ParseError("embedding cache: bad header \"" + header + "\"");
  }
  std::unordered_map<std::string, Eigen::VectorXd> rows;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id;
    ls >> id;
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
      if (!(ls >> v(static_cast<Eigen::Index>(c)))) {
        throw ParseError("embedding cache line " + std::to_string(line_no) + ": expected " +
                         std::to_string(dim) + " values");
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw ParseError("embedding cache line " + std::to_string(line_no) + ": too many values");
    }
    rows[id] = v;
  }
  EmbeddingMatrix m;
  m.vectors.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto it = rows.find(ids[i]);
    if (it == rows.end()) throw Error("embedding cache has no vector for \"" + ids[i] + "\"");
    m.vectors.row(static_cast<Eigen::Index>(i)) = it->second;
  }
  return m;
}

EmbeddingMatrix HashEmbedder::embed(const std::vector<std::string>& ids,
                                    const std::vector<std::string>& texts) {
  if (ids.size() != texts.size()) throw Error("embed: ids and texts differ in length");
  EmbeddingMatrix m;
  const auto d = static_cast<Eigen::Index>(dim_);
  m.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(texts.size()), d);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::istringstream words(texts[i]);
    std::string w;
    const auto row = static_cast<Eigen::Index>(i);
    while (words >> w) {
      const auto h = mix64(std::hash<std::string>{}(w));
      const auto col = static_cast<Eigen::Index>(h % dim_);
      m.vectors(row, col) += (h >> 63) ? 1.0 : -1.0;
    }
    // Constant bias keeps empty texts away from the zero vector.
    m.vectors(row, 0) += 0.5;
    if (m.vectors.row(row).norm() == 0.0) m.vectors(row, 0) = 1.0;
    m.vectors.row(row).normalize();
  }
  return m;
}

}  // namespace bridge
