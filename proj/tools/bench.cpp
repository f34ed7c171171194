// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Microbenchmark comparing the serial reference kernels against the OpenMP
// paths: batch embedding, pairwise multi-view similarity, retrieval scoring
// and batched contrastive gradients. Both paths are map-style and produce
// bit-identical output; the tests assert that, this tool measures the speed.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "webexpert/clustering.hpp"
#include "webexpert/parallel.hpp"
#include "webexpert/retrieval.hpp"
#include "webexpert/training.hpp"

using namespace webexpert;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::string> synthetic_texts(std::size_t n) {
  static const char* words[] = {"solar",  "panel",   "credit", "loan",
                                "vaccine", "trial",  "wafer",  "yield",
                                "figures", "filed",  "records", "archives",
                                "region",  "sector", "report", "analysis"};
  std::mt19937_64 rng(4242);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    std::size_t len = 6 + rng() % 10;
    for (std::size_t w = 0; w < len; ++w) {
      if (!text.empty()) text += " ";
      text += words[rng() % (sizeof(words) / sizeof(words[0]))];
    }
    out.push_back(text + " " + std::to_string(i));
  }
  return out;
}

void report(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3fs   openmp %8.3fs   speedup %5.2fx\n", name,
              serial_s, parallel_s, parallel_s > 0 ? serial_s / parallel_s : 0.0);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", max_threads());

  {
    auto texts = synthetic_texts(20000);
    auto t0 = Clock::now();
    auto serial = embed_batch(texts, kDefaultEmbeddingDim, Exec::Serial);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = embed_batch(texts, kDefaultEmbeddingDim, Exec::Parallel);
    double tp = seconds_since(t0);
    report("embed_batch (20k texts)", ts, tp);
    if (serial != parallel ? (std::printf("MISMATCH\n"), true) : false) return 1;
  }

  {
    auto texts = synthetic_texts(700);
    std::vector<QATuple> tuples(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      tuples[i].id = "t" + std::to_string(1000 + i);
      tuples[i].question = texts[i];
      tuples[i].answer = texts[(i + 1) % texts.size()];
    }
    ClusterParams params;
    TupleViews views = TupleViews::build(tuples, params, Exec::Parallel);
    auto t0 = Clock::now();
    auto serial = pairwise_similarity_matrix(views, params.weights, Exec::Serial);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = pairwise_similarity_matrix(views, params.weights, Exec::Parallel);
    double tp = seconds_since(t0);
    report("pairwise multiview (700^2)", ts, tp);
    if (serial != parallel) {
      std::printf("MISMATCH\n");
      return 1;
    }
  }

  {
    auto texts = synthetic_texts(50000);
    RetrievalIndex index;
    index.dim = kDefaultEmbeddingDim;
    index.rule_vecs = embed_batch(texts, index.dim, Exec::Parallel);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      index.rule_ids.push_back("r" + std::to_string(i));
    }
    Embedding q = embed_text("credit loan yield analysis");
    auto t0 = Clock::now();
    auto serial = score_rules(q, index, nullptr, Exec::Serial);
    double ts = seconds_since(t0);
    t0 = Clock::now();
    auto parallel = score_rules(q, index, nullptr, Exec::Parallel);
    double tp = seconds_since(t0);
    report("score_rules (50k rules)", ts, tp);
    if (serial != parallel) {
      std::printf("MISMATCH\n");
      return 1;
    }
  }

  {
    // Batched contrastive loss/grad at D=256, 64 examples x 8 negatives.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto vec = [&] {
      std::vector<double> v(kDefaultEmbeddingDim);
      for (auto& x : v) x = gauss(rng);
      return v;
    };
    std::vector<ContrastiveBatch> batches(64);
    for (auto& b : batches) {
      b.query = vec();
      b.positive = vec();
      for (int i = 0; i < 8; ++i) b.negatives.push_back(vec());
    }
    Matrix p = Matrix::identity(kDefaultEmbeddingDim);
    std::vector<RetLossResult> serial(batches.size()), parallel(batches.size());
    auto t0 = Clock::now();
    parallel_for(batches.size(), Exec::Serial,
                 [&](std::size_t i) { serial[i] = loss_ret(batches[i], p); });
    double ts = seconds_since(t0);
    t0 = Clock::now();
    parallel_for(batches.size(), Exec::Parallel,
                 [&](std::size_t i) { parallel[i] = loss_ret(batches[i], p); });
    double tp = seconds_since(t0);
    report("loss_ret batch (64x8, D=256)", ts, tp);
    for (std::size_t i = 0; i < batches.size(); ++i) {
      if (serial[i].loss != parallel[i].loss || serial[i].grad != parallel[i].grad) {
        std::printf("MISMATCH\n");
        return 1;
      }
    }
  }

  return 0;
}
