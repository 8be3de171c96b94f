#include "decap/embedder.hpp"
#include "decap/evaluator.hpp"
#include "decap/retrieval.hpp"
#include "decap/textmetrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace decap;

namespace {

std::string random_text(std::mt19937& rng, std::size_t words) {
  static const char* vocab[] = {"the", "man", "woman", "old", "young", "doctor", "nurse", "park", "talked",
                                "about", "their", "family", "who", "was", "forgetful", "kind", "student"};
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += vocab[rng() % std::size(vocab)];
  }
  return out;
}

void BM_RougeL(benchmark::State& state) {
  std::mt19937 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = tokenize(random_text(rng, n));
  const auto b = tokenize(random_text(rng, n));
  for (auto _ : state) benchmark::DoNotOptimize(rouge_l(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RougeL)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_HashingEmbed(benchmark::State& state) {
  std::mt19937 rng(2);
  const HashingEmbedder embedder;
  const auto text = random_text(rng, 40);
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(text));
}
BENCHMARK(BM_HashingEmbed);

void BM_TopK(benchmark::State& state) {
  std::mt19937 rng(3);
  std::vector<NeutralPair> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    pairs.push_back({"p" + std::to_string(i), random_text(rng, 12), "Fine.", std::nullopt});
  }
  const auto index = NeutralIndex::build(std::move(pairs), std::make_shared<HashingEmbedder>());
  const auto query = random_text(rng, 30);
  for (auto _ : state) benchmark::DoNotOptimize(index.top_k(query, 5));
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(1000)->Arg(10000);

void BM_ParseAnswer(benchmark::State& state) {
  const std::vector<OptionEntry> options{{"The grandfather", OptionRole::Target},
                                         {"Unknown.", OptionRole::Unknown},
                                         {"The grandson", OptionRole::NonTarget}};
  const LetterMap map({2, 0, 1});
  const std::string reply = "After reading the context carefully, the answer is C. The grandson was there.";
  for (auto _ : state) benchmark::DoNotOptimize(parse_answer(reply, map, options));
}
BENCHMARK(BM_ParseAnswer);

}  // namespace

BENCHMARK_MAIN();
