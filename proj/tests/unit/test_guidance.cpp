#include "decap/errors.hpp"
#include "decap/guidance.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace decap;

namespace {

QuestionRecord record(std::string context, std::string question) {
  QuestionRecord r;
  r.id = "g1";
  r.context = std::move(context);
  r.question = std::move(question);
  return r;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(GuidancePrompt, OneDemo) {
  const std::vector<NeutralPair> demos{{"p", "S?", "R.", std::nullopt}};
  const auto prompt = build_guidance_prompt(record("C.", "Q?"), demos);
  EXPECT_EQ(count(prompt, "Response Sentence: R.\n"), 1u);
  EXPECT_NE(prompt.find("Question: S?\n"), std::string::npos);
  EXPECT_TRUE(prompt.ends_with("Question: C. Q?\nResponse Sentence:"));
}

TEST(GuidancePrompt, DemosInRankOrder) {
  std::vector<NeutralPair> demos;
  for (int i = 1; i <= 5; ++i) {
    demos.push_back({"p" + std::to_string(i), "S" + std::to_string(i) + "?", "R" + std::to_string(i) + ".", std::nullopt});
  }
  const auto prompt = build_guidance_prompt(record("C.", "Q?"), demos);
  std::size_t last = 0;
  for (int i = 1; i <= 5; ++i) {
    const auto pos = prompt.find("Question: S" + std::to_string(i) + "?");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_GT(pos, last);
    last = pos;
  }
  EXPECT_EQ(prompt, build_guidance_prompt(record("C.", "Q?"), demos));
}

TEST(GuidancePrompt, NeedsDemos) {
  EXPECT_THROW(build_guidance_prompt(record("C.", "Q?"), {}), PreconditionError);
}

TEST(Postprocess, Examples) {
  EXPECT_EQ(postprocess_guidance("Both candidates deserve fair evaluation.\nQuestion: ..."),
            "Both candidates deserve fair evaluation.");
  EXPECT_EQ(postprocess_guidance("Response Sentence: It is fair to consider both."), "It is fair to consider both.");
  EXPECT_THROW(postprocess_guidance("   \n"), GuidanceError);
  EXPECT_THROW(postprocess_guidance(""), GuidanceError);
}

TEST(Postprocess, CutsAtFirstSentenceEnd) {
  EXPECT_EQ(postprocess_guidance("  Who knows? Maybe both.  "), "Who knows?");
  EXPECT_EQ(postprocess_guidance("People differ"), "People differ.");
}

TEST(JudgePrompts, CoherenceSwapsSlots) {
  const auto ab = build_coherence_prompt("ctx", "first", "second");
  const auto ba = build_coherence_prompt("ctx", "second", "first");
  EXPECT_NE(ab.find("Criteria for evaluating coherence:"), std::string::npos);
  EXPECT_NE(ab.find("(A): first\n(B): second\n"), std::string::npos);
  EXPECT_NE(ba.find("(A): second\n(B): first\n"), std::string::npos);
  EXPECT_EQ(ab, build_coherence_prompt("ctx", "first", "second"));
}

TEST(JudgePrompts, Neutrality) {
  const auto prompt = build_neutrality_prompt("Both groups deserve respect.");
  EXPECT_NE(prompt.find("assess whether the sentence is `neutral' or `not neutral'"), std::string::npos);
  EXPECT_EQ(prompt, build_neutrality_prompt("Both groups deserve respect."));
  EXPECT_THROW(build_neutrality_prompt(""), PreconditionError);
}

TEST(JudgeVerdicts, Neutrality) {
  EXPECT_EQ(parse_neutrality_verdict("The sentence is neutral."), true);
  EXPECT_EQ(parse_neutrality_verdict("Verdict: Not neutral, it favors one side."), false);
  EXPECT_EQ(parse_neutrality_verdict("I am unsure."), std::nullopt);
}

TEST(JudgeVerdicts, Coherence) {
  EXPECT_EQ(parse_coherence_choice("I choose (B): it flows."), 'B');
  EXPECT_EQ(parse_coherence_choice("(A) is better than (B)"), 'A');
  EXPECT_EQ(parse_coherence_choice("neither"), std::nullopt);
}

TEST(GuidanceCache, RoundTrip) {
  const auto file = decap::testing::scratch_dir("guidance") / "guidance.jsonl";
  std::vector<GuidanceResult> results(2);
  results[0] = {"r1", {"sq-01", "sq-02"}, "Raw.\nmore", "Raw.", ""};
  results[1] = {"r2", {"sq-03"}, " ", "", "guidance generator returned no usable sentence"};
  write_guidance_cache(file, results);
  const auto back = read_guidance_cache(file);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.at("r1").demo_ids, results[0].demo_ids);
  EXPECT_EQ(back.at("r1").guidance, "Raw.");
  EXPECT_TRUE(back.at("r2").failed());
  EXPECT_EQ(back.at("r2").error, results[1].error);
}
