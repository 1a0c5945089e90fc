#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "bridge/error.hpp"
#include "bridge/pool.hpp"

namespace bridge {
namespace {

std::string line(const std::string& id, bool correct = true) {
  return R"({"id":")" + id + R"(","input":"q )" + id +
         R"(","rationale":"","output":"a","correct":)" + (correct ? "true" : "false") +
         R"(,"meta":{}})";
}

ExamplePool abc() {
  return parse_pool(line("a") + "\n" + line("b") + "\n" + line("c") + "\n");
}

TEST(Pool, LoadsInFileOrder) {
  const auto pool = abc();
  ASSERT_EQ(pool.size(), 3u);
  EXPECT_EQ(pool[0].id, "a");
  EXPECT_EQ(pool[1].id, "b");
  EXPECT_EQ(pool[2].id, "c");
  EXPECT_EQ(pool.index_of("c"), 2u);
  EXPECT_FALSE(pool.contains("d"));
}

TEST(Pool, DuplicateIdNamesTheId) {
  std::string text;
  for (const auto* id : {"ex1", "ex7", "ex3", "ex4", "ex7"}) text += line(id) + "\n";
  try {
    parse_pool(text);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ex7"), std::string::npos) << e.what();
  }
}

TEST(Pool, EmptyFileIsAnError) {
  try {
    parse_pool("");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty pool"), std::string::npos);
  }
}

TEST(Pool, ParseErrorNamesLineNumber) {
  const std::string text = line("a") + "\n" + line("b") + "\n{not json\n";
  try {
    parse_pool(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Pool, RejectsMissingAndExtraFields) {
  EXPECT_THROW(parse_pool(R"({"id":"a","input":"","rationale":"","output":"","correct":true})"),
               ParseError);
  EXPECT_THROW(
      parse_pool(
          R"({"id":"a","input":"","rationale":"","output":"","correct":true,"meta":{},"x":1})"),
      ParseError);
  EXPECT_THROW(
      parse_pool(R"({"id":"a","input":"","rationale":"","output":"","correct":"yes","meta":{}})"),
      ParseError);
}

TEST(Pool, SeventyFiveLinePool) {
  std::string text;
  for (int i = 0; i < 75; ++i) text += line("bbh" + std::to_string(i)) + "\n";
  EXPECT_EQ(parse_pool(text).size(), 75u);
}

TEST(Pool, SaveLoadRoundTripIsByteIdentical) {
  std::string text;
  for (int i = 0; i < 5; ++i) text += line("e" + std::to_string(i), i % 2 == 0) + "\n";
  const auto dir = std::filesystem::temp_directory_path() / "bridge_pool_rt";
  std::filesystem::create_directories(dir);
  const auto path = dir / "pool.jsonl";
  {
    std::ofstream out(path);
    out << text << "\n  \n";
  }
  const auto pool = load_pool(path);
  EXPECT_EQ(serialize_pool(pool), text);
  save_pool(pool, dir / "again.jsonl");
  EXPECT_EQ(serialize_pool(load_pool(dir / "again.jsonl")), text);
  std::filesystem::remove_all(dir);
}

TEST(Pool, UnicodeAndMetaSurviveRoundTrip) {
  const std::string text =
      R"({"id":"ü1","input":"naïve ☃","rationale":"r","output":"o","correct":true,"meta":{"z":1,"a":[1,2]}})"
      "\n";
  EXPECT_EQ(serialize_pool(parse_pool(text)), text);
}

TEST(Pool, FilterCorrectKeepsOrder) {
  const auto pool = parse_pool(line("a", true) + "\n" + line("b", false) + "\n" +
                               line("c", true) + "\n");
  const auto f = pool.filter_correct();
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].id, "a");
  EXPECT_EQ(f[1].id, "c");
}

TEST(Pool, RoundIds) {
  EXPECT_EQ(round_id("ex7", 2), "ex7#r2");
  EXPECT_EQ(base_id("ex7#r2"), "ex7");
  EXPECT_EQ(base_id("ex7"), "ex7");
  EXPECT_EQ(base_id(round_id(round_id("ex7", 1), 2)), "ex7");
}

TEST(SubsetFromIds, Examples) {
  const auto pool = abc();
  const std::vector<std::string> ac{"a", "c"}, none{}, aa{"a", "a"}, bad{"z"};
  EXPECT_EQ(subset_from_ids(pool, ac).to_string(), "101");
  EXPECT_EQ(subset_from_ids(pool, none).to_string(), "000");
  EXPECT_EQ(subset_from_ids(pool, aa).to_string(), "100");
  try {
    subset_from_ids(pool, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("z"), std::string::npos);
  }
}

TEST(SubsetFromIds, IdExtractionRoundTrip) {
  const auto pool = abc();
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto s = sample_subset(pool.size(), rng);
    const auto ids = ids_of(pool, s);
    EXPECT_EQ(subset_from_ids(pool, ids), s);
  }
}

TEST(SubsetVector, BasicAlgebra) {
  auto s = SubsetVector::from_string("0110");
  EXPECT_EQ(s.cardinality(), 2u);
  EXPECT_EQ(s.indices(), (std::vector<std::size_t>{1, 2}));
  s.flip(0);
  EXPECT_EQ(s.to_string(), "1110");
  EXPECT_EQ(SubsetVector::from_indices(4, std::vector<std::size_t>{3}).to_string(), "0001");
  EXPECT_EQ(hamming_distance(SubsetVector::from_string("1100"),
                             SubsetVector::from_string("1010")),
            2u);
  EXPECT_TRUE(SubsetVector(3).empty_selection());
  EXPECT_EQ(SubsetVector::full(3).to_string(), "111");
}

TEST(SampleSubset, SingletonLattice) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sample_subset(1, rng).to_string(), "1");
}

TEST(SampleSubset, ZeroIsAnError) {
  Rng rng(1);
  EXPECT_THROW(sample_subset(0, rng), Error);
}

TEST(SampleSubset, NeverEmptyAndDeterministic) {
  Rng a(42), b(42);
  for (int i = 0; i < 2000; ++i) {
    const auto s = sample_subset(7, a);
    EXPECT_FALSE(s.empty_selection());
    EXPECT_EQ(s, sample_subset(7, b));
  }
}

// Pearson chi-square against the uniform law on {1,2,3,4}; 16.266 is the
// 0.999 quantile of chi-square with 3 degrees of freedom.
TEST(SampleSubset, CardinalityIsUniform) {
  Rng rng(2024);
  std::array<int, 5> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_subset(4, rng).cardinality()];
  double chi2 = 0.0;
  for (int c = 1; c <= 4; ++c) {
    const double expected = n / 4.0;
    chi2 += (counts[c] - expected) * (counts[c] - expected) / expected;
  }
  EXPECT_LT(chi2, 16.266);
}

// Given the cardinality, all C(m, c) member sets should be equally likely.
TEST(SampleSubset, MembersUniformGivenCardinality) {
  Rng rng(77);
  std::map<std::string, int> counts;
  int total = 0;
  for (int i = 0; i < 60000; ++i) {
    const auto s = sample_subset(4, rng);
    if (s.cardinality() == 2) {
      ++counts[s.to_string()];
      ++total;
    }
  }
  ASSERT_EQ(counts.size(), 6u);
  double chi2 = 0.0;
  for (const auto& [_, c] : counts) {
    const double expected = total / 6.0;
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, 20.515);  // 0.999 quantile, 5 degrees of freedom
}

}  // namespace
}  // namespace bridge
