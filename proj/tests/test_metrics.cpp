#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "legros/metrics.hpp"
#include "support/oracles.hpp"

namespace legros {
namespace {

TEST(Boundaries, Offsets) {
  EXPECT_EQ(boundaries({"un", "do", "ing"}), (std::set<std::size_t>{2, 4}));
  EXPECT_EQ(boundaries({"čaj"}), std::set<std::size_t>{});
  EXPECT_EQ(boundaries({"č", "aj"}), std::set<std::size_t>{1});
}

TEST(BoundaryPrf, Identical) {
  segmented_lexicon gold = {{"undoing", {"un", "do", "ing"}}, {"cat", {"cat"}}};
  auto r = boundary_prf(gold, gold);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(BoundaryPrf, PartialRecall) {
  segmented_lexicon gold = {{"undoing", {"un", "do", "ing"}}};
  segmented_lexicon pred = {{"undoing", {"un", "doing"}}};
  auto r = boundary_prf(pred, gold);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_EQ(r.summary(), "P=1 R=0.5 F1=" + io::format_double(2.0 / 3.0));
}

TEST(BoundaryPrf, Disjoint) {
  segmented_lexicon gold = {{"undoing", {"un", "do", "ing"}}};
  segmented_lexicon pred = {{"undoing", {"und", "oing"}}};
  auto r = boundary_prf(pred, gold);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(BoundaryPrf, KeyMismatchListsWords) {
  segmented_lexicon gold = {{"undoing", {"un", "do", "ing"}}, {"cats", {"cat", "s"}}};
  segmented_lexicon pred = {{"undoing", {"undoing"}}};
  try {
    boundary_prf(pred, gold);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.kind(), error_kind::validation);
    EXPECT_NE(std::string(e.what()).find("cats"), std::string::npos);
  }
}

TEST(BoundaryPrf, RejectsNonSurfaceGold) {
  segmented_lexicon gold = {{"ran", {"run", "ed"}}};
  segmented_lexicon pred = {{"ran", {"ran"}}};
  EXPECT_THROW(boundary_prf(pred, gold), error);
}

segmentation random_split(std::mt19937_64& rng, const std::string& word) {
  auto chars = utf8::split_chars(word);
  segmentation seg{chars[0]};
  for (std::size_t i = 1; i < chars.size(); ++i) {
    if (rng() % 2)
      seg.push_back(chars[i]);
    else
      seg.back() += chars[i];
  }
  return seg;
}

TEST(BoundaryPrf, RandomAgainstOracleAndSymmetry) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 200; ++t) {
    segmented_lexicon a, b;
    std::uint64_t tp = 0, na = 0, nb = 0;
    for (int w = 0; w < 10; ++w) {
      std::string word;
      std::size_t len = 1 + rng() % 8;
      for (std::size_t i = 0; i < len; ++i) word += std::vector<std::string>{"x", "y", "ž"}[rng() % 3];
      if (a.count(word)) continue;
      a[word] = random_split(rng, word);
      b[word] = random_split(rng, word);
      auto sa = oracle::boundary_set(a[word]), sb = oracle::boundary_set(b[word]);
      std::vector<std::size_t> both;
      std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
      tp += both.size();
      na += sa.size();
      nb += sb.size();
    }
    auto ab = boundary_prf(a, b);
    auto ba = boundary_prf(b, a);
    EXPECT_EQ(ab.true_positives, tp);
    EXPECT_EQ(ab.predicted_boundaries, na);
    EXPECT_EQ(ab.gold_boundaries, nb);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.recall, ba.precision);
    for (double v : {ab.precision, ab.recall, ab.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (ab.precision > 0 && ab.recall > 0) {
      EXPECT_GE(ab.f1, std::min(ab.precision, ab.recall) - 1e-15);
      EXPECT_LE(ab.f1, std::max(ab.precision, ab.recall) + 1e-15);
    }
  }
}

TEST(Renyi, UniformIsFullyEfficient) {
  for (std::size_t k : {2u, 3u, 17u}) {
    std::map<std::string, std::uint64_t> freq;
    for (std::size_t i = 0; i < k; ++i) freq["t" + std::to_string(i)] = 5;
    for (double alpha : {0.5, 1.0, 2.5, 5.0})
      EXPECT_NEAR(renyi_efficiency(freq, k, alpha).efficiency, 1.0, 1e-12);
  }
}

TEST(Renyi, SingleType) {
  std::map<std::string, std::uint64_t> freq = {{"a", 9}};
  auto r = renyi_efficiency(freq, 4);
  EXPECT_EQ(r.entropy, 0.0);
  EXPECT_EQ(r.efficiency, 0.0);
  EXPECT_EQ(renyi_efficiency(freq, 1).efficiency, 1.0);
}

TEST(Renyi, HalfAndHalf) {
  std::map<std::string, std::uint64_t> freq = {{"a", 3}, {"b", 3}};
  auto r = renyi_efficiency(freq, 4, 2.5);
  EXPECT_NEAR(r.entropy, std::log(2.0), 1e-12);
  EXPECT_NEAR(r.efficiency, 0.5, 1e-12);
  EXPECT_EQ(r.summary().rfind("H=", 0), 0u);
}

TEST(Renyi, Errors) {
  std::map<std::string, std::uint64_t> freq = {{"a", 3}, {"b", 3}};
  EXPECT_THROW(renyi_efficiency(freq, 4, 0.0), error);
  EXPECT_THROW(renyi_efficiency(freq, 4, -1.0), error);
  EXPECT_THROW(renyi_efficiency(std::map<std::string, std::uint64_t>{}, 4), error);
  EXPECT_THROW(renyi_efficiency(freq, 1), error);
}

TEST(Renyi, MonotoneInAlphaBoundedAndPermutationInvariant) {
  std::mt19937_64 rng(59);
  for (int t = 0; t < 200; ++t) {
    std::size_t k = 1 + rng() % 20;
    std::vector<std::uint64_t> counts(k);
    for (auto& c : counts) c = 1 + rng() % 100;
    std::map<std::string, std::uint64_t> freq, shuffled;
    for (std::size_t i = 0; i < k; ++i) freq["t" + std::to_string(i)] = counts[i];
    std::shuffle(counts.begin(), counts.end(), rng);
    for (std::size_t i = 0; i < k; ++i) shuffled["t" + std::to_string(i)] = counts[i];
    std::uint64_t vocab = k + rng() % 5;
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.5, 1.0, 2.5, 5.0}) {
      auto r = renyi_efficiency(freq, vocab, alpha);
      EXPECT_LE(r.entropy, prev + 1e-12);
      EXPECT_LE(r.efficiency, 1 + 1e-12);
      EXPECT_GE(r.efficiency, 0.0);
      EXPECT_NEAR(renyi_efficiency(shuffled, vocab, alpha).entropy, r.entropy, 1e-12);
      prev = r.entropy;
    }
  }
}

}  // namespace
}  // namespace legros
