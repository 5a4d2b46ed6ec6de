#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "legros/lexseg.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace legros {
namespace {

embedding_table table_of(std::vector<std::string> tokens, std::vector<std::vector<double>> rows) {
  matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return embedding_table(std::move(tokens), std::move(m));
}

vector vec(std::initializer_list<double> v) {
  vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Cosine, ZeroVectorAndClamp) {
  EXPECT_EQ(cosine(vec({0, 0}), vec({1, 2})), 0.0);
  EXPECT_EQ(cosine(vec({3, 4}), vec({6, 8})), 1.0);
  EXPECT_LE(cosine(vec({1e-3, 7}), vec({1e-3, 7})), 1.0);
}

TEST(EmbeddingSegment, SingleCharacter) {
  auto table = table_of({"c"}, {{1, 0}});
  auto r = embedding_segment("c", vec({1, 1}), table, 1.0);
  EXPECT_EQ(r.subwords, segmentation{"c"});
  EXPECT_NEAR(r.score, std::sqrt(0.5) - 1.0, 1e-12);
}

TEST(EmbeddingSegment, PrefersAlignedSubword) {
  auto table = table_of({"a", "b", "ab"}, {{0, 1}, {0, 1}, {1, 0}});
  EXPECT_EQ(embedding_segment("ab", vec({1, 0}), table).subwords, segmentation{"ab"});
  // With alpha = 0 two perfectly aligned characters beat one orthogonal piece.
  EXPECT_EQ(embedding_segment("ab", vec({0, 1}), table, 0.0).subwords,
            (segmentation{"a", "b"}));
}

TEST(EmbeddingSegment, TieBreakFewerSubwords) {
  // Every term is 0 at alpha = 0 for orthogonal vectors.
  auto table = table_of({"a", "b", "ab"}, {{0, 1}, {0, 1}, {0, 1}});
  EXPECT_EQ(embedding_segment("ab", vec({1, 0}), table, 0.0).subwords, segmentation{"ab"});
}

TEST(EmbeddingSegment, MissingCharacterNamed) {
  auto table = table_of({"a"}, {{1}});
  try {
    embedding_segment("ax", vec({1}), table);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.kind(), error_kind::validation);
    EXPECT_NE(std::string(e.what()).find("'x'"), std::string::npos);
  }
}

TEST(EmbeddingSegment, DimensionMismatch) {
  auto table = table_of({"a"}, {{1, 2}});
  EXPECT_THROW(embedding_segment("a", vec({1}), table), error);
}

struct random_case {
  embedding_table table;
  std::vector<std::pair<std::string, vector>> words;
};

random_case make_random_case(std::uint64_t seed, std::size_t n_words) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::vector<std::string> alphabet = {"a", "b", "ł"};
  std::set<std::string> subs(alphabet.begin(), alphabet.end());
  while (subs.size() < 25) {
    std::string s;
    std::size_t len = 2 + rng() % 3;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    subs.insert(s);
  }
  const Eigen::Index dim = 4;
  std::vector<std::string> tokens(subs.begin(), subs.end());
  matrix rows(static_cast<Eigen::Index>(tokens.size()), dim);
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index k = 0; k < dim; ++k) rows(r, k) = normal(rng);
  rows.row(3).setZero();
  random_case c{embedding_table(tokens, rows), {}};
  for (std::size_t w = 0; w < n_words; ++w) {
    std::string word;
    std::size_t len = 1 + rng() % 9;
    for (std::size_t i = 0; i < len; ++i) word += alphabet[rng() % alphabet.size()];
    vector v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v(k) = normal(rng);
    c.words.emplace_back(word, v);
  }
  return c;
}

TEST(EmbeddingSegment, MatchesExhaustiveSearch) {
  auto c = make_random_case(17, 1000);
  for (double alpha : {0.0, 0.3, 1.0}) {
    embedding_segmenter seg(c.table, alpha);
    for (const auto& [word, v] : c.words) {
      auto got = seg.segment(word, v);
      auto want = oracle::brute_embedding_segment(word, v, c.table, alpha);
      ASSERT_TRUE(want);
      EXPECT_EQ(got.subwords, want->subwords) << word;
      EXPECT_EQ(got.score, from_units(want->score)) << word;
    }
  }
}

TEST(EmbeddingSegment, AlphaMonotone) {
  auto c = make_random_case(19, 300);
  for (const auto& [word, v] : c.words) {
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double alpha : {-1.0, -0.25, 0.0, 0.5, 1.0, 2.0, 4.0}) {
      auto n = embedding_segment(word, v, c.table, alpha).subwords.size();
      EXPECT_LE(n, prev) << word << " alpha " << alpha;
      prev = n;
    }
  }
}

TEST(EmbeddingSegment, Pure) {
  auto c = make_random_case(23, 20);
  for (const auto& [word, v] : c.words)
    EXPECT_EQ(embedding_segment(word, v, c.table), embedding_segment(word, v, c.table));
}

struct refine_fixture {
  synthetic::language lang = synthetic::make_language(6, 4, 800, 3);
  synthetic::embedding_setup setup = synthetic::make_embeddings(lang.corpus, 16, 0.1, 5);
  segmented_lexicon initial;

  refine_fixture() {
    auto merges = bpe_train(lang.corpus, charset_of(count_tokens(lang.corpus)).size() + 25);
    initial = bpe_lexicon(setup.vocab, merges);
  }
};

TEST(Refine, ConvergesToFixedPointDeterministically) {
  refine_fixture f;
  refine_options opt;
  std::ostringstream diag;
  auto one = refine(f.initial, f.setup.vocab, f.setup.words, f.setup.counts, f.setup.w_rows, opt,
                    &diag);
  opt.threads = 3;
  auto three = refine(f.initial, f.setup.vocab, f.setup.words, f.setup.counts, f.setup.w_rows, opt);
  EXPECT_EQ(one.lexicon, three.lexicon);
  EXPECT_EQ(one.history, three.history);
  EXPECT_TRUE(one.subword_embeddings == three.subword_embeddings);

  ASSERT_TRUE(one.converged);
  EXPECT_EQ(one.history.back().changed_words, 0u);
  EXPECT_EQ(resegment(one.lexicon, f.setup.words, one.subword_embeddings, opt.alpha), one.lexicon);
  for (const auto& [w, seg] : one.lexicon) EXPECT_EQ(concat(seg), w);

  // Inventory never grows.
  for (std::size_t i = 1; i < one.history.size(); ++i)
    EXPECT_LE(one.history[i].subword_count, one.history[i - 1].subword_count);
  for (std::size_t s = 0; s < one.space.subwords.size(); ++s)
    EXPECT_FALSE(one.space.incidence.row(static_cast<token_id>(s)).empty());

  std::size_t lines = 0;
  std::string line;
  std::istringstream in(diag.str());
  while (std::getline(in, line)) {
    EXPECT_EQ(io::split_char(line, '\t').size(), 3u);
    ++lines;
  }
  EXPECT_EQ(lines, one.history.size());
}

TEST(Refine, WholeWordLexiconIsAlreadyOptimal) {
  refine_fixture f;
  segmented_lexicon whole;
  for (const auto& e : f.setup.vocab.entries()) whole[e.token] = {e.token};
  // Same lambda and ridge as the word solve, so each word's subword row is its own embedding.
  refine_options opt;
  opt.lambda = 0.1;
  auto st = refine(whole, f.setup.vocab, f.setup.words, f.setup.counts, f.setup.w_rows, opt);
  EXPECT_TRUE(st.converged);
  EXPECT_EQ(st.iteration, 1u);
  EXPECT_EQ(st.lexicon, whole);
}

TEST(Refine, IterationCapRespected) {
  refine_fixture f;
  refine_options opt;
  opt.max_iters = 1;
  auto st = refine(f.initial, f.setup.vocab, f.setup.words, f.setup.counts, f.setup.w_rows, opt);
  EXPECT_EQ(st.iteration, 1u);
  EXPECT_EQ(st.history.size(), 2u);
  opt.max_iters = 0;
  EXPECT_THROW(refine(f.initial, f.setup.vocab, f.setup.words, f.setup.counts, f.setup.w_rows, opt),
               error);
}

TEST(SegmentCorpus, OovPolicies) {
  segmented_lexicon lex = {{"undoing", {"un", "do", "ing"}}, {"the", {"the"}}};
  auto run = [&](oov_policy p) {
    std::istringstream in("the undoing zzz\n");
    std::ostringstream out;
    segment_corpus(in, out, lex, p);
    return out.str();
  };
  EXPECT_EQ(run(oov_policy::whole), "the un@@ do@@ ing zzz\n");
  {
    std::istringstream in("undoing the\nthe\n");
    std::ostringstream out;
    segment_corpus(in, out, lex, oov_policy::error);
    std::set<std::string> inventory = {"un", "do", "ing", "the"};
    std::istringstream back(out.str());
    for (const auto& line : io::read_lines(back))
      for (const auto& word : parse_segmented(line))
        for (const auto& s : word) EXPECT_TRUE(inventory.count(s)) << s;
  }
  EXPECT_EQ(run(oov_policy::chars), "the un@@ do@@ ing z@@ z@@ z\n");
  try {
    run(oov_policy::error);
    FAIL();
  } catch (const error& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

}  // namespace
}  // namespace legros
