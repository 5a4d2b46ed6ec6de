#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>

#include "legros/legros.hpp"

using namespace legros;

namespace {

const char* formats_help = R"(File formats (UTF-8, one record per line):
  corpus      tokens separated by whitespace; lines are context boundaries
  vocab       token<TAB>freq, by descending freq then bytewise token
  counts      "#COOC v1 |V|=<n> window=<w>", then "id1 id2 count" with id1 <= id2
  merges      left<SP>right, in merge order
  lexicon     word<TAB>subword<SP>subword...; subwords concatenate to the word
  embeddings  "<rows> <dim>", then "token v1 ... v<dim>"
  segmented   corpus whose non-final subwords carry the suffix "@@": un@@ do@@ ing
  model       "LEGROS-BIGRAM v1", "|S|=<n> total=<t> maxlen=<m>",
              "#UNIGRAMS" subword<TAB>count, "#BIGRAMS" prev<TAB>next<TAB>count,
              optional "#CONTEXTS" prev<TAB>count
A path of "-" means standard input or standard output.
Exit codes: 0 ok, 2 usage, 3 validation, 4 numerical, 5 I/O.)";

struct options {
  std::size_t threads = 1;

  std::string corpus = "-";
  std::string output = "-";
  std::string vocab, counts, lexicon, merges, embeddings, w_matrix, subwords, model;
  std::string segmented, gold, predicted, diagnostics, subword_output;

  std::size_t max_size = 200000;
  std::uint64_t min_freq = 1;
  std::size_t window = default_window;
  std::size_t bpe_size = 0;
  std::size_t max_len = 0;
  bool no_augment = false;
  double alpha = default_alpha;
  double lambda = default_lambda;
  std::optional<double> ridge;
  std::size_t max_iters = default_max_iters;
  std::size_t beam = default_beam_size;
  bool exact = false;
  std::string oov = "whole";

  double renyi_alpha = default_renyi_alpha;
  std::optional<std::uint64_t> vocab_size;
  bool observed = false;
  bool include_separators = false;
  bool gold_only = false;
};

// Opens `path` for reading, or standard input for "-".
template <typename F>
auto with_input(const std::string& path, F&& f) {
  if (path == "-") return f(std::cin);
  auto in = io::open_input(path);
  try {
    return f(in);
  } catch (const error& e) {
    throw error(e.kind(), path + ": " + e.what());
  }
}

void emit(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  if (path == "-") {
    writer(std::cout);
    std::cout.flush();
    if (!std::cout) throw io_error("write failure on standard output");
    return;
  }
  io::write_atomic(path, writer);
}

oov_policy parse_oov(const std::string& name) {
  if (name == "error") return oov_policy::error;
  if (name == "whole") return oov_policy::whole;
  if (name == "chars") return oov_policy::chars;
  throw argument_error("unknown OOV policy '" + name + "'");
}

matrix aligned_w(const options& o, const vocabulary& vocab) {
  return align_to_vocabulary(load_embeddings(o.w_matrix), vocab).rows();
}

void run_vocab(const options& o) {
  auto vocab = with_input(o.corpus, [&](std::istream& in) {
    return build_vocabulary(in, o.max_size, o.min_freq, o.threads);
  });
  emit(o.output, [&](std::ostream& out) { write_vocabulary(vocab, out); });
}

void run_cooc(const options& o) {
  auto vocab = load_vocabulary(o.vocab);
  auto counts = with_input(o.corpus, [&](std::istream& in) {
    return count_cooccurrences(in, vocab, o.window, o.threads);
  });
  emit(o.output, [&](std::ostream& out) { write_counts(counts, out); });
}

void run_init_bpe(const options& o) {
  auto vocab = load_vocabulary(o.vocab);
  std::unordered_map<std::string, std::uint64_t> words;
  for (const auto& e : vocab.entries()) words[e.token] = e.freq;
  auto merges = bpe_train(words, o.bpe_size);
  if (!o.merges.empty()) save_merges(merges, o.merges);
  auto lexicon = bpe_lexicon(vocab, merges);
  emit(o.output, [&](std::ostream& out) { write_lexicon(lexicon, out); });
}

void run_subword_embed(const options& o) {
  auto vocab = load_vocabulary(o.vocab);
  auto counts = load_counts(o.counts);
  if (o.lexicon.empty() == (o.max_len == 0))
    throw argument_error("give exactly one of --lexicon and --max-len");
  auto space = o.lexicon.empty()
                   ? enumerate_substrings(vocab, o.max_len)
                   : build_segmentation_matrix(load_lexicon(o.lexicon), vocab, !o.no_augment);
  auto w = aligned_w(o, vocab);
  double ridge = o.ridge ? *o.ridge : default_ridge(w);
  auto table = compute_subword_embeddings(space, counts, vocab, w, o.lambda, ridge, o.threads);
  emit(o.output, [&](std::ostream& out) { write_embeddings(table, out); });
}

void run_refine(const options& o) {
  auto vocab = load_vocabulary(o.vocab);
  auto counts = load_counts(o.counts);
  auto lexicon = load_lexicon(o.lexicon);
  auto words = load_embeddings(o.embeddings);
  auto w = aligned_w(o, vocab);
  refine_options opt;
  opt.alpha = o.alpha;
  opt.lambda = o.lambda;
  opt.ridge = o.ridge;
  opt.max_iters = o.max_iters;
  opt.threads = o.threads;

  std::ofstream diag_file;
  std::ostream* diag = &std::cerr;
  if (!o.diagnostics.empty()) {
    diag_file.open(o.diagnostics, std::ios::binary | std::ios::trunc);
    if (!diag_file) throw io_error("cannot open '" + o.diagnostics + "' for writing");
    diag = &diag_file;
  }
  *diag << "iteration\tchanged\tsubwords\n";
  auto state = refine(lexicon, vocab, words, counts, w, opt, diag);
  if (!state.converged)
    std::cerr << "legros: refine stopped after " << state.iteration
              << " iterations without converging\n";
  if (!o.subword_output.empty()) save_embeddings(state.subword_embeddings, o.subword_output);
  emit(o.output, [&](std::ostream& out) { write_lexicon(state.lexicon, out); });
}

void run_segment_embed(const options& o) {
  auto words = load_embeddings(o.embeddings);
  auto table = load_embeddings(o.subwords);
  std::vector<std::string> targets;
  if (o.vocab.empty()) {
    targets = words.tokens();
  } else {
    auto vocab = load_vocabulary(o.vocab);
    for (const auto& e : vocab.entries()) targets.push_back(e.token);
  }
  segmented_lexicon lexicon;
  for (const auto& w : targets) lexicon[w] = {w};
  auto out_lexicon = resegment(lexicon, words, table, o.alpha, o.threads);
  emit(o.output, [&](std::ostream& out) { write_lexicon(out_lexicon, out); });
}

void run_distill(const options& o) {
  bigram_model model;
  if (!o.segmented.empty()) {
    if (!o.lexicon.empty()) throw argument_error("give either --segmented or --lexicon, not both");
    model = with_input(o.segmented, [&](std::istream& in) { return distill(in, o.threads); });
  } else {
    if (o.lexicon.empty()) throw argument_error("distill needs --segmented or --lexicon");
    auto lexicon = load_lexicon(o.lexicon);
    std::ostringstream seg;
    with_input(o.corpus, [&](std::istream& in) {
      segment_corpus(in, seg, lexicon, parse_oov(o.oov));
      return 0;
    });
    std::istringstream in(seg.str());
    model = distill(in, o.threads);
  }
  emit(o.output, [&](std::ostream& out) { write_model(model, out); });
}

void run_segment(const options& o) {
  auto model = load_model(o.model);
  if (o.beam == 0) throw argument_error("--beam must be at least 1");
  std::unordered_map<std::string, segmentation> cache;
  auto segment_type = [&](const std::string& word) -> const segmentation& {
    auto it = cache.find(word);
    if (it != cache.end()) return it->second;
    auto r = o.exact ? exact_segment(word, model) : beam_segment(word, model, o.beam);
    return cache.emplace(word, std::move(r.subwords)).first->second;
  };
  auto lines = with_input(o.corpus, [](std::istream& in) { return io::read_lines(in); });
  emit(o.output, [&](std::ostream& out) {
    std::vector<segmentation> words;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      if (!utf8::is_valid(lines[l]))
        throw validation_error("invalid UTF-8 at line " + std::to_string(l + 1));
      words.clear();
      for (auto tok : io::split_ws(lines[l])) words.push_back(segment_type(std::string(tok)));
      out << format_segmented(words) << '\n';
    }
  });
}

void run_eval_boundaries(const options& o) {
  auto gold = load_lexicon(o.gold);
  auto predicted = load_lexicon(o.predicted);
  if (o.gold_only)
    std::erase_if(predicted, [&](const auto& kv) { return gold.count(kv.first) == 0; });
  auto r = boundary_prf(predicted, gold);
  emit(o.output, [&](std::ostream& out) {
    out << "words\t" << gold.size() << '\n';
    out << "predicted boundaries\t" << r.predicted_boundaries << '\n';
    out << "gold boundaries\t" << r.gold_boundaries << '\n';
    out << "correct boundaries\t" << r.true_positives << '\n';
    out << r.summary() << '\n';
  });
}

void run_eval_renyi(const options& o) {
  int sources = (o.vocab_size ? 1 : 0) + (o.model.empty() ? 0 : 1) + (o.observed ? 1 : 0);
  if (sources != 1)
    throw argument_error("give exactly one of --vocab-size, --model and --observed");
  // Word separators are counted as one extra token type, once per word.
  const std::string separator = " ";
  std::map<std::string, std::uint64_t> freq;
  with_input(o.corpus, [&](std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      io::strip_cr(line);
      if (!utf8::is_valid(line))
        throw validation_error("invalid UTF-8 at line " + std::to_string(line_no));
      for (const auto& word : parse_segmented(line)) {
        for (const auto& s : word) ++freq[s];
        if (o.include_separators) ++freq[separator];
      }
    }
    if (in.bad()) throw io_error("read failure at line " + std::to_string(line_no + 1));
    return 0;
  });
  std::uint64_t size = 0;
  if (o.vocab_size) {
    size = *o.vocab_size;
  } else if (!o.model.empty()) {
    size = load_model(o.model).subword_count() + (o.include_separators ? 1 : 0);
  } else {
    size = freq.size();
  }
  auto r = renyi_efficiency(freq, size, o.renyi_alpha);
  emit(o.output, [&](std::ostream& out) {
    std::uint64_t tokens = 0;
    for (const auto& [s, n] : freq) tokens += n;
    out << "tokens\t" << tokens << '\n';
    out << "types\t" << freq.size() << '\n';
    out << "vocabulary size\t" << size << '\n';
    out << "alpha\t" << io::format_double(r.alpha) << '\n';
    out << r.summary() << '\n';
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subword vocabulary construction and segmentation from word embeddings"};
  app.footer(formats_help);
  app.require_subcommand(1);
  options o;
  app.add_option("--threads", o.threads, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);

  auto corpus_opt = [&](CLI::App* sub, const char* what) {
    sub->add_option("--corpus,--input", o.corpus, what)->capture_default_str();
  };
  auto output_opt = [&](CLI::App* sub, const char* what) {
    sub->add_option("-o,--output", o.output, what)->capture_default_str();
  };
  auto double_opt = [](CLI::App* sub, const char* name, double& v, const char* what) {
    sub->add_option(name, v, what)->capture_default_str();
  };

  auto* vocab = app.add_subcommand("vocab", "Count word types of a corpus into a vocab file");
  corpus_opt(vocab, "Corpus");
  output_opt(vocab, "Vocab file");
  vocab->add_option("--max-size", o.max_size, "Keep at most this many types")->capture_default_str();
  vocab->add_option("--min-freq", o.min_freq, "Drop types rarer than this")->capture_default_str();

  auto* cooc = app.add_subcommand("cooc", "Count word co-occurrences within a window");
  corpus_opt(cooc, "Corpus");
  output_opt(cooc, "Counts file");
  cooc->add_option("--vocab", o.vocab, "Vocab file")->required();
  cooc->add_option("--window", o.window, "Context window radius")->capture_default_str();

  auto* init = app.add_subcommand("init-bpe", "Train BPE on the vocab and write the initial lexicon");
  output_opt(init, "Lexicon file");
  init->add_option("--vocab", o.vocab, "Vocab file")->required();
  init->add_option("--size", o.bpe_size, "Target BPE vocabulary size")->required();
  init->add_option("--merges", o.merges, "Also write the merge list here");

  auto* embed = app.add_subcommand("subword-embed", "Solve subword embeddings from co-occurrences");
  output_opt(embed, "Subword embeddings file");
  embed->add_option("--vocab", o.vocab, "Vocab file")->required();
  embed->add_option("--counts", o.counts, "Counts file")->required();
  embed->add_option("--w", o.w_matrix, "Output matrix W as an embeddings file")->required();
  embed->add_option("--lexicon", o.lexicon, "Subwords from this lexicon");
  embed->add_option("--max-len", o.max_len, "Subwords are all substrings up to this length");
  embed->add_flag("--no-char-augment", o.no_augment, "Do not add missing characters as subwords");
  double_opt(embed, "--lambda", o.lambda, "Co-occurrence smoothing");
  embed->add_option("--ridge", o.ridge, "Ridge term (default 1e-6 * |W|_F^2 / dim)");

  auto* ref = app.add_subcommand("refine", "Alternate subword embedding and re-segmentation");
  output_opt(ref, "Refined lexicon file");
  ref->add_option("--vocab", o.vocab, "Vocab file")->required();
  ref->add_option("--counts", o.counts, "Counts file")->required();
  ref->add_option("--lexicon", o.lexicon, "Initial lexicon")->required();
  ref->add_option("--embeddings", o.embeddings, "Word embeddings E")->required();
  ref->add_option("--w", o.w_matrix, "Output matrix W as an embeddings file")->required();
  ref->add_option("--subword-output", o.subword_output, "Write the final subword embeddings here");
  ref->add_option("--diagnostics", o.diagnostics, "Per-iteration table (default stderr)");
  double_opt(ref, "--alpha", o.alpha, "Per-subword penalty");
  double_opt(ref, "--lambda", o.lambda, "Co-occurrence smoothing");
  ref->add_option("--ridge", o.ridge, "Ridge term (default 1e-6 * |W|_F^2 / dim)");
  ref->add_option("--max-iters", o.max_iters, "Iteration cap")->capture_default_str();

  auto* seg_embed = app.add_subcommand("segment-embed", "Segment words by embedding similarity");
  output_opt(seg_embed, "Lexicon file");
  seg_embed->add_option("--embeddings", o.embeddings, "Word embeddings E")->required();
  seg_embed->add_option("--subwords", o.subwords, "Subword embeddings")->required();
  seg_embed->add_option("--vocab", o.vocab, "Words to segment (default: every row of E)");
  double_opt(seg_embed, "--alpha", o.alpha, "Per-subword penalty");

  auto* dist = app.add_subcommand("distill", "Count subword bigrams of a segmented corpus");
  output_opt(dist, "Model file");
  corpus_opt(dist, "Corpus to segment with --lexicon");
  dist->add_option("--segmented", o.segmented, "Already segmented corpus");
  dist->add_option("--lexicon", o.lexicon, "Lexicon applied to --corpus");
  dist->add_option("--oov", o.oov, "Words missing from the lexicon: error, whole or chars")
      ->capture_default_str();

  auto* seg = app.add_subcommand("segment", "Segment text with a bigram model");
  corpus_opt(seg, "Text to segment");
  output_opt(seg, "Segmented text");
  seg->add_option("--model", o.model, "Model file")->required();
  seg->add_option("--beam", o.beam, "Beam size")->capture_default_str();
  seg->add_flag("--exact", o.exact, "Exact search instead of beam search");

  auto* eb = app.add_subcommand("eval-boundaries", "Morpheme boundary precision and recall");
  output_opt(eb, "Report");
  eb->add_option("--gold", o.gold, "Gold lexicon")->required();
  eb->add_option("--predicted", o.predicted, "Predicted lexicon")->required();
  eb->add_flag("--gold-only", o.gold_only, "Ignore predicted words absent from the gold lexicon");

  auto* er = app.add_subcommand("eval-renyi", "Renyi efficiency of segmented text");
  er->add_option("tokens", o.corpus, "Segmented text")->capture_default_str();
  output_opt(er, "Report");
  double_opt(er, "--alpha", o.renyi_alpha, "Renyi order");
  er->add_option("--vocab-size", o.vocab_size, "Declared vocabulary size");
  er->add_option("--model", o.model, "Take the vocabulary size from this model");
  er->add_flag("--observed", o.observed, "Use the number of observed types");
  er->add_flag("--include-separators", o.include_separators,
               "Count one word-separator token per word (excluded by default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(error_kind::argument);
  }

  try {
    if (*vocab) run_vocab(o);
    else if (*cooc) run_cooc(o);
    else if (*init) run_init_bpe(o);
    else if (*embed) run_subword_embed(o);
    else if (*ref) run_refine(o);
    else if (*seg_embed) run_segment_embed(o);
    else if (*dist) run_distill(o);
    else if (*seg) run_segment(o);
    else if (*eb) run_eval_boundaries(o);
    else if (*er) run_eval_renyi(o);
  } catch (const error& e) {
    std::cerr << "legros: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    std::cerr << "legros: out of memory\n";
    return static_cast<int>(error_kind::internal);
  }
  return 0;
}
