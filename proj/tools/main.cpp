// coreval: score coreference predictions against gold CoNLL-U, convert
// between CoNLL-U and the one-line-per-document plaintext format, clean raw
// model output, sample word-capped mini splits, and report corpus statistics.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coreval/align.hpp"
#include "coreval/conllu.hpp"
#include "coreval/harness.hpp"
#include "coreval/mention.hpp"
#include "coreval/metrics.hpp"
#include "coreval/report.hpp"
#include "coreval/textcoref.hpp"

namespace {

using namespace coreval;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Document> load_conllu(const std::string& path) {
  std::string text = slurp(path);
  std::istringstream in(text);
  try {
    return parse_conllu(in, std::filesystem::path(path).stem().string());
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<std::string> load_lines(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + out_path + "'");
  out << content;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t pos = csv.find(',', start);
    if (pos == std::string::npos) pos = csv.size();
    if (pos > start) out.push_back(csv.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

struct ScoreArgs {
  std::vector<std::string> files;
  std::string match;
  bool keep_singletons = false;
  std::string zero_match = "dep";
  std::string metrics;
  std::string format = "text";
  std::string out;
};

int run_score(const ScoreArgs& args) {
  if (args.files.size() < 2 || args.files.size() % 2 != 0)
    throw DataError("score expects gold/predicted file pairs");

  ScoreOptions opts;
  opts.zero_mode = args.zero_match == "strict" ? ZeroMode::Strict : ZeroMode::Dependency;
  if (!args.match.empty() || args.keep_singletons) {
    MatchKind kind = MatchKind::Head;
    if (args.match == "partial") kind = MatchKind::Partial;
    if (args.match == "exact") kind = MatchKind::Exact;
    Variant v = Variant::HeadNoSingletons;
    if (args.keep_singletons) {
      if (kind != MatchKind::Head)
        throw DataError("--keep-singletons is reported for head match only");
      v = Variant::HeadWithSingletons;
    } else if (kind == MatchKind::Partial) {
      v = Variant::PartialNoSingletons;
    } else if (kind == MatchKind::Exact) {
      v = Variant::ExactNoSingletons;
    }
    opts.variants = {v};
  }

  std::vector<std::string> metric_filter = split_list(args.metrics);
  std::vector<DatasetResult> results;
  for (std::size_t i = 0; i < args.files.size(); i += 2) {
    std::vector<Document> gold = load_conllu(args.files[i]);
    std::vector<Document> pred = load_conllu(args.files[i + 1]);
    opts.dataset_id = std::filesystem::path(args.files[i]).stem().string();
    results.push_back(score_dataset(gold, pred, opts));
  }

  std::string content;
  if (args.format == "json") {
    ojson out;
    if (results.size() == 1) {
      out = to_json(results[0], metric_filter);
    } else {
      out["schema_version"] = kReportSchemaVersion;
      ojson arr = ojson::array();
      for (const DatasetResult& r : results) arr.push_back(to_json(r, metric_filter));
      out["datasets"] = arr;
      ojson macro = ojson::object();
      for (Variant v : opts.variants) {
        std::vector<double> scores;
        for (const DatasetResult& r : results)
          if (const MetricReport* rep = r.report_for(v)) scores.push_back(rep->conll_f1);
        if (!scores.empty()) macro[std::string(variant_name(v))] = macro_average(scores);
      }
      out["macro"] = macro;
    }
    content = out.dump(2) + "\n";
  } else if (args.format == "tsv") {
    for (const DatasetResult& r : results) content += dataset_result_tsv(r, metric_filter);
  } else {
    for (const DatasetResult& r : results) content += dataset_result_text(r, metric_filter);
    if (results.size() > 1) {
      content += "macro average:\n";
      for (Variant v : opts.variants) {
        std::vector<double> scores;
        for (const DatasetResult& r : results)
          if (const MetricReport* rep = r.report_for(v)) scores.push_back(rep->conll_f1);
        if (!scores.empty())
          content += "  [" + std::string(variant_name(v)) +
                     "]  CoNLL F1 = " + report_detail::fixed(100 * macro_average(scores), 2) + "\n";
      }
    }
  }
  emit(args.out, content);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coreference evaluation and plaintext conversion toolkit"};
  app.require_subcommand(1);

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand("score", "score predicted CoNLL-U against gold");
  score->add_option("files", score_args.files, "gold and predicted files, in pairs")->required();
  score->add_option("--match", score_args.match, "mention matching: head, partial, exact")
      ->check(CLI::IsMember({"head", "partial", "exact"}));
  score->add_flag("--keep-singletons", score_args.keep_singletons, "include singleton entities");
  score->add_option("--zero-match", score_args.zero_match, "zero alignment: dep or strict")
      ->check(CLI::IsMember({"dep", "strict"}));
  score->add_option("--metrics", score_args.metrics, "comma-separated metric subset");
  score->add_option("--format", score_args.format, "output format")
      ->check(CLI::IsMember({"json", "tsv", "text"}));
  score->add_option("--out", score_args.out, "output path (default stdout)");

  CLI::App* convert = app.add_subcommand("convert", "convert between CoNLL-U and plaintext");
  convert->require_subcommand(1);

  std::string tt_input, tt_out;
  bool tt_bare = false, tt_surface = false;
  CLI::App* to_text = convert->add_subcommand("to-text", "CoNLL-U to one line per document");
  to_text->add_option("input", tt_input, "CoNLL-U file")->required();
  to_text->add_flag("--bare", tt_bare, "emit tokens only (no annotations, no empty nodes)");
  to_text->add_flag("--surface-mwt", tt_surface, "emit multiword-token surface forms");
  to_text->add_option("--out", tt_out, "output path");

  std::string tc_input, tc_skeleton, tc_out;
  bool tc_surface = false;
  CLI::App* to_conllu = convert->add_subcommand("to-conllu", "restore plaintext onto a skeleton");
  to_conllu->add_option("input", tc_input, "plaintext file, one line per document")->required();
  to_conllu->add_option("--skeleton", tc_skeleton, "CoNLL-U file providing the token skeleton")
      ->required();
  to_conllu->add_flag("--surface-mwt", tc_surface, "lines use multiword-token surface forms");
  to_conllu->add_option("--out", tc_out, "output path");

  std::string cl_input, cl_skeleton, cl_out;
  CLI::App* clean_cmd = app.add_subcommand("clean", "repair raw model output lines");
  clean_cmd->add_option("input", cl_input, "raw plaintext file, one line per document")->required();
  clean_cmd->add_option("--skeleton", cl_skeleton, "CoNLL-U file providing the token skeleton")
      ->required();
  clean_cmd->add_option("--out", cl_out, "output path");

  std::string sm_input, sm_out;
  long sm_cap = 25000;
  std::uint64_t sm_seed = 0;
  CLI::App* sample = app.add_subcommand("sample-mini", "sample complete documents under a word cap");
  sample->add_option("input", sm_input, "CoNLL-U file")->required();
  sample->add_option("--cap", sm_cap, "word cap (default 25000)");
  sample->add_option("--seed", sm_seed, "RNG seed");
  sample->add_option("--out", sm_out, "output path");

  std::vector<std::string> st_inputs;
  std::string st_format = "text", st_out;
  CLI::App* stats_cmd = app.add_subcommand("stats", "entity and mention statistics");
  stats_cmd->add_option("inputs", st_inputs, "CoNLL-U files")->required();
  stats_cmd->add_option("--format", st_format, "output format")
      ->check(CLI::IsMember({"json", "text"}));
  stats_cmd->add_option("--out", st_out, "output path");

  std::string uf_gold, uf_pred, uf_upos, uf_mode = "entity", uf_format = "text", uf_out;
  CLI::App* upos_cmd = app.add_subcommand("upos-factor", "CoNLL F1 factorized by head UPOS");
  upos_cmd->add_option("gold", uf_gold, "gold CoNLL-U file")->required();
  upos_cmd->add_option("pred", uf_pred, "predicted CoNLL-U file")->required();
  upos_cmd->add_option("--upos", uf_upos, "UPOS tag")->required();
  upos_cmd->add_option("--mode", uf_mode, "entity or mention filtering")
      ->check(CLI::IsMember({"entity", "mention"}));
  upos_cmd->add_option("--format", uf_format, "output format")
      ->check(CLI::IsMember({"json", "text"}));
  upos_cmd->add_option("--out", uf_out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*score) return run_score(score_args);

    if (*to_text) {
      std::vector<Document> docs = load_conllu(tt_input);
      SerializeOptions opts;
      opts.include_annotations = !tt_bare;
      opts.surface_mwt = tt_surface;
      std::string content;
      for (const Document& d : docs) content += serialize(extract_entities(d), opts) + "\n";
      emit(tt_out, content);
      return 0;
    }

    if (*to_conllu) {
      std::vector<std::string> lines = load_lines(tc_input);
      std::vector<Document> skeletons = load_conllu(tc_skeleton);
      if (lines.size() != skeletons.size())
        throw DataError("line count (" + std::to_string(lines.size()) +
                        ") does not match skeleton document count (" +
                        std::to_string(skeletons.size()) + ")");
      DeserializeOptions opts;
      opts.surface_mwt = tc_surface;
      std::vector<Document> restored;
      for (std::size_t i = 0; i < lines.size(); ++i)
        restored.push_back(encode_entities(deserialize(lines[i], skeletons[i], opts)));
      std::ostringstream out;
      write_conllu(restored, out);
      emit(tc_out, out.str());
      return 0;
    }

    if (*clean_cmd) {
      std::vector<std::string> lines = load_lines(cl_input);
      std::vector<Document> skeletons = load_conllu(cl_skeleton);
      if (lines.size() != skeletons.size())
        throw DataError("line count (" + std::to_string(lines.size()) +
                        ") does not match skeleton document count (" +
                        std::to_string(skeletons.size()) + ")");
      std::string content;
      for (std::size_t i = 0; i < lines.size(); ++i)
        content += clean(lines[i], skeletons[i]) + "\n";
      emit(cl_out, content);
      return 0;
    }

    if (*sample) {
      std::vector<Document> docs = load_conllu(sm_input);
      std::vector<Document> kept = sample_mini(docs, sm_cap, sm_seed);
      std::ostringstream out;
      write_conllu(kept, out);
      emit(sm_out, out.str());
      return 0;
    }

    if (*stats_cmd) {
      std::vector<CorefDoc> cds;
      for (const std::string& path : st_inputs)
        for (const Document& d : load_conllu(path)) cds.push_back(extract_entities(d));
      CorpusStats st = corpus_stats(cds);
      emit(st_out, st_format == "json" ? to_json(st).dump(2) + "\n" : corpus_stats_text(st));
      return 0;
    }

    if (*upos_cmd) {
      std::vector<Document> gold = load_conllu(uf_gold);
      std::vector<Document> pred = load_conllu(uf_pred);
      UposMode mode = uf_mode == "mention" ? UposMode::Mention : UposMode::Entity;
      std::optional<double> score_value = upos_factorized_score(gold, pred, uf_upos, mode);
      if (uf_format == "json") {
        ojson out{{"upos", uf_upos}, {"mode", uf_mode}};
        out["conll_f1"] = score_value ? ojson(*score_value) : ojson(nullptr);
        emit(uf_out, out.dump(2) + "\n");
      } else {
        emit(uf_out, score_value ? "conll_f1 " + report_detail::fixed(100 * *score_value, 2) + "\n"
                                 : "absent (no occurrences of " + uf_upos + ")\n");
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
