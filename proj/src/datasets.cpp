#include "sleepd/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "sleepd/prompts.hpp"

namespace sleepd {

namespace {

using nlohmann::json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::string trim(const std::string& text) {
  std::size_t begin = 0, end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return text.substr(begin, end - begin);
}

const std::vector<std::string>& abbreviation_guards() {
  static const std::vector<std::string> guards = {"e.g.", "i.e.", "Mr.",
                                                  "Dr.", "vs."};
  return guards;
}

// The whitespace-delimited token ending at (and including) position i,
// with leading opening punctuation stripped.
std::string token_ending_at(const std::string& text, std::size_t i) {
  std::size_t begin = i;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  while (begin < i && (text[begin] == '(' || text[begin] == '[' ||
                       text[begin] == '"' || text[begin] == '\''))
    ++begin;
  return text.substr(begin, i - begin + 1);
}

bool is_terminal(char c) { return c == '.' || c == '?' || c == '!'; }
bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']';
}

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the closing punctuation run
};

std::vector<Span> statement_boundaries(const std::string& text) {
  std::vector<Span> spans;
  std::size_t start = 0;
  while (start < text.size() && is_space(text[start])) ++start;

  std::size_t i = start;
  while (i < text.size()) {
    if (!is_terminal(text[i])) {
      ++i;
      continue;
    }
    std::size_t punct = i;
    std::size_t j = i;
    while (j < text.size() && is_terminal(text[j])) ++j;
    std::size_t run_end = j;
    while (run_end < text.size() && is_closer(text[run_end])) ++run_end;
    bool boundary = run_end == text.size() || is_space(text[run_end]);

    if (boundary) {
      // Abbreviation guard applies to a lone '.' ending a guarded token.
      std::string token = token_ending_at(text, j - 1);
      for (const std::string& guard : abbreviation_guards()) {
        if (token == guard) {
          boundary = false;
          break;
        }
      }
    }
    if (!boundary) {
      i = punct + 1;
      continue;
    }
    spans.push_back({start, run_end});
    i = run_end;
    while (i < text.size() && is_space(text[i])) ++i;
    start = i;
  }
  if (start < text.size()) {
    // Trailing fragment without terminal punctuation counts as a statement.
    std::size_t end = text.size();
    while (end > start && is_space(text[end - 1])) --end;
    if (end > start) spans.push_back({start, end});
  }
  return spans;
}

json parse_record_line(const std::string& path, int line_no,
                       const std::string& line) {
  try {
    json j = json::parse(line);
    if (!j.is_object())
      throw Error(Errc::SchemaViolation,
                  path + ":" + std::to_string(line_no) +
                      ": record is not an object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaViolation,
                path + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

std::string require_string(const json& j, const char* key,
                           const std::string& where) {
  if (!j.contains(key) || !j[key].is_string())
    throw Error(Errc::SchemaViolation,
                where + ": missing or non-string field \"" + key + "\"");
  return j[key].get<std::string>();
}

// Answers in the record files may be numbers or strings.
std::pair<std::string, std::optional<Rational>> read_answer(
    const json& j, const std::string& where) {
  if (!j.contains("answer"))
    throw Error(Errc::SchemaViolation, where + ": missing field \"answer\"");
  const json& a = j["answer"];
  if (a.is_number_integer()) {
    std::int64_t v = a.get<std::int64_t>();
    return {std::to_string(v), Rational::from_int(v)};
  }
  if (a.is_string()) {
    std::string text = a.get<std::string>();
    return {text, Rational::parse(text)};
  }
  if (a.is_number_float()) {
    std::ostringstream out;
    out << a.get<double>();
    return {out.str(), Rational::parse(out.str())};
  }
  throw Error(Errc::SchemaViolation, where + ": answer must be number or string");
}

void for_each_line(const std::string& path,
                   const std::function<void(int, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open dataset: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fn(line_no, line);
  }
}

}  // namespace

bool StatefulExample::aime_format() const {
  auto it = meta.find("aime_format");
  return it != meta.end() && (it->second == "true" || it->second == "1");
}

std::vector<std::string> statement_spans(const std::string& problem) {
  std::vector<std::string> out;
  for (const Span& span : statement_boundaries(problem))
    out.push_back(problem.substr(span.begin, span.end - span.begin));
  return out;
}

SplitResult split_statements(const std::string& problem,
                             const std::optional<SplitOverride>& override_) {
  if (override_) {
    return SplitResult{override_->context, override_->question,
                       /*overridden=*/true};
  }
  if (trim(problem).empty())
    throw Error(Errc::NoStatement, "problem text is empty");

  std::vector<Span> spans = statement_boundaries(problem);
  bool has_terminal = false;
  for (char c : problem)
    if (is_terminal(c)) has_terminal = true;
  if (spans.empty() || !has_terminal)
    throw Error(Errc::NoStatement,
                "no sentence-final punctuation found and no override given");

  SplitResult result;
  const Span& last = spans.back();
  result.question =
      trim(problem.substr(last.begin, last.end - last.begin));
  if (spans.size() == 1) {
    result.context = "";  // single-statement problems have an empty context
    return result;
  }
  const Span& penultimate = spans[spans.size() - 2];
  result.context = trim(problem.substr(0, penultimate.end));
  return result;
}

StatefulDataset load_stateful(const std::string& path) {
  StatefulDataset dataset;
  std::set<std::string> seen_ids;
  for_each_line(path, [&](int line_no, const std::string& line) {
    std::string where = path + ":" + std::to_string(line_no);
    json j = parse_record_line(path, line_no, line);
    StatefulExample example;
    example.id = require_string(j, "id", where);
    if (example.id.empty())
      throw Error(Errc::SchemaViolation, where + ": empty id");
    if (!seen_ids.insert(example.id).second)
      throw Error(Errc::DuplicateId, where + ": duplicate id " + example.id);
    example.context = require_string(j, "context", where);
    example.question = require_string(j, "question", where);
    if (example.question.empty())
      throw Error(Errc::SchemaViolation, where + ": empty question");
    auto [text, value] = read_answer(j, where);
    example.answer_text = text;
    example.answer = value;
    if (j.contains("predictability_score") &&
        !j["predictability_score"].is_null()) {
      if (!j["predictability_score"].is_number())
        throw Error(Errc::SchemaViolation,
                    where + ": predictability_score must be a number");
      example.predictability_score = j["predictability_score"].get<double>();
    }
    if (j.contains("meta")) {
      if (!j["meta"].is_object())
        throw Error(Errc::SchemaViolation, where + ": meta must be an object");
      for (auto it = j["meta"].begin(); it != j["meta"].end(); ++it) {
        example.meta[it.key()] = it.value().is_string()
                                     ? it.value().get<std::string>()
                                     : it.value().dump();
      }
    }
    if (example.aime_format() &&
        (!example.answer || !example.answer->is_integer()))
      throw Error(Errc::SchemaViolation,
                  where + ": aime_format answers must be integers");
    dataset.examples.push_back(std::move(example));
  });
  dataset.report.contexts = dataset.examples.size();
  dataset.report.questions = dataset.examples.size();
  return dataset;
}

MultiQueryDataset load_multi_query(const std::string& path) {
  MultiQueryDataset dataset;
  std::set<std::string> seen_ids;
  for_each_line(path, [&](int line_no, const std::string& line) {
    std::string where = path + ":" + std::to_string(line_no);
    json j = parse_record_line(path, line_no, line);
    MultiQueryContext record;
    record.context_id = require_string(j, "context_id", where);
    if (!seen_ids.insert(record.context_id).second)
      throw Error(Errc::DuplicateId,
                  where + ": duplicate context_id " + record.context_id);
    record.context = require_string(j, "context", where);
    if (record.context.empty())
      throw Error(Errc::SchemaViolation, where + ": empty context");
    if (!j.contains("questions") || !j["questions"].is_array() ||
        j["questions"].empty())
      throw Error(Errc::SchemaViolation,
                  where + ": questions must be a nonempty array");
    int originals = 0;
    for (const json& q : j["questions"]) {
      MultiQueryQuestion question;
      question.question = require_string(q, "question", where);
      if (question.question.empty())
        throw Error(Errc::SchemaViolation, where + ": empty question");
      auto [text, value] = read_answer(q, where);
      question.answer_text = text;
      question.answer = value;
      std::string origin = require_string(q, "origin", where);
      if (origin == "original") {
        question.origin = QuestionOrigin::original;
        ++originals;
      } else if (origin == "generated") {
        question.origin = QuestionOrigin::generated;
      } else {
        throw Error(Errc::SchemaViolation,
                    where + ": origin must be original|generated");
      }
      record.questions.push_back(std::move(question));
    }
    if (originals != 1)
      throw Error(Errc::SchemaViolation,
                  where + ": expected exactly one origin=original question, got " +
                      std::to_string(originals));
    dataset.contexts.push_back(std::move(record));
  });
  dataset.report.contexts = dataset.contexts.size();
  for (const MultiQueryContext& c : dataset.contexts)
    dataset.report.questions += c.questions.size();
  return dataset;
}

LoadReport load_report(const std::string& path, DatasetFormat format) {
  if (format == DatasetFormat::stateful) return load_stateful(path).report;
  return load_multi_query(path).report;
}

GenerationResult parse_generated_pairs(
    const std::string& transcript,
    const std::vector<std::string>& existing_questions) {
  // Paragraphs separated by blank lines, consumed as (question, answer)
  // pairs; the answer paragraph must carry a "####" marker line.
  std::vector<std::string> paragraphs;
  {
    std::istringstream in(transcript);
    std::string line, current;
    auto flush = [&] {
      std::string trimmed = trim(current);
      if (!trimmed.empty()) paragraphs.push_back(trimmed);
      current.clear();
    };
    while (std::getline(in, line)) {
      if (trim(line).empty())
        flush();
      else
        current += (current.empty() ? "" : "\n") + line;
    }
    flush();
  }

  GenerationResult result;
  std::set<std::string> seen(existing_questions.begin(),
                             existing_questions.end());
  for (std::size_t i = 0; i + 1 < paragraphs.size(); i += 2) {
    const std::string& question = paragraphs[i];
    const std::string& answer = paragraphs[i + 1];
    std::size_t marker = answer.rfind("####");
    if (question.find("####") != std::string::npos ||
        marker == std::string::npos) {
      ++result.dropped;
      continue;
    }
    std::string tail = trim(answer.substr(marker + 4));
    std::optional<Rational> value = Rational::parse(tail);
    if (!value) {
      ++result.dropped;
      continue;
    }
    if (!seen.insert(question).second) {
      ++result.dropped;
      continue;
    }
    GeneratedPair pair;
    pair.question = question;
    pair.answer_text = answer;
    pair.answer = value;
    result.pairs.push_back(std::move(pair));
  }
  if (paragraphs.size() % 2 == 1) ++result.dropped;
  return result;
}

GenerationResult generate_multi_queries(
    const std::string& context, const std::string& example_question,
    const std::string& example_answer, int n, Backend& backend,
    const std::vector<std::string>& existing_questions,
    const RetryPolicy& retry) {
  std::string prompt = prompts::multi_query_generation_prompt(
      context, example_question, example_answer);
  prompt += "\nGenerate " + std::to_string(n) + " question and answer pairs.\n";

  ChatRequest request;
  request.messages.push_back({Role::user, prompt});
  ChatResponse response;
  try {
    response = complete_with_retries(backend, request, retry);
  } catch (const Error& e) {
    throw Error(Errc::BackendFailure,
                std::string("generation call failed: ") + e.what());
  }
  if (response.outputs.empty() ||
      response.outputs.front().kind != Output::Kind::text)
    throw Error(Errc::ParseFailure, "generation returned no text output");

  std::vector<std::string> existing = existing_questions;
  existing.push_back(example_question);
  GenerationResult result =
      parse_generated_pairs(response.outputs.front().text, existing);
  if (result.pairs.empty())
    throw Error(Errc::ParseFailure,
                "zero question/answer pairs recovered from generation output");
  return result;
}

std::map<std::string, int> assign_predictability_bins(
    std::vector<ScoredId> scored, int bins) {
  if (bins < 1)
    throw Error(Errc::ConfigError, "bins must be >= 1");
  std::sort(scored.begin(), scored.end(),
            [](const ScoredId& a, const ScoredId& b) {
              if (a.score != b.score) return a.score < b.score;
              return a.id < b.id;
            });
  std::map<std::string, int> out;
  std::size_t n = scored.size();
  std::size_t base = bins > 0 ? n / static_cast<std::size_t>(bins) : 0;
  std::size_t extra = bins > 0 ? n % static_cast<std::size_t>(bins) : 0;
  std::size_t cursor = 0;
  for (int b = 0; b < bins; ++b) {
    std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
    for (std::size_t k = 0; k < size && cursor < n; ++k, ++cursor)
      out[scored[cursor].id] = b;
  }
  return out;
}

std::map<std::string, int> assign_predictability_bins(
    const std::vector<StatefulExample>& examples, int bins) {
  std::vector<ScoredId> scored;
  scored.reserve(examples.size());
  for (const StatefulExample& example : examples) {
    if (!example.predictability_score)
      throw Error(Errc::MissingScore,
                  "example lacks predictability_score: " + example.id);
    scored.push_back({example.id, *example.predictability_score});
  }
  return assign_predictability_bins(std::move(scored), bins);
}

FileSetScore swe_file_f1(const std::set<std::string>& predicted,
                         const std::set<std::string>& truth) {
  if (truth.empty())
    throw Error(Errc::EmptyTruth, "truth file set must be nonempty");
  std::size_t overlap = 0;
  for (const std::string& f : predicted)
    if (truth.count(f)) ++overlap;

  FileSetScore score;
  score.precision = predicted.empty()
                        ? 0.0
                        : static_cast<double>(overlap) /
                              static_cast<double>(predicted.size());
  score.recall =
      static_cast<double>(overlap) / static_cast<double>(truth.size());
  score.f1 = (score.precision + score.recall) == 0.0
                 ? 0.0
                 : 2.0 * score.precision * score.recall /
                       (score.precision + score.recall);
  return score;
}

std::vector<SweRecord> load_swe_records(const std::string& path) {
  std::vector<SweRecord> records;
  std::set<std::string> seen;
  for_each_line(path, [&](int line_no, const std::string& line) {
    std::string where = path + ":" + std::to_string(line_no);
    json j = parse_record_line(path, line_no, line);
    SweRecord record;
    record.pr_id = require_string(j, "pr_id", where);
    if (!seen.insert(record.pr_id).second)
      throw Error(Errc::DuplicateId, where + ": duplicate pr_id");
    for (const char* key : {"predicted_files", "truth_files"}) {
      if (!j.contains(key) || !j[key].is_array())
        throw Error(Errc::SchemaViolation,
                    where + ": missing array field \"" + key + "\"");
    }
    for (const json& f : j["predicted_files"])
      record.predicted_files.insert(f.get<std::string>());
    for (const json& f : j["truth_files"])
      record.truth_files.insert(f.get<std::string>());
    if (record.truth_files.empty())
      throw Error(Errc::EmptyTruth, where + ": truth_files is empty");
    records.push_back(std::move(record));
  });
  return records;
}

}  // namespace sleepd
