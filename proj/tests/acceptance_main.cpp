// Acceptance suite: one criterion per check, one pass/fail line each, all
// runnable against the deterministic mock backend. Exits nonzero if any
// criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepd/config.hpp"
#include "sleepd/datasets.hpp"
#include "sleepd/evaluation.hpp"
#include "sleepd/harness.hpp"
#include "sleepd/hash.hpp"
#include "sleepd/memory.hpp"
#include "sleepd/mock_backend.hpp"
#include "sleepd/sleep.hpp"
#include "sleepd/store.hpp"
#include "sleepd/test_time.hpp"

using namespace sleepd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw CheckFailure(message);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& hint) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sleepd-accept-" + hint + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

using Scripted = MockBackend::ScriptedOutput;

Scripted rethink_call(const std::string& value) {
  json args{{"new_memory", value},
            {"target_block_label", "rethink_memory_block"}};
  return Scripted::make_tool_call("rethink_memory", args.dump());
}

Scripted finish_call() {
  return Scripted::make_tool_call("finish_rethinking", "{}");
}

Scripted send_call(const std::string& message) {
  json args{{"message", message}};
  return Scripted::make_tool_call("send_message", args.dump());
}

MockBackend::Matcher any_of(const std::string& needle) {
  return {MockBackend::Matcher::Scope::any_message, needle};
}
MockBackend::Matcher last_of(const std::string& needle) {
  return {MockBackend::Matcher::Scope::last_message, needle};
}

// ---------------------------------------------------------------------------
// 1. Rethink cap
// ---------------------------------------------------------------------------
void criterion_rethink_cap() {
  auto start = std::chrono::steady_clock::now();

  MockBackend mock;
  std::vector<Scripted> outputs;
  for (int i = 1; i <= 15; ++i)
    outputs.push_back(rethink_call("pass " + std::to_string(i)));
  mock.script(any_of("capped context"), outputs);

  SleepConfig config;  // max_rethink_calls defaults to 10
  DerivedContext derived = run_sleep("capped context body", config, mock);

  require(derived.provenance.applied_rethinks == 10,
          "expected exactly 10 applied rethinks, got " +
              std::to_string(derived.provenance.applied_rethinks));
  require(derived.audit.size() == 10,
          "expected audit trail length 10, got " +
              std::to_string(derived.audit.size()));
  require(derived.provenance.termination == SleepTermination::cap_reached,
          "expected cap_reached termination");
  require(derived.value == "pass 10", "final value must be the 10th write");

  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - start)
                     .count();
  require(elapsed < 1000,
          "runtime " + std::to_string(elapsed) + "ms exceeds 1s");
}

// ---------------------------------------------------------------------------
// 2. Reference-semantics equivalence
// ---------------------------------------------------------------------------
// Straight-line mirror of the reference tool listings: create-if-absent,
// replace value, finish stops everything. No read-only or limit logic, so
// the generated sequences target only writable labels.
struct ReferenceMirror {
  std::map<std::string, std::string> blocks;
  bool finished = false;
  int applied = 0;

  void rethink(const std::string& target, const std::string& value) {
    if (finished) return;
    if (target.empty()) return;  // the "is not None" guard
    blocks[target] = value;      // create-if-absent + update collapse
    ++applied;
  }
  void finish() {
    if (!finished) finished = true;
  }
};

void criterion_reference_equivalence() {
  std::mt19937_64 rng(20240417);
  const std::vector<std::string> targets = {"rethink_memory_block", "scratch",
                                            "notes", "draft", "summary", ""};
  int mismatches = 0;

  for (int trial = 0; trial < 1000; ++trial) {
    MemoryState state;
    state.add_block({kPersonaLabel, "P", true, std::nullopt});
    state.add_block({kHumanLabel, "H", true, std::nullopt});
    state.add_block({kRethinkBlockLabel, "", false, std::nullopt});
    ReferenceMirror mirror;
    mirror.blocks[kRethinkBlockLabel] = "";

    int ops = 1 + static_cast<int>(rng() % 20);
    for (int op = 0; op < ops; ++op) {
      if (rng() % 8 == 0) {
        try {
          state = apply_finish(state);
        } catch (const Error&) {
        }
        mirror.finish();
      } else {
        const std::string& target = targets[rng() % targets.size()];
        std::string value = "v" + std::to_string(rng() % 10000);
        RethinkCall call;
        call.new_memory = value;
        call.target_label = target;
        call.step_index = op + 1;
        try {
          state = apply_rethink(state, call);
        } catch (const Error&) {
        }
        mirror.rethink(target, value);
      }
    }

    bool equal = state.finished() == mirror.finished &&
                 state.rethink_count() == mirror.applied;
    for (const auto& [label, value] : mirror.blocks) {
      if (!state.has_block(label) || state.block(label).value != value)
        equal = false;
    }
    for (const std::string& label : targets) {
      if (label.empty()) continue;
      if (state.has_block(label) != (mirror.blocks.count(label) != 0))
        equal = false;
    }
    if (!equal) ++mismatches;
  }
  require(mismatches == 0,
          std::to_string(mismatches) + " of 1000 sequences mismatched");
}

// ---------------------------------------------------------------------------
// 3. Substitution exclusivity (end-to-end)
// ---------------------------------------------------------------------------
void criterion_substitution_exclusivity() {
  TempDir dir("subst");
  ContextStore store(dir.path);
  MockBackend mock;

  const std::string raw_context =
      "RAW_TOKEN_A17: the silo holds 144 bushels and loses 12 per month.";
  mock.script(any_of("RAW_TOKEN_A17"),
              {rethink_call("DERIVED_SUMMARY: net stock after a year is 0; "
                            "monthly loss 12; start 144."),
               finish_call()});
  mock.script(last_of("how many bushels"), {send_call("The answer is 144")});

  std::string id = store.put_context(raw_context);
  DerivedContext derived = run_sleep(raw_context, {}, mock);
  require(derived.context_id == id, "content hash mismatch");
  store.attach_derived(id, derived);

  std::string resolved = store.resolve(id, Selector::latest_derived);
  Budget budget;
  Answer result = answer("how many bushels were there at the start?",
                         resolved, ContextKind::derived, budget, mock);
  require(result.numeric == Rational::from_int(144), "wrong answer parsed");

  bool checked_answer_request = false;
  for (const MockBackend::LogEntry& entry : mock.log()) {
    if (entry.request.messages.back().text.find("how many bushels") ==
        std::string::npos)
      continue;
    checked_answer_request = true;
    bool has_derived = false;
    for (const Message& message : entry.request.messages) {
      require(message.text.find("RAW_TOKEN_A17") == std::string::npos,
              "raw context leaked into the test-time prompt");
      if (message.text.find("DERIVED_SUMMARY") != std::string::npos)
        has_derived = true;
    }
    require(has_derived, "derived context missing from the test-time prompt");
  }
  require(checked_answer_request, "answer request not found in the mock log");
}

// ---------------------------------------------------------------------------
// 4. Cost model
// ---------------------------------------------------------------------------
void criterion_cost_model() {
  std::mt19937_64 rng(512);
  CostModel model;  // t = 10 default
  require(model.test_weight_t == 10.0, "default t must be 10");

  for (int trial = 0; trial < 50; ++trial) {
    UsageLedger ledger;
    std::uint64_t sleep_sum = 0, test_sum = 0;
    int entries = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < entries; ++i) {
      Usage usage;
      usage.prompt_tokens = rng() % 100;
      usage.completion_tokens = rng() % 1000;
      usage.reasoning_tokens = rng() % 300;
      bool is_sleep = rng() % 2 == 0;
      (is_sleep ? sleep_sum : test_sum) +=
          usage.completion_tokens + usage.reasoning_tokens;
      ledger.append({is_sleep ? Phase::sleep : Phase::test, "c", std::nullopt,
                     usage});
    }
    double expected = static_cast<double>(sleep_sum) +
                      model.test_weight_t * static_cast<double>(test_sum);
    require(weighted_cost(ledger, model) == expected,
            "weighted_cost mismatch on trial " + std::to_string(trial));

    // amortization against the same hand formula
    int n = 1 + static_cast<int>(rng() % 10);
    std::vector<Usage> tests;
    std::uint64_t per_query_total = 0;
    for (int q = 0; q < n; ++q) {
      Usage usage;
      usage.completion_tokens = rng() % 500;
      usage.reasoning_tokens = rng() % 100;
      per_query_total += usage.completion_tokens + usage.reasoning_tokens;
      tests.push_back(usage);
    }
    Usage sleep_usage;
    sleep_usage.completion_tokens = rng() % 2000;
    double expected_amortized =
        (static_cast<double>(sleep_usage.completion_tokens) +
         model.test_weight_t * static_cast<double>(per_query_total)) /
        static_cast<double>(n);
    require(amortized_cost_per_query(sleep_usage, tests, model) ==
                expected_amortized,
            "amortized cost mismatch on trial " + std::to_string(trial));
  }

  // monotone decrease in N for fixed per-query test usage
  Usage sleep_usage;
  sleep_usage.completion_tokens = 1000;
  double previous = 0.0;
  for (int n = 1; n <= 10; ++n) {
    std::vector<Usage> tests;
    for (int q = 0; q < n; ++q) {
      Usage usage;
      usage.completion_tokens = 100;
      tests.push_back(usage);
    }
    double cost = amortized_cost_per_query(sleep_usage, tests, model);
    if (n > 1)
      require(cost < previous,
              "amortized cost must strictly decrease at N=" +
                  std::to_string(n));
    previous = cost;
  }
}

// ---------------------------------------------------------------------------
// 5. Pareto frontier vs brute force
// ---------------------------------------------------------------------------
std::vector<ParetoPoint> pareto_oracle(const std::vector<ParetoPoint>& points) {
  std::vector<ParetoPoint> survivors;
  for (const ParetoPoint& p : points) {
    bool dominated = false;
    for (const ParetoPoint& q : points) {
      bool weak = q.avg_test_tokens <= p.avg_test_tokens &&
                  q.accuracy >= p.accuracy;
      bool strict =
          q.avg_test_tokens < p.avg_test_tokens || q.accuracy > p.accuracy;
      if (weak && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) survivors.push_back(p);
  }
  std::sort(survivors.begin(), survivors.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.avg_test_tokens != b.avg_test_tokens)
                return a.avg_test_tokens < b.avg_test_tokens;
              if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
              return a.condition < b.condition;
            });
  std::vector<ParetoPoint> deduped;
  for (const ParetoPoint& p : survivors) {
    if (!deduped.empty() &&
        deduped.back().avg_test_tokens == p.avg_test_tokens &&
        deduped.back().accuracy == p.accuracy)
      continue;
    deduped.push_back(p);
  }
  return deduped;
}

void criterion_pareto() {
  std::mt19937_64 rng(9090);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng() % 1000;
    std::vector<ParetoPoint> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      points.push_back({static_cast<double>(rng() % 400),
                        static_cast<double>(rng() % 101) / 100.0,
                        "c" + std::to_string(i)});
    std::vector<ParetoPoint> got = pareto_frontier(points);
    std::vector<ParetoPoint> want = pareto_oracle(points);
    require(got.size() == want.size(),
            "frontier size mismatch on trial " + std::to_string(trial));
    for (std::size_t i = 0; i < got.size(); ++i) {
      require(got[i].avg_test_tokens == want[i].avg_test_tokens &&
                  got[i].accuracy == want[i].accuracy &&
                  got[i].condition == want[i].condition,
              "frontier element mismatch on trial " + std::to_string(trial));
    }
  }
}

// ---------------------------------------------------------------------------
// 6. Splitter golden tests
// ---------------------------------------------------------------------------
void criterion_splitter() {
  struct Golden {
    std::string context;
    std::string query;
  };
  const std::vector<Golden> goldens = {
      {"Alice and Bob play the following game. A stack of $n$ tokens lies "
       "before them. The players take turns with Alice going first. On each "
       "turn, the player removes either $1$ token or $4$ tokens from the "
       "stack. Whoever removes the last token wins.",
       "Find the number of positive integers $n$ less than or equal to "
       "$2024$ for which there exists a strategy for Bob that guarantees "
       "that Bob will win the game regardless of Alice's play."},
      {"Let $A$ , $B$ , $C$ , and $D$ be points on the hyperbola "
       "$\\frac{x^2}{20}- \\frac{y^2}{24} = 1$ such that $ABCD$ is a rhombus "
       "whose diagonals intersect at the origin.",
       "Find the greatest real number that is less than $BD^2$ for all such "
       "rhombi."},
      {"Let \\(b\\ge 2\\) be an integer. Call a positive integer \\(n\\) "
       "\\(b\\text-\\textit{eautiful}\\) if it has exactly two digits when "
       "expressed in base \\(b\\) and these two digits sum to \\(\\sqrt "
       "n\\). For example, \\(81\\) is \\(13\\text-\\textit{eautiful}\\) "
       "because \\(81 = \\underline{6} \\ \\underline{3}_{13} \\) and \\(6 "
       "+ 3 = \\sqrt{81}\\).",
       "Find the least integer \\(b\\ge 2\\) for which there are more than "
       "ten \\(b\\text-\\textit{eautiful}\\) integers."},
  };
  for (std::size_t i = 0; i < goldens.size(); ++i) {
    SplitResult split =
        split_statements(goldens[i].context + " " + goldens[i].query);
    require(split.context == goldens[i].context,
            "golden " + std::to_string(i) + ": context mismatch");
    require(split.question == goldens[i].query,
            "golden " + std::to_string(i) + ": query mismatch");
  }

  // round-trip property on 1000 synthetic multi-sentence problems
  std::mt19937_64 rng(606);
  const std::vector<std::string> heads = {"A vat contains", "Pavel stacks",
                                          "The ledger lists", "A kiln fires",
                                          "Nadia sorts"};
  const std::vector<std::string> tails = {
      "How many are left?", "What is the total?", "Find the ratio.",
      "How many hours pass?", "What is the final count?"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string problem;
    int sentences = 1 + static_cast<int>(rng() % 6);
    for (int s = 0; s < sentences; ++s)
      problem += heads[rng() % heads.size()] + " " +
                 std::to_string(rng() % 900) + " units. ";
    problem += tails[rng() % tails.size()];

    SplitResult first = split_statements(problem);
    std::string rejoined = first.context.empty()
                               ? first.question
                               : first.context + " " + first.question;
    SplitResult second = split_statements(rejoined);
    require(second.context == first.context &&
                second.question == first.question,
            "round-trip failed on trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------
// 7. pass@k semantics
// ---------------------------------------------------------------------------
void criterion_pass_at_k() {
  std::mt19937_64 rng(1717);
  for (int trial = 0; trial < 200; ++trial) {
    int k = 1 + static_cast<int>(rng() % 5);
    std::int64_t truth = static_cast<std::int64_t>(rng() % 8);
    std::vector<std::int64_t> values;
    std::vector<Scripted> outputs;
    std::uint64_t expected_completion = 0;
    for (int i = 0; i < k; ++i) {
      values.push_back(static_cast<std::int64_t>(rng() % 8));
      std::string message = "The answer is " + std::to_string(values.back());
      expected_completion += count_tokens_proxy(message);
      outputs.push_back(send_call(message));
    }

    MockBackend mock;
    std::string question = "trial " + std::to_string(trial) + " question?";
    mock.script(last_of(question), outputs);

    Budget budget;
    budget.sample_k = static_cast<std::uint32_t>(k);
    PassAtKResult result =
        pass_at_k_evaluate(question, "ctx", ContextKind::raw, budget,
                           Rational::from_int(truth), mock);

    bool any_match = false;
    for (std::int64_t v : values) any_match = any_match || v == truth;
    require(result.correct == any_match,
            "pass@k correctness mismatch on trial " + std::to_string(trial));
    require(result.usage.completion_tokens == expected_completion,
            "pass@k usage mismatch on trial " + std::to_string(trial));

    // monotone in k over sample prefixes
    bool prev = false;
    for (int prefix = 1; prefix <= k; ++prefix) {
      bool correct = false;
      for (int i = 0; i < prefix; ++i)
        if (values[static_cast<std::size_t>(i)] == truth) correct = true;
      require(!prev || correct, "monotonicity violated");
      prev = correct;
    }
  }
}

// ---------------------------------------------------------------------------
// 8. F1 metric
// ---------------------------------------------------------------------------
void criterion_f1() {
  {
    FileSetScore score = swe_file_f1({"a", "b", "c"}, {"b", "c", "d"});
    require(score.precision == 2.0 / 3.0 && score.recall == 2.0 / 3.0,
            "overlap example: precision/recall must be 2/3");
    require(score.f1 == 2.0 / 3.0, "overlap example: f1 must be 2/3");
    FileSetScore same = swe_file_f1({"x", "y"}, {"x", "y"});
    require(same.precision == 1.0 && same.recall == 1.0 && same.f1 == 1.0,
            "identical sets must score 1.0");
    FileSetScore none = swe_file_f1({"p"}, {"q"});
    require(none.precision == 0.0 && none.recall == 0.0 && none.f1 == 0.0,
            "disjoint sets must score 0.0");
  }

  std::mt19937_64 rng(888);
  for (int trial = 0; trial < 500; ++trial) {
    std::set<std::string> predicted, truth;
    int np = static_cast<int>(rng() % 10);
    int nt = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < np; ++i)
      predicted.insert("f" + std::to_string(rng() % 15));
    for (int i = 0; i < nt; ++i)
      truth.insert("f" + std::to_string(rng() % 15));

    std::size_t overlap = 0;
    for (const std::string& f : predicted) overlap += truth.count(f);
    double precision =
        predicted.empty() ? 0.0
                          : static_cast<double>(overlap) /
                                static_cast<double>(predicted.size());
    double recall =
        static_cast<double>(overlap) / static_cast<double>(truth.size());
    double f1 = precision + recall == 0.0
                    ? 0.0
                    : 2 * precision * recall / (precision + recall);

    FileSetScore score = swe_file_f1(predicted, truth);
    require(score.precision == precision && score.recall == recall &&
                score.f1 == f1,
            "f1 mismatch on trial " + std::to_string(trial));
  }
}

// ---------------------------------------------------------------------------
// 9. Quintile binning
// ---------------------------------------------------------------------------
void criterion_binning() {
  std::mt19937_64 rng(4321);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 1 + static_cast<int>(rng() % 60);
    int bins = 5;
    std::vector<ScoredId> scored;
    for (int i = 0; i < n; ++i)
      scored.push_back({"id" + std::to_string(i),
                        static_cast<double>(rng() % 25)});
    std::map<std::string, int> assignment =
        assign_predictability_bins(scored, bins);

    std::vector<int> sizes(5, 0);
    for (const auto& [id, bin] : assignment) {
      require(bin >= 0 && bin < bins, "bin out of range");
      ++sizes[static_cast<std::size_t>(bin)];
    }
    int lo = n, hi = 0;
    for (int b = 0; b < bins; ++b) {
      lo = std::min(lo, sizes[static_cast<std::size_t>(b)]);
      hi = std::max(hi, sizes[static_cast<std::size_t>(b)]);
    }
    require(hi - lo <= 1, "bin sizes differ by more than 1");

    // ordering respects scores with stable id tie-break
    std::vector<ScoredId> sorted = scored;
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoredId& a, const ScoredId& b) {
                if (a.score != b.score) return a.score < b.score;
                return a.id < b.id;
              });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      require(assignment.at(sorted[i - 1].id) <= assignment.at(sorted[i].id),
              "bin assignment does not respect the sorted order");

    // stability: identical input permuted gives identical assignment
    std::shuffle(scored.begin(), scored.end(), rng);
    require(assign_predictability_bins(scored, bins) == assignment,
            "assignment is not permutation-invariant");
  }
}

// ---------------------------------------------------------------------------
// 10. Determinism & resumability
// ---------------------------------------------------------------------------
// Sleep-loop outputs are keyed on the loop's fixed opening turn, which
// never appears in answer prompts; the sleep-condition answer is keyed on
// the derived text (only visible in that condition's prompt) and the
// baseline answer on the question. Routing is therefore independent of
// completion order, which interrupted runs rely on.
void write_fixture(const fs::path& dir, int examples) {
  std::ostringstream dataset, sleep_rules, answer_rules;
  const std::string opener = "Begin reorganizing the memory now.";
  for (int i = 0; i < examples; ++i) {
    std::string marker = "depot-" + std::to_string(i);
    std::string question = "How many pallets sit in " + marker + "?";
    int truth = 20 + i;
    std::string derived_text = marker + " holds " + std::to_string(truth);
    dataset << json{{"id", "fx" + std::to_string(i)},
                    {"context", "The " + marker + " stores " +
                                    std::to_string(truth) + " pallets."},
                    {"question", question},
                    {"answer", truth}}
                   .dump()
            << "\n";

    sleep_rules << json{{"matcher_substring", opener},
                        {"output_kind", "tool_call"},
                        {"payload",
                         {{"name", "rethink_memory"},
                          {"arguments",
                           {{"new_memory", derived_text},
                            {"target_block_label",
                             "rethink_memory_block"}}}}}}
                       .dump()
                << "\n"
                << json{{"matcher_substring", opener},
                        {"output_kind", "tool_call"},
                        {"payload",
                         {{"name", "finish_rethinking"},
                          {"arguments", json::object()}}}}
                       .dump()
                << "\n";

    int baseline_value = i % 3 == 0 ? truth + 5 : truth;
    answer_rules << json{{"matcher_substring", derived_text},
                         {"output_kind", "tool_call"},
                         {"payload",
                          {{"name", "send_message"},
                           {"arguments",
                            {{"message",
                              "The answer is " + std::to_string(truth)}}}}}}
                        .dump()
                 << "\n"
                 << json{{"matcher_substring", question},
                         {"match_scope", "last"},
                         {"output_kind", "tool_call"},
                         {"payload",
                          {{"name", "send_message"},
                           {"arguments",
                            {{"message",
                              "The answer is " +
                                  std::to_string(baseline_value)}}}}}}
                        .dump()
                 << "\n";
  }
  std::ofstream(dir / "dataset.jsonl") << dataset.str();
  std::ofstream(dir / "script.jsonl")
      << sleep_rules.str() << answer_rules.str();
}

ExperimentConfig fixture_config(const fs::path& dir) {
  ExperimentConfig config;
  config.backend.kind = "mock";
  config.backend.script_path = (dir / "script.jsonl").string();
  config.dataset.path = (dir / "dataset.jsonl").string();
  config.dataset.format = "stateful";
  Condition baseline;
  baseline.name = "baseline-v0";
  baseline.kind = ConditionKind::answer;
  baseline.selector = "raw";
  Condition sleep_cond;
  sleep_cond.name = "sleep-v0";
  sleep_cond.kind = ConditionKind::answer;
  sleep_cond.selector = "latest_derived";
  config.conditions = {baseline, sleep_cond};
  config.store_dir = (dir / "store").string();
  config.output_dir = (dir / "out").string();
  return config;
}

void run_fixture_sleep(const ExperimentConfig& config, ContextStore& store,
                       Backend& backend) {
  StatefulDataset dataset = load_stateful(config.dataset.path);
  std::vector<std::string> contexts;
  for (const StatefulExample& example : dataset.examples)
    contexts.push_back(example.context);
  SleepBatchSummary summary =
      run_sleep_batch(config, backend, store, contexts);
  require(summary.failures == 0, "fixture sleep batch failed");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::multiset<std::string> record_set(const std::string& records_file) {
  std::multiset<std::string> keys;
  for (const ResultRecord& record : load_result_records(records_file)) {
    keys.insert(record.condition + "|" + record.example_id + "|" +
                (record.correct ? "1" : "0") + "|" +
                std::to_string(record.test_tokens) + "|" +
                (record.numeric ? record.numeric->to_string() : "none"));
  }
  return keys;
}

void criterion_determinism_resume() {
  // run A: complete sweep
  TempDir dir_a("det-a");
  write_fixture(dir_a.path, 20);
  ExperimentConfig config_a = fixture_config(dir_a.path);
  {
    auto backend = make_backend(config_a.backend);
    ContextStore store(config_a.store_dir);
    run_fixture_sleep(config_a, store, *backend);
    EvalRunSummary summary = run_eval(config_a, *backend, store);
    require(summary.complete && summary.completed_now == 40,
            "run A did not complete 40 pairs");
    emit_eval_reports(config_a,
                      load_result_records(records_path(config_a.output_dir)),
                      config_a.output_dir);
  }

  // run B: identical fixture in a fresh directory
  TempDir dir_b("det-b");
  write_fixture(dir_b.path, 20);
  ExperimentConfig config_b = fixture_config(dir_b.path);
  {
    auto backend = make_backend(config_b.backend);
    ContextStore store(config_b.store_dir);
    run_fixture_sleep(config_b, store, *backend);
    run_eval(config_b, *backend, store);
    emit_eval_reports(config_b,
                      load_result_records(records_path(config_b.output_dir)),
                      config_b.output_dir);
  }

  for (const char* report : {"accuracy.csv", "pareto.csv"}) {
    std::string a = slurp(fs::path(config_a.output_dir) / report);
    std::string b = slurp(fs::path(config_b.output_dir) / report);
    require(!a.empty() && a == b,
            std::string(report) + " differs between identical runs");
  }

  // run C: interrupted halfway, then resumed against one live backend
  {
    TempDir dir_d("det-c");
    write_fixture(dir_d.path, 20);
    ExperimentConfig config_d = fixture_config(dir_d.path);
    auto backend = make_backend(config_d.backend);
    ContextStore store(config_d.store_dir);
    run_fixture_sleep(config_d, store, *backend);
    EvalRunSummary first = run_eval(config_d, *backend, store, 20);
    require(!first.complete && first.completed_now == 20,
            "interrupted run should stop at 20 pairs");
    EvalRunSummary second = run_eval(config_d, *backend, store);
    require(second.complete && second.completed_now == 20,
            "resume should complete the remaining 20 pairs");

    std::multiset<std::string> resumed =
        record_set(records_path(config_d.output_dir));
    std::multiset<std::string> uninterrupted =
        record_set(records_path(config_a.output_dir));
    require(resumed == uninterrupted,
            "resumed record set differs from the uninterrupted run");
  }
}

// ---------------------------------------------------------------------------
// 11. Dataset stats
// ---------------------------------------------------------------------------
void criterion_dataset_stats(const fs::path& data_dir) {
  fs::path p1 = data_dir / "multiquery_p1.jsonl";
  fs::path p2 = data_dir / "multiquery_p2.jsonl";
  require(fs::exists(p1), "missing packaged file: " + p1.string());
  require(fs::exists(p2), "missing packaged file: " + p2.string());

  LoadReport r1 = load_report(p1.string(), DatasetFormat::multi_query);
  require(r1.questions == 12043 && r1.contexts == 1095,
          "P1 reported " + std::to_string(r1.questions) + " questions / " +
              std::to_string(r1.contexts) + " contexts, expected 12043/1095");
  LoadReport r2 = load_report(p2.string(), DatasetFormat::multi_query);
  require(r2.questions == 5497 && r2.contexts == 500,
          "P2 reported " + std::to_string(r2.questions) + " questions / " +
              std::to_string(r2.contexts) + " contexts, expected 5497/500");
}

}  // namespace

int main(int argc, char** argv) {
  fs::path data_dir = "data";
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--data-dir" && i + 1 < argc)
      data_dir = argv[i + 1];
  }

  struct Criterion {
    int number;
    std::string name;
    std::function<void()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "rethink cap stops at 10 applications",
       [] { criterion_rethink_cap(); }},
      {2, "reference-semantics equivalence over 1000 sequences",
       [] { criterion_reference_equivalence(); }},
      {3, "substitution exclusivity end-to-end",
       [] { criterion_substitution_exclusivity(); }},
      {4, "cost model exactness and amortization monotonicity",
       [] { criterion_cost_model(); }},
      {5, "pareto frontier equals the brute-force oracle",
       [] { criterion_pareto(); }},
      {6, "splitter golden examples and round-trip",
       [] { criterion_splitter(); }},
      {7, "pass@k semantics, monotonicity, usage sums",
       [] { criterion_pass_at_k(); }},
      {8, "file-set F1 matches brute force", [] { criterion_f1(); }},
      {9, "quintile binning invariants", [] { criterion_binning(); }},
      {10, "determinism and resumability of the eval sweep",
       [] { criterion_determinism_resume(); }},
      {11, "packaged dataset statistics",
       [&data_dir] { criterion_dataset_stats(data_dir); }},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    try {
      criterion.run();
      std::cout << "[PASS] " << criterion.number << ". " << criterion.name
                << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] " << criterion.number << ". " << criterion.name
                << ": " << e.what() << "\n";
    }
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed"
                              : "acceptance: " + std::to_string(failures) +
                                    " criterion(s) failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}
