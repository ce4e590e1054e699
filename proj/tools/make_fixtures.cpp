// Regenerates the packaged record files under data/. Deterministic: the
// same seed always produces byte-identical files, so the packaged data can
// be audited by rerunning this tool.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleepd/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// splitmix64: stable across compilers, unlike <random> distributions.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t below(std::uint64_t bound) { return next() % bound; }
};

const std::vector<std::string> kNames = {
    "Yusuf", "Sofia", "Isabella", "Pavel", "Gabriel", "Amara", "Chen",
    "Leila", "Mateo", "Nadia", "Omar", "Priya", "Ravi", "Tara", "Viktor",
    "Wren", "Zainab", "Kofi", "Mina", "Hugo"};
const std::vector<std::string> kPlaces = {
    "orchard", "workshop", "bakery", "bookshop", "greenhouse", "warehouse",
    "studio", "farm stand", "toy store", "market stall"};
const std::vector<std::string> kItemsA = {
    "crates", "baskets", "boxes", "jars", "bundles", "trays", "sacks",
    "cartons", "bins", "barrels"};
const std::vector<std::string> kItemsB = {
    "apples", "candles", "ribbons", "notebooks", "marbles", "seed packets",
    "postcards", "buttons", "spools", "tiles"};

struct ContextSpec {
  std::string text;
  std::string name;
  std::string item_a;
  std::string item_b;
  std::int64_t n_start, n_per_batch, n_batches, n_value_a, n_value_b, n_sold;
};

ContextSpec make_context(Rng& rng, const std::string& tag, std::size_t index) {
  ContextSpec spec;
  spec.name = kNames[rng.below(kNames.size())];
  std::string place = kPlaces[rng.below(kPlaces.size())];
  spec.item_a = kItemsA[rng.below(kItemsA.size())];
  spec.item_b = kItemsB[rng.below(kItemsB.size())];
  spec.n_start = 5 + static_cast<std::int64_t>(rng.below(40));
  spec.n_per_batch = 3 + static_cast<std::int64_t>(rng.below(12));
  spec.n_batches = 2 + static_cast<std::int64_t>(rng.below(8));
  spec.n_value_a = 2 + static_cast<std::int64_t>(rng.below(9));
  spec.n_value_b = 1 + static_cast<std::int64_t>(rng.below(7));
  spec.n_sold = 1 + static_cast<std::int64_t>(rng.below(5));

  spec.text =
      spec.name + " keeps a " + place + " stocked for the season. The back " +
      "room holds " + std::to_string(spec.n_start) + " " + spec.item_a +
      " of " + spec.item_b + ". A delivery brings " +
      std::to_string(spec.n_per_batch) + " more " + spec.item_a +
      " each week for " + std::to_string(spec.n_batches) + " weeks. Every " +
      spec.item_a.substr(0, spec.item_a.size() - 1) + " is worth " +
      std::to_string(spec.n_value_a) + " tokens at the counter, and a loose " +
      "handful of " + spec.item_b + " is worth " +
      std::to_string(spec.n_value_b) + " tokens. Each week " + spec.name +
      " also sells " + std::to_string(spec.n_sold) + " " + spec.item_a +
      " to regulars. (inventory sheet " + tag + "-" + std::to_string(index) +
      ")";
  return spec;
}

struct Pair {
  std::string question;
  std::int64_t answer;
};

Pair original_question(const ContextSpec& s) {
  return {"How many " + s.item_a + " are in the back room after the " +
              std::to_string(s.n_batches) + " weeks of deliveries, before " +
              "any sales?",
          s.n_start + s.n_per_batch * s.n_batches};
}

Pair generated_question(const ContextSpec& s, int which) {
  switch (which % 9) {
    case 0:
      return {"How many " + s.item_a + " does one week's delivery bring?",
              s.n_per_batch};
    case 1:
      return {"How many " + s.item_a + " arrive across all " +
                  std::to_string(s.n_batches) + " weeks of deliveries?",
              s.n_per_batch * s.n_batches};
    case 2:
      return {"What is the token value of the starting " + s.item_a + "?",
              s.n_start * s.n_value_a};
    case 3:
      return {"How many " + s.item_a + " does " + s.name + " sell to " +
                  "regulars over " + std::to_string(s.n_batches) + " weeks?",
              s.n_sold * s.n_batches};
    case 4:
      return {"If " + s.name + " starts with " + std::to_string(s.n_start) +
                  " " + s.item_a + " and sells " + std::to_string(s.n_sold) +
                  " in the first week, how many remain before the delivery?",
              s.n_start - s.n_sold};
    case 5:
      return {"What is the combined token value of one delivered " +
                  s.item_a.substr(0, s.item_a.size() - 1) +
                  " and one handful of " + s.item_b + "?",
              s.n_value_a + s.n_value_b};
    case 6:
      return {"How many " + s.item_a + " are on hand after the deliveries " +
                  "and all weekly sales?",
              s.n_start + (s.n_per_batch - s.n_sold) * s.n_batches};
    case 7:
      return {"How many tokens are " + std::to_string(s.n_batches) +
                  " handfuls of " + s.item_b + " worth?",
              s.n_value_b * s.n_batches};
    default:
      return {"If the weekly delivery doubled, how many " + s.item_a +
                  " would arrive each week?",
              2 * s.n_per_batch};
  }
}

void write_multi_query(const fs::path& path, const std::string& tag,
                       std::size_t contexts, std::size_t questions,
                       std::uint64_t seed) {
  // One original question per context; generated questions spread so that
  // per-context counts differ by at most one.
  std::size_t generated_total = questions - contexts;
  std::size_t base = generated_total / contexts;
  std::size_t extra = generated_total % contexts;

  Rng rng(seed);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "cannot write " << path << "\n";
    std::exit(1);
  }
  std::size_t questions_written = 0;
  for (std::size_t i = 0; i < contexts; ++i) {
    ContextSpec spec = make_context(rng, tag, i);
    json record;
    record["context_id"] = sleepd::sha256_hex(spec.text);
    record["context"] = spec.text;
    json qs = json::array();
    Pair original = original_question(spec);
    qs.push_back({{"question", original.question},
                  {"answer", original.answer},
                  {"origin", "original"}});
    ++questions_written;
    std::size_t n_generated = base + (i < extra ? 1 : 0);
    for (std::size_t g = 0; g < n_generated; ++g) {
      Pair pair = generated_question(spec, static_cast<int>(g));
      std::string question = pair.question;
      if (g >= 9)  // keep questions unique within a context
        question += " (variant " + std::to_string(g) + ")";
      qs.push_back({{"question", question},
                    {"answer", pair.answer},
                    {"origin", "generated"}});
      ++questions_written;
    }
    record["questions"] = qs;
    out << record.dump() << "\n";
  }
  std::cout << path.string() << ": " << contexts << " contexts, "
            << questions_written << " questions\n";
}

void write_demo(const fs::path& dir, std::uint64_t seed) {
  fs::create_directories(dir);
  Rng rng(seed);

  std::ofstream dataset(dir / "stateful.jsonl", std::ios::trunc);
  std::ofstream script(dir / "script.jsonl", std::ios::trunc);
  for (int i = 0; i < 10; ++i) {
    ContextSpec spec = make_context(rng, "demo", static_cast<std::size_t>(i));
    Pair q = original_question(spec);
    json record;
    record["id"] = "demo-" + std::to_string(i);
    record["context"] = spec.text;
    record["question"] = q.question;
    record["answer"] = q.answer;
    record["predictability_score"] =
        -1.0 - static_cast<double>(rng.below(100)) / 10.0;
    dataset << record.dump() << "\n";

    // Sleep loop: two rethinks then finish, keyed on the loop opener so
    // answer prompts (which carry the same context text) never match.
    const std::string opener = "Begin reorganizing the memory now.";
    std::string derived_marker = "Pre-computed for demo-" + std::to_string(i);
    json rethink1 = {
        {"matcher_substring", opener},
        {"output_kind", "tool_call"},
        {"payload",
         {{"name", "rethink_memory"},
          {"arguments",
           {{"new_memory", "Totals so far: deliveries add " +
                               std::to_string(spec.n_per_batch *
                                              spec.n_batches) +
                               " " + spec.item_a + "."},
            {"target_block_label", "rethink_memory_block"},
            {"source_block_label", "raw_context"}}}}}};
    json rethink2 = {
        {"matcher_substring", opener},
        {"output_kind", "tool_call"},
        {"payload",
         {{"name", "rethink_memory"},
          {"arguments",
           {{"new_memory",
             derived_marker + ": final stock before sales is " +
                 std::to_string(q.answer) + ". The answer to the likely " +
                 "question is " + std::to_string(q.answer) + "."},
            {"target_block_label", "rethink_memory_block"},
            {"source_block_label", "rethink_memory_block"}}}}}};
    json finish = {{"matcher_substring", opener},
                   {"output_kind", "tool_call"},
                   {"payload",
                    {{"name", "finish_rethinking"}, {"arguments", json::object()}}}};
    script << rethink1.dump() << "\n"
           << rethink2.dump() << "\n"
           << finish.dump() << "\n";

    // Answers: the sleep condition is keyed on the derived text, the
    // baseline on the question, so routing is order-independent.
    json sleep_send = {{"matcher_substring", derived_marker},
                       {"output_kind", "tool_call"},
                       {"payload",
                        {{"name", "send_message"},
                         {"arguments",
                          {{"message",
                            "The answer is " + std::to_string(q.answer)}}}}}};
    json base_send = {{"matcher_substring", q.question},
                      {"match_scope", "last"},
                      {"output_kind", "tool_call"},
                      {"payload",
                       {{"name", "send_message"},
                        {"arguments",
                         {{"message",
                           "The answer is " + std::to_string(q.answer)}}}}}};
    script << sleep_send.dump() << "\n" << base_send.dump() << "\n";
  }

  json config;
  config["backend"] = {{"kind", "mock"}, {"script", (dir / "script.jsonl").string()}};
  config["cost"] = {{"test_weight_t", 10.0}};
  config["sleep"] = {{"max_rethink_calls", 10}, {"parallel_k", 1}};
  config["dataset"] = {{"path", (dir / "stateful.jsonl").string()},
                       {"format", "stateful"}};
  config["conditions"] = json::array(
      {{{"name", "baseline-v0"}, {"kind", "answer"}, {"selector", "raw"},
        {"verbosity", 0}},
       {{"name", "sleep-v0"}, {"kind", "answer"},
        {"selector", "latest_derived"}, {"verbosity", 0}}});
  config["analysis"] = {{"bin_count", 5},
                        {"bin_sleep_condition", "sleep-v0"},
                        {"bin_baseline_condition", "baseline-v0"}};
  config["store_dir"] = (dir / "store").string();
  config["output_dir"] = (dir / "out").string();
  std::ofstream config_out(dir / "config.json", std::ios::trunc);
  config_out << config.dump(2) << "\n";
  std::cout << (dir / "config.json").string() << ": demo experiment written\n";
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("data");
  fs::create_directories(root);
  write_multi_query(root / "multiquery_p1.jsonl", "p1", 1095, 12043, 101);
  write_multi_query(root / "multiquery_p2.jsonl", "p2", 500, 5497, 202);
  write_demo(root / "demo", 303);
  return 0;
}
