#include "sleepd/sleep.hpp"

#include <chrono>
#include <future>
#include <sstream>

#include <json.hpp>

#include "sleepd/hash.hpp"
#include "sleepd/prompts.hpp"

namespace sleepd {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

MemoryState initial_sleep_state(const std::string& context) {
  MemoryState state;
  state.add_block({kPersonaLabel, prompts::default_persona_value(),
                   /*read_only=*/true, std::nullopt});
  state.add_block({kHumanLabel, prompts::default_human_value(),
                   /*read_only=*/true, std::nullopt});
  // The raw context stays visible as a read-only block for the whole loop.
  state.add_block({kRawContextLabel, context, /*read_only=*/true,
                   std::nullopt});
  state.add_block({kRethinkBlockLabel, "", /*read_only=*/false, std::nullopt});
  return state;
}

std::string system_text(const MemoryState& state,
                        const std::string& prompt_id) {
  return prompts::sleep_prompt(prompt_id) + "\n\n" +
         render_memory(state, {kPersonaLabel, kHumanLabel, kRawContextLabel,
                               kRethinkBlockLabel});
}

std::string tool_call_repr(const ToolCall& call) {
  return "[tool call] " + call.name + " " + call.arguments_json;
}

struct ParsedRethink {
  RethinkCall call;
  bool ok = false;
};

ParsedRethink parse_rethink_arguments(const std::string& arguments_json,
                                      int step_index) {
  ParsedRethink parsed;
  nlohmann::json args;
  try {
    args = nlohmann::json::parse(arguments_json);
  } catch (const nlohmann::json::exception&) {
    return parsed;
  }
  if (!args.is_object()) return parsed;
  if (!args.contains("new_memory") || !args["new_memory"].is_string())
    return parsed;
  if (!args.contains("target_block_label") ||
      !args["target_block_label"].is_string())
    return parsed;
  parsed.call.new_memory = args["new_memory"].get<std::string>();
  parsed.call.target_label = args["target_block_label"].get<std::string>();
  if (args.contains("source_block_label") &&
      args["source_block_label"].is_string())
    parsed.call.source_label = args["source_block_label"].get<std::string>();
  parsed.call.step_index = step_index;
  parsed.ok = true;
  return parsed;
}

}  // namespace

const char* sleep_termination_name(SleepTermination t) {
  switch (t) {
    case SleepTermination::finished: return "finished";
    case SleepTermination::cap_reached: return "cap_reached";
    case SleepTermination::stalled: return "stalled";
    case SleepTermination::malformed: return "malformed";
  }
  return "finished";
}

std::optional<SleepTermination> sleep_termination_from_name(
    const std::string& name) {
  if (name == "finished") return SleepTermination::finished;
  if (name == "cap_reached") return SleepTermination::cap_reached;
  if (name == "stalled") return SleepTermination::stalled;
  if (name == "malformed") return SleepTermination::malformed;
  return std::nullopt;
}

DerivedContext run_sleep(const std::string& context, const SleepConfig& config,
                         Backend& backend, const RetryPolicy& retry) {
  if (context.empty())
    throw Error(Errc::ConfigError, "sleep requires a nonempty context");

  MemoryState state = initial_sleep_state(context);
  std::vector<Message> conversation{
      {Role::user, "Begin reorganizing the memory now."}};

  DerivedContext result;
  result.context_id = sha256_hex(context);
  result.provenance.config = config;
  result.provenance.termination = SleepTermination::finished;

  int consecutive_text = 0;
  int consecutive_malformed = 0;

  while (true) {
    if (state.rethink_count() >= config.max_rethink_calls) {
      result.provenance.termination = SleepTermination::cap_reached;
      break;
    }

    ChatRequest request;
    request.messages.push_back({Role::system,
                                system_text(state, config.prompt_id)});
    request.messages.insert(request.messages.end(), conversation.begin(),
                            conversation.end());
    request.tools = prompts::sleep_tools();
    request.effort = config.effort;
    request.max_output_tokens = config.max_output_tokens;

    ChatResponse response;
    try {
      response = complete_with_retries(backend, request, retry);
    } catch (const Error& e) {
      throw Error(Errc::BackendFailure,
                  std::string("sleep loop backend call failed: ") + e.what());
    }
    result.provenance.usage += response.usage;
    if (response.outputs.empty())
      throw Error(Errc::BackendFailure, "backend returned no outputs");
    const Output& output = response.outputs.front();

    if (output.kind == Output::Kind::text) {
      ++consecutive_text;
      if (consecutive_text >= 2) {
        result.provenance.termination = SleepTermination::stalled;
        break;
      }
      conversation.push_back({Role::assistant, output.text});
      continue;
    }

    consecutive_text = 0;
    const ToolCall& call = output.call;
    if (call.name == prompts::kFinishToolName ||
        call.name == prompts::kFinishToolAlias) {
      state = apply_finish(state);
      result.provenance.termination = SleepTermination::finished;
      break;
    }

    bool malformed = false;
    if (call.name == prompts::kRethinkToolName) {
      ParsedRethink parsed =
          parse_rethink_arguments(call.arguments_json,
                                  state.rethink_count() + 1);
      if (parsed.ok) {
        try {
          state = apply_rethink(state, parsed.call);
          AuditRecord record;
          record.step_index = parsed.call.step_index;
          record.target_label = parsed.call.target_label;
          record.source_label = parsed.call.source_label;
          record.value = parsed.call.new_memory;
          record.timestamp_ms = now_ms();
          result.audit.push_back(std::move(record));
          consecutive_malformed = 0;
          conversation.push_back({Role::assistant, tool_call_repr(call)});
          conversation.push_back(
              {Role::tool,
               "rethink_memory applied (" +
                   std::to_string(state.rethink_count()) + "/" +
                   std::to_string(config.max_rethink_calls) + ")"});
          continue;
        } catch (const Error&) {
          malformed = true;
        }
      } else {
        malformed = true;
      }
    } else {
      malformed = true;  // unknown tool
    }

    if (malformed) {
      ++consecutive_malformed;
      if (consecutive_malformed >= 2) {
        result.provenance.termination = SleepTermination::malformed;
        break;
      }
      // One corrective re-prompt, then abort on the next failure.
      conversation.push_back({Role::assistant, tool_call_repr(call)});
      conversation.push_back({Role::system,
                              prompts::malformed_tool_call_note()});
    }
  }

  result.value = state.block(kRethinkBlockLabel).value;
  result.provenance.applied_rethinks = state.rethink_count();
  result.created_at_ms = now_ms();
  return result;
}

std::vector<SleepRunOutcome> run_sleep_parallel(const std::string& context,
                                                const SleepConfig& config,
                                                Backend& backend,
                                                const RetryPolicy& retry) {
  int k = config.parallel_k < 1 ? 1 : config.parallel_k;
  std::vector<SleepRunOutcome> outcomes(static_cast<std::size_t>(k));

  auto run_one = [&](int index) {
    SleepRunOutcome outcome;
    outcome.parallel_index = index;
    try {
      DerivedContext derived = run_sleep(context, config, backend, retry);
      derived.provenance.parallel_index = index;
      outcome.derived = std::move(derived);
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    return outcome;
  };

  int window = config.concurrency < 1 ? 1 : config.concurrency;
  if (window == 1) {
    for (int i = 0; i < k; ++i) outcomes[static_cast<std::size_t>(i)] = run_one(i);
    return outcomes;
  }

  for (int start = 0; start < k; start += window) {
    int end = start + window < k ? start + window : k;
    std::vector<std::future<SleepRunOutcome>> futures;
    for (int i = start; i < end; ++i)
      futures.push_back(
          std::async(std::launch::async, [&run_one, i] { return run_one(i); }));
    for (int i = start; i < end; ++i)
      outcomes[static_cast<std::size_t>(i)] =
          futures[static_cast<std::size_t>(i - start)].get();
  }
  return outcomes;
}

std::string concat_derived(const std::vector<DerivedContext>& parts) {
  if (parts.empty())
    throw Error(Errc::MixedContexts, "concat_derived requires parts");
  const std::string& id = parts.front().context_id;
  for (const DerivedContext& part : parts) {
    if (part.context_id != id)
      throw Error(Errc::MixedContexts,
                  "derived parts span different contexts: " + id + " vs " +
                      part.context_id);
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out << "\n";
    out << "=== derived context " << (i + 1) << " of " << parts.size()
        << " ===\n"
        << parts[i].value;
  }
  return out.str();
}

}  // namespace sleepd
