#pragma once

#include <string>
#include <vector>

#include "sleepd/backend.hpp"

namespace sleepd::prompts {

inline constexpr int kVerbosityLevels = 5;

// Test-time prompt ladder, levels 0-4. Levels 2 and 3 are intentionally the
// same template; selection is a pure function of the level.
const std::string& verbosity_prompt(int level);

// Offline rethink loop system prompt. prompt_id selects an optional
// per-dataset suffix: "default" (none) or "aime". Unknown ids throw
// ConfigError.
std::string sleep_prompt(const std::string& prompt_id);

// Prompt for answering with only the context present: guess the most likely
// next question and answer it.
const std::string& context_only_prompt();

// Instruction for synthesizing additional question/answer pairs about a
// context; answers end with the "####" marker line.
std::string multi_query_generation_prompt(const std::string& context,
                                          const std::string& example_question,
                                          const std::string& example_answer);

// Tool surfaces. The sleep loop exposes the rethink pair; the test loop
// exposes only send_message.
std::vector<ToolSignature> sleep_tools();
std::vector<ToolSignature> test_tools();

inline constexpr const char* kRethinkToolName = "rethink_memory";
inline constexpr const char* kFinishToolName = "finish_rethinking";
// The loop also accepts this alias; both spellings are in circulation.
inline constexpr const char* kFinishToolAlias = "finish_rethinking_memory";
inline constexpr const char* kSendMessageToolName = "send_message";

// System note appended after a malformed tool call, before the single retry.
const std::string& malformed_tool_call_note();

// Nudge appended when an assistant turn produced plain text instead of
// send_message.
const std::string& send_message_nudge();

// Fixed user turn that opens the context-only baseline (contains no query).
const std::string& context_only_user_turn();

// Default contents for the read-only persona/human blocks.
const std::string& default_persona_value();
const std::string& default_human_value();

}  // namespace sleepd::prompts
