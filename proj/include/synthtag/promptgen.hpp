// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "synthtag/dataset.hpp"

namespace synthtag::promptgen {

inline constexpr std::string_view kSystemPrompt =
    "You are a music expert writing short textual descriptions for songs.";
inline constexpr double kTemperature = 0.5;
inline constexpr std::string_view kDefaultModel = "gpt-3.5-turbo";

struct LlmRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = kTemperature;
  std::string model_name;
};

/// Throws UnknownGenre.
LlmRequest build_llm_request(const std::string& genre, std::string model_name = std::string(kDefaultModel));

/// "{genre} {genre} {description}", description kept verbatim. Throws EmptyDescription.
std::string build_musicgen_prompt(const std::string& genre, const std::string& description);

/// "{genre}-{index:05}"
std::string record_id(const std::string& genre, int index);

struct PromptRecord {
  std::string id;
  std::string genre;
  std::string llm_description;
  std::string musicgen_prompt;
  std::string created_at;  ///< ISO-8601 UTC

  bool operator==(const PromptRecord&) const = default;
};

nlohmann::json to_json(const PromptRecord& record);
PromptRecord prompt_record_from_json(const nlohmann::json& j);

/// Reads a JSON Lines corpus; a missing file is an empty corpus. A torn
/// final line (interrupted write) is ignored.
std::vector<PromptRecord> read_corpus(const std::filesystem::path& file);

enum class ReplyStatus { Ok, Transient, Permanent, Quota };

struct ChatReply {
  ReplyStatus status = ReplyStatus::Ok;
  std::string text;    ///< assistant message on success
  std::string detail;  ///< failure description otherwise
};

/// Chat-completion service. Implementations must be callable from several
/// threads at once.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatReply complete(const LlmRequest& request) = 0;
};

/// OpenAI-compatible HTTP client: POST {base_url}/chat/completions.
class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(std::string base_url, std::string api_key,
                 std::chrono::seconds timeout = std::chrono::seconds(60));
  /// Reads LLM_API_BASE_URL and LLM_API_KEY. Throws ClientError when unset.
  static std::unique_ptr<HttpChatClient> from_environment();

  ChatReply complete(const LlmRequest& request) override;

  /// Maps an HTTP status and body to a reply; exposed for tests.
  static ChatReply interpret(int http_status, const std::string& body);

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_prefix_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int max_attempts = 6;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{30000};

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay(int retry) const;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using LogFn = std::function<void(const std::string&)>;

struct CorpusOptions {
  std::vector<std::string> genres;  ///< empty means the full taxonomy
  int n_per_genre = 1000;
  std::string model_name = std::string(kDefaultModel);
  RetryPolicy retry;
  int max_in_flight = 4;
  Sleeper sleeper;                     ///< defaults to std::this_thread::sleep_for
  std::function<std::string()> clock;  ///< defaults to the UTC wall clock
  LogFn log;
};

struct CorpusResult {
  std::vector<PromptRecord> records;  ///< full corpus file content
  std::size_t generated = 0;
  std::size_t skipped = 0;  ///< ids already present
  std::size_t retries = 0;
};

/// Fills `corpus_file` until it holds n_per_genre records per genre,
/// skipping ids already present. Every record is appended and flushed as soon
/// as it arrives, so an aborted run leaves a valid partial corpus. Throws
/// ClientError (permanent failure or exhausted retries) or QuotaExceeded.
CorpusResult generate_prompt_corpus(const std::filesystem::path& corpus_file, ChatClient& client,
                                    const CorpusOptions& options);

/// Text-to-music generation boundary.
class GenerationAdapter {
 public:
  virtual ~GenerationAdapter() = default;
  /// Returns the path of the produced audio file.
  virtual std::filesystem::path generate(const std::string& prompt, double duration_s,
                                         const std::filesystem::path& output_dir) = 0;
};

/// Runs `command... --duration D --output-dir DIR` with the prompt on stdin
/// and reads the output path from stdout. Nonzero exit or timeout raises
/// GenerationFailed; a missing executable raises AdapterUnavailable.
class SubprocessAdapter final : public GenerationAdapter {
 public:
  explicit SubprocessAdapter(std::vector<std::string> command,
                             std::chrono::milliseconds timeout = std::chrono::minutes(10));
  std::filesystem::path generate(const std::string& prompt, double duration_s,
                                 const std::filesystem::path& output_dir) override;

 private:
  std::vector<std::string> command_;
  std::chrono::milliseconds timeout_;
};

inline constexpr int kGeneratedSampleRate = 32000;

/// Generates one clip, checks it is a 32 kHz WAV of the requested duration
/// and appends it to the synthetic manifest (path,genre,domain,duration_s,
/// prompt_id,musicgen_prompt). Throws InvalidArgument for duration <= 0.
TrackRecord request_audio(const PromptRecord& record, double duration_s, GenerationAdapter& adapter,
                          const std::filesystem::path& output_dir, const std::filesystem::path& manifest_csv);

}  // namespace synthtag::promptgen
