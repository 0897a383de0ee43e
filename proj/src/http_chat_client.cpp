// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "synthtag/error.hpp"
#include "synthtag/promptgen.hpp"

namespace synthtag::promptgen {

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::ClientError, "base URL lacks a scheme: " + base_url);
  const std::string scheme = base_url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::ClientError, "unsupported scheme: " + scheme);
  const auto path_start = base_url.find('/', scheme_end + 3);
  origin_ = base_url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = base_url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::unique_ptr<HttpChatClient> HttpChatClient::from_environment() {
  const char* url = std::getenv("LLM_API_BASE_URL");
  const char* key = std::getenv("LLM_API_KEY");
  if (!url || !*url) throw Error(ErrorCode::ClientError, "LLM_API_BASE_URL is not set");
  if (!key || !*key) throw Error(ErrorCode::ClientError, "LLM_API_KEY is not set");
  return std::make_unique<HttpChatClient>(url, key);
}

ChatReply HttpChatClient::interpret(int http_status, const std::string& body) {
  const std::string excerpt = body.substr(0, 300);
  if (http_status == 200) {
    try {
      const auto j = nlohmann::json::parse(body);
      return {ReplyStatus::Ok, j.at("choices").at(0).at("message").at("content").get<std::string>(), {}};
    } catch (const nlohmann::json::exception& e) {
      return {ReplyStatus::Transient, {}, std::string("malformed completion: ") + e.what()};
    }
  }
  const std::string detail = "HTTP " + std::to_string(http_status) + ": " + excerpt;
  if (http_status == 429) {
    // Rate limiting is retried; an exhausted billing quota is not.
    if (body.find("insufficient_quota") != std::string::npos) return {ReplyStatus::Quota, {}, detail};
    return {ReplyStatus::Transient, {}, detail};
  }
  if (http_status == 408 || http_status == 409 || http_status >= 500) return {ReplyStatus::Transient, {}, detail};
  return {ReplyStatus::Permanent, {}, detail};
}

ChatReply HttpChatClient::complete(const LlmRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  client.set_bearer_token_auth(api_key_);
  const nlohmann::json body = {{"model", request.model_name},
                               {"temperature", request.temperature},
                               {"messages",
                                {{{"role", "system"}, {"content", request.system_prompt}},
                                 {{"role", "user"}, {"content", request.user_prompt}}}}};
  const auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
  if (!res) return {ReplyStatus::Transient, {}, "transport error: " + httplib::to_string(res.error())};
  return interpret(res->status, res->body);
}

}  // namespace synthtag::promptgen
