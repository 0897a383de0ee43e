// Copyright 2026 The synthtag Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthtag/promptgen.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "synthtag/audio.hpp"
#include "synthtag/csv.hpp"
#include "synthtag/error.hpp"
#include "synthtag/taxonomy.hpp"

namespace synthtag::promptgen {
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parsed records plus the valid prefix of the file text.
std::pair<std::vector<PromptRecord>, std::string> parse_corpus(const fs::path& file) {
  const std::string text = read_text(file);
  std::vector<PromptRecord> out;
  std::size_t pos = 0, good_end = 0, line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const bool last = nl == std::string::npos;
    const std::string line = text.substr(pos, last ? std::string::npos : nl - pos);
    ++line_no;
    if (!line.empty()) {
      try {
        out.push_back(prompt_record_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        if (!last) {
          throw Error(ErrorCode::UnreadableFile, file.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        break;
      }
    }
    if (last) {
      good_end = text.size();
      break;
    }
    pos = nl + 1;
    good_end = pos;
  }
  return {std::move(out), text.substr(0, good_end)};
}

}  // namespace

LlmRequest build_llm_request(const std::string& genre, std::string model_name) {
  require_genre(genre);
  LlmRequest r;
  r.system_prompt = std::string(kSystemPrompt);
  r.user_prompt = "Write a description for an instrumental " + genre +
                  " track. The description is a single sentence. It mentions that it is an instrumental " + genre +
                  " track and gives details on tempo and instruments.";
  r.temperature = kTemperature;
  r.model_name = std::move(model_name);
  return r;
}

std::string build_musicgen_prompt(const std::string& genre, const std::string& description) {
  if (description.empty()) throw Error(ErrorCode::EmptyDescription, "empty description for genre " + genre);
  return genre + " " + genre + " " + description;
}

std::string record_id(const std::string& genre, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", index);
  return genre + "-" + buf;
}

nlohmann::json to_json(const PromptRecord& r) {
  return {{"id", r.id},
          {"genre", r.genre},
          {"llm_description", r.llm_description},
          {"musicgen_prompt", r.musicgen_prompt},
          {"created_at", r.created_at}};
}

PromptRecord prompt_record_from_json(const nlohmann::json& j) {
  return {j.at("id").get<std::string>(), j.at("genre").get<std::string>(), j.at("llm_description").get<std::string>(),
          j.at("musicgen_prompt").get<std::string>(), j.value("created_at", std::string())};
}

std::vector<PromptRecord> read_corpus(const fs::path& file) { return parse_corpus(file).first; }

std::chrono::milliseconds RetryPolicy::delay(int retry) const {
  const double ms = static_cast<double>(initial_delay.count()) * std::pow(multiplier, retry - 1);
  return std::chrono::milliseconds(
      static_cast<long long>(std::min(ms, static_cast<double>(max_delay.count()))));
}

CorpusResult generate_prompt_corpus(const fs::path& corpus_file, ChatClient& client, const CorpusOptions& options) {
  if (options.n_per_genre < 1) throw Error(ErrorCode::InvalidArgument, "n_per_genre must be at least 1");
  if (options.retry.max_attempts < 1) throw Error(ErrorCode::InvalidArgument, "max_attempts must be at least 1");
  std::vector<std::string> genres = options.genres;
  if (genres.empty()) genres.assign(kGenres.begin(), kGenres.end());
  for (const auto& g : genres) require_genre(g);

  auto [existing, valid_text] = parse_corpus(corpus_file);
  if (!valid_text.empty() && valid_text.back() != '\n') valid_text += '\n';
  if (fs::exists(corpus_file) && valid_text.size() != fs::file_size(corpus_file)) {
    // Drop a torn final line left by an interrupted run.
    std::ofstream(corpus_file, std::ios::binary | std::ios::trunc) << valid_text;
  }
  if (!corpus_file.parent_path().empty()) fs::create_directories(corpus_file.parent_path());

  std::set<std::string> have;
  for (const auto& r : existing) have.insert(r.id);
  struct Job {
    std::string genre;
    std::string id;
  };
  std::vector<Job> jobs;
  CorpusResult result;
  for (const auto& g : genres) {
    for (int i = 0; i < options.n_per_genre; ++i) {
      std::string id = record_id(g, i);
      if (have.count(id)) {
        ++result.skipped;
      } else {
        jobs.push_back({g, std::move(id)});
      }
    }
  }

  std::ofstream out(corpus_file, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + corpus_file.string());

  const Sleeper sleep = options.sleeper ? options.sleeper : Sleeper([](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  });
  const auto clock = options.clock ? options.clock : std::function<std::string()>(utc_now);
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::optional<Error> failure;

  auto log = [&](const std::string& line) {
    if (options.log) {
      std::lock_guard lock(mu);
      options.log(line);
    }
  };
  auto fail = [&](ErrorCode code, const std::string& msg) {
    std::lock_guard lock(mu);
    if (!failure) failure.emplace(code, msg);
    abort = true;
  };

  auto worker = [&] {
    while (!abort) {
      const std::size_t k = next++;
      if (k >= jobs.size()) return;
      const Job& job = jobs[k];
      const LlmRequest request = build_llm_request(job.genre, options.model_name);
      for (int attempt = 1;; ++attempt) {
        ChatReply reply;
        try {
          reply = client.complete(request);
        } catch (const std::exception& e) {
          reply = {ReplyStatus::Transient, {}, e.what()};
        }
        if (reply.status == ReplyStatus::Ok && reply.text.empty()) {
          reply = {ReplyStatus::Transient, {}, "empty completion"};
        }
        if (reply.status == ReplyStatus::Ok) {
          PromptRecord rec{job.id, job.genre, reply.text, build_musicgen_prompt(job.genre, reply.text), clock()};
          std::lock_guard lock(mu);
          out << to_json(rec).dump() << '\n';
          out.flush();
          if (!out) {
            if (!failure) failure.emplace(ErrorCode::IoError, "short write to " + corpus_file.string());
            abort = true;
            return;
          }
          ++result.generated;
          break;
        }
        if (reply.status == ReplyStatus::Quota) {
          fail(ErrorCode::QuotaExceeded, job.id + ": " + reply.detail);
          return;
        }
        if (reply.status == ReplyStatus::Permanent) {
          fail(ErrorCode::ClientError, job.id + ": " + reply.detail);
          return;
        }
        if (attempt >= options.retry.max_attempts) {
          fail(ErrorCode::ClientError,
               job.id + ": giving up after " + std::to_string(attempt) + " attempts: " + reply.detail);
          return;
        }
        {
          std::lock_guard lock(mu);
          ++result.retries;
        }
        log("retry " + std::to_string(attempt) + " for " + job.id + ": " + reply.detail);
        sleep(options.retry.delay(attempt));
        if (abort) return;
      }
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.max_in_flight)), jobs.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  out.close();

  result.records = read_corpus(corpus_file);
  if (failure) {
    if (options.log) {
      options.log("partial corpus kept: " + std::to_string(result.records.size()) + " records in " +
                  corpus_file.string());
    }
    throw *failure;
  }
  return result;
}

namespace {

std::optional<fs::path> find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return fs::path(name);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    const fs::path candidate = fs::path(dir.empty() ? "." : dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return std::nullopt;
}

std::string format_duration(double s) {
  std::ostringstream ss;
  ss << s;
  return ss.str();
}

}  // namespace

SubprocessAdapter::SubprocessAdapter(std::vector<std::string> command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  struct sigaction current{};
  if (::sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) {
    ::signal(SIGPIPE, SIG_IGN);
  }
}

fs::path SubprocessAdapter::generate(const std::string& prompt, double duration_s, const fs::path& output_dir) {
  if (command_.empty()) throw Error(ErrorCode::AdapterUnavailable, "no generation command configured");
  const auto exe = find_executable(command_.front());
  if (!exe) throw Error(ErrorCode::AdapterUnavailable, "generation command not found: " + command_.front());
  fs::create_directories(output_dir);

  std::vector<std::string> args = command_;
  args.insert(args.end(), {"--duration", format_duration(duration_s), "--output-dir", output_dir.string()});
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::IoError, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw Error(ErrorCode::IoError, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::IoError, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);  // own group, so a timeout also reaps helper processes
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execv(exe->c_str(), argv.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);

  const std::string with_prompt = " (prompt: \"" + prompt + "\")";
  std::size_t written = 0;
  while (written < prompt.size()) {
    const ssize_t n = ::write(in_pipe[1], prompt.data() + written, prompt.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;  // child stopped reading; its exit status decides
    }
    written += static_cast<std::size_t>(n);
  }
  ::close(in_pipe[1]);

  std::string output;
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{out_pipe[0], POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    const ssize_t n = ::read(out_pipe[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  ::close(out_pipe[0]);

  int status = 0;
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    throw Error(ErrorCode::GenerationFailed,
                "adapter timed out after " + std::to_string(timeout_.count()) + " ms" + with_prompt);
  }
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw Error(ErrorCode::GenerationFailed, "adapter exited with status " + std::to_string(code) + with_prompt);
  }

  std::string line;
  std::istringstream lines(output);
  for (std::string l; std::getline(lines, l);) {
    while (!l.empty() && (l.back() == '\r' || l.back() == ' ')) l.pop_back();
    if (!l.empty()) line = l;
  }
  if (line.empty()) throw Error(ErrorCode::GenerationFailed, "adapter printed no output path" + with_prompt);
  fs::path result(line);
  if (result.is_relative() && !fs::exists(result)) result = output_dir / result;
  if (!fs::exists(result)) {
    throw Error(ErrorCode::GenerationFailed, "adapter output " + result.string() + " does not exist" + with_prompt);
  }
  return result;
}

TrackRecord request_audio(const PromptRecord& record, double duration_s, GenerationAdapter& adapter,
                          const fs::path& output_dir, const fs::path& manifest_csv) {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "duration must be positive");
  require_genre(record.genre);
  const fs::path audio = adapter.generate(record.musicgen_prompt, duration_s, output_dir);

  WavInfo info;
  try {
    info = probe_wav(audio);
  } catch (const Error& e) {
    throw Error(ErrorCode::GenerationFailed, std::string(e.what()) + " (prompt: \"" + record.musicgen_prompt + "\")");
  }
  if (info.sample_rate != kGeneratedSampleRate) {
    throw Error(ErrorCode::GenerationFailed, audio.string() + ": expected 32000 Hz, got " +
                                                 std::to_string(info.sample_rate));
  }
  constexpr double kDurationTolerance = 0.05;
  if (std::abs(info.duration_seconds() - duration_s) > kDurationTolerance) {
    throw Error(ErrorCode::GenerationFailed, audio.string() + ": expected " + format_duration(duration_s) +
                                                 " s, got " + format_duration(info.duration_seconds()) + " s");
  }

  static std::mutex manifest_mu;
  std::lock_guard lock(manifest_mu);
  const bool fresh = !fs::exists(manifest_csv) || fs::file_size(manifest_csv) == 0;
  if (!manifest_csv.parent_path().empty()) fs::create_directories(manifest_csv.parent_path());
  std::ofstream out(manifest_csv, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::IoError, "cannot append to " + manifest_csv.string());
  if (fresh) out << csv::format_row({"path", "genre", "domain", "duration_s", "prompt_id", "musicgen_prompt"}) << '\n';
  const fs::path base = manifest_csv.parent_path().empty() ? fs::path(".") : manifest_csv.parent_path();
  const fs::path stored = fs::proximate(fs::absolute(audio), fs::absolute(base));
  out << csv::format_row({stored.string(), record.genre, std::string(to_string(Domain::Synthetic)),
                          csv::format_number(info.duration_seconds()), record.id, record.musicgen_prompt})
      << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "short write to " + manifest_csv.string());
  return {fs::absolute(audio).string(), record.genre, Domain::Synthetic, info.duration_seconds()};
}

}  // namespace synthtag::promptgen
