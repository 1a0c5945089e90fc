#include "bridge/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <unordered_set>

#include "bridge/error.hpp"

namespace bridge {

namespace {

constexpr std::size_t kDiagnosticBytes = 4096;

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("write to external process failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

ExternalProcess::ExternalProcess(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  if (command_.empty()) throw Error("external process: empty command");
  if (timeout_.count() <= 0) throw Error("external process: timeout must be positive");
  // A dead child must surface as EPIPE, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
}

ExternalProcess::~ExternalProcess() {
  terminate();
  if (stderr_capture_) std::fclose(stderr_capture_);
}

void ExternalProcess::start() {
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
    throw Error(std::string("pipe failed: ") + std::strerror(errno));
  }
  if (stderr_capture_) std::fclose(stderr_capture_);
  stderr_capture_ = std::tmpfile();
  const int err_fd = stderr_capture_ ? ::fileno(stderr_capture_) : -1;

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    if (err_fd >= 0) ::dup2(err_fd, STDERR_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
}

void ExternalProcess::terminate() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin asks a well-behaved child to exit; give it a moment.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      ::usleep(2000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ExternalProcess::diagnostics() {
  if (!stderr_capture_) return {};
  std::fflush(stderr_capture_);
  const int fd = ::fileno(stderr_capture_);
  const auto size = ::lseek(fd, 0, SEEK_END);
  if (size <= 0) return {};
  const auto from = size > static_cast<off_t>(kDiagnosticBytes) ? size - static_cast<off_t>(kDiagnosticBytes) : 0;
  std::string text(static_cast<std::size_t>(size - from), '\0');
  const auto n = ::pread(fd, text.data(), text.size(), from);
  text.resize(n > 0 ? static_cast<std::size_t>(n) : 0);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

void ExternalProcess::fail_exited(std::int64_t id) {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  int status = 0;
  std::string how = "closed its output";
  if (pid_ > 0) {
    ::pid_t r = 0;
    for (int i = 0; i < 500 && r == 0; ++i) {
      r = ::waitpid(pid_, &status, WNOHANG);
      if (r == 0) ::usleep(2000);
    }
    if (r == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    } else if (WIFEXITED(status)) {
      how = "exited with status " + std::to_string(WEXITSTATUS(status));
    } else if (WIFSIGNALED(status)) {
      how = "killed by signal " + std::to_string(WTERMSIG(status));
    }
    pid_ = -1;
  }
  auto diag = diagnostics();
  throw Error("external process " + how + " while serving request " + std::to_string(id) +
              (diag.empty() ? "" : "; stderr: " + diag));
}

std::string ExternalProcess::read_line(std::int64_t id) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      ::kill(pid_, SIGKILL);
      terminate();
      throw TimeoutError("request " + std::to_string(id) + " timed out after " +
                         std::to_string(timeout_.count()) + " ms");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(std::string("poll failed: ") + std::strerror(errno));
    }
    if (r == 0) continue;
    char chunk[4096];
    const auto n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_exited(id);
    }
    if (n == 0) fail_exited(id);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

wire::Response ExternalProcess::call(wire::Request request) {
  if (pid_ <= 0) start();
  const auto id = ++last_id_;
  wire::set_request_id(request, id);
  try {
    write_all(to_child_, wire::serialize(request) + "\n");
  } catch (const Error&) {
    fail_exited(id);
  }
  const auto line = read_line(id);
  wire::Response response;
  try {
    response = wire::parse_response(line);
  } catch (const ProtocolError&) {
    terminate();
    throw;
  }
  if (wire::response_id(response) != id) {
    terminate();
    throw ProtocolError("response id " + std::to_string(wire::response_id(response)) +
                        " does not match request " + std::to_string(id) + ": " + line);
  }
  const bool kind_ok =
      (request.index() == 0 && std::holds_alternative<wire::MetricResponse>(response)) ||
      (request.index() == 1 && std::holds_alternative<wire::PoolResponse>(response)) ||
      (request.index() == 2 && std::holds_alternative<wire::VectorsResponse>(response));
  if (!kind_ok) {
    terminate();
    throw ProtocolError("response does not answer a " + std::string(wire::op_name(request)) +
                        " request: " + line);
  }
  return response;
}

double ExternalEvaluator::evaluate(const ExamplePool& pool, const SubsetVector& subset,
                                   const EvalContext& ctx) {
  wire::EvaluateRequest req;
  req.round = ctx.round;
  req.subset_ids = ids_of(pool, subset);
  req.examples = examples_of(pool, subset);
  const auto resp = process_->call(std::move(req));
  return std::get<wire::MetricResponse>(resp).metric;
}

ExamplePool dedupe_generated(std::vector<Example> generated, const ExamplePool* previous,
                             int round) {
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> raw;
  std::vector<Example> kept;
  for (auto& e : generated) {
    if (!raw.insert(e.id).second) continue;
    if (previous && previous->contains(e.id)) {
      std::string id = round_id(e.id, round);
      for (int n = 2; (previous->contains(id) || seen.contains(id)); ++n) {
        id = round_id(e.id, round) + "_" + std::to_string(n);
      }
      e.id = id;
    }
    if (!seen.insert(e.id).second) continue;
    kept.push_back(std::move(e));
  }
  return ExamplePool(std::move(kept), round);
}

ExamplePool ExternalGenerator::generate(const GenerateRequest& request) {
  wire::GenerateRequest req;
  req.round = request.round;
  for (const auto& e : request.seeds) req.seed_ids.push_back(e.id);
  req.seed_examples = request.seeds;
  auto resp = process_->call(std::move(req));
  return dedupe_generated(std::move(std::get<wire::PoolResponse>(resp).pool), request.previous,
                          request.round);
}

EmbeddingMatrix ExternalEmbedder::embed(const std::vector<std::string>& ids,
                                        const std::vector<std::string>& texts) {
  wire::EmbedRequest req;
  req.ids = ids;
  req.texts = texts;
  const auto resp = process_->call(std::move(req));
  const auto& vectors = std::get<wire::VectorsResponse>(resp).vectors;
  if (vectors.size() != ids.size()) {
    throw ProtocolError("embed response has " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(ids.size()) + " ids");
  }
  EmbeddingMatrix m;
  const auto d = vectors.empty() ? 0 : vectors.front().size();
  m.vectors.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != d) throw ProtocolError("embed response has ragged vectors");
    for (std::size_t c = 0; c < d; ++c) {
      m.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = vectors[i][c];
    }
  }
  return m;
}

}  // namespace bridge
