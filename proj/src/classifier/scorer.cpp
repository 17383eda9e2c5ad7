#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <thread>

#include "dqa/errors.hpp"
#include "dqa/scorer.hpp"
#include "dqa/tsv.hpp"

extern char** environ;

namespace dqa {

std::vector<double> ClassifierScorer::score(std::span<const ScoreRequest> batch) {
  std::vector<TextPair> pairs;
  pairs.reserve(batch.size());
  for (const auto& r : batch) pairs.push_back({r.question, r.sentence});
  return score_batch(clf_, model_, pairs);
}

ExternalScorerConfig ExternalScorerConfig::shell(const std::string& command) {
  ExternalScorerConfig c;
  c.argv = {"/bin/sh", "-c", command};
  return c;
}

namespace {

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void adopt(int fd) {
    reset();
    fd_ = fd;
  }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

struct Pipe {
  Fd read, write;
  Pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw ScorerUnavailable(std::string("pipe: ") + std::strerror(errno));
    read.adopt(fds[0]);
    write.adopt(fds[1]);
  }
};

// Joins the writer and reaps the child on every exit path.
struct Child {
  pid_t pid = -1;
  std::thread writer;
  int status = 0;

  int wait() {
    if (writer.joinable()) writer.join();
    if (pid > 0) {
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      pid = -1;
    }
    return status;
  }
  ~Child() {
    if (pid > 0) ::kill(-pid, SIGKILL);
    wait();
  }
};

double parse_score(std::string_view line, std::size_t index) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
  double v = 0;
  auto [end, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
  if (ec != std::errc() || end != line.data() + line.size() || line.empty()) {
    throw ProtocolError("scorer response " + std::to_string(index + 1) + " is not a number: '" + std::string(line) + "'");
  }
  if (!(v >= 0 && v <= 1)) {
    throw ProtocolError("scorer response " + std::to_string(index + 1) + " outside [0, 1]: " + std::string(line));
  }
  return v;
}

}  // namespace

std::vector<double> external_scorer_roundtrip(const ExternalScorerConfig& config, std::span<const ScoreRequest> batch) {
  if (config.argv.empty()) throw ScorerUnavailable("external scorer command is empty");
  if (batch.empty()) return {};

  std::string request;
  for (const auto& r : batch) {
    request += std::to_string(r.qid);
    request += '\t';
    request += tsv_field(r.question);
    request += '\t';
    request += tsv_field(r.sentence);
    request += '\n';
  }

  Pipe to_child, from_child;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, to_child.read.get(), STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, from_child.write.get(), STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& a : config.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  // Own process group, so a timeout also kills grandchildren of a shell.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  Child child;
  const int rc = ::posix_spawnp(&child.pid, argv[0], &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) {
    child.pid = -1;
    throw ScorerUnavailable("cannot start scorer '" + config.argv[0] + "': " + std::strerror(rc));
  }
  to_child.read.reset();
  from_child.write.reset();

  // The writer runs concurrently so a scorer that answers line by line never
  // blocks on a full pipe. EPIPE (scorer exited early) surfaces later as a
  // count mismatch.
  const int wfd = to_child.write.release();
  child.writer = std::thread([wfd, &request] {
    sigset_t block;
    sigemptyset(&block);
    sigaddset(&block, SIGPIPE);
    pthread_sigmask(SIG_BLOCK, &block, nullptr);
    std::size_t off = 0;
    while (off < request.size()) {
      const ssize_t n = ::write(wfd, request.data() + off, request.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        break;
      }
      off += static_cast<std::size_t>(n);
    }
    ::close(wfd);
    // Consume a SIGPIPE left pending on this thread.
    timespec zero{0, 0};
    sigtimedwait(&block, nullptr, &zero);
  });

  std::string response;
  const auto deadline = std::chrono::steady_clock::now() + config.timeout;
  char buf[65536];
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      ::kill(-child.pid, SIGKILL);
      throw ScorerUnavailable("scorer timed out after " + std::to_string(config.timeout.count()) + " ms");
    }
    pollfd pfd{from_child.read.get(), POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
    if (pr < 0) {
      if (errno == EINTR) continue;
      throw ScorerUnavailable(std::string("poll: ") + std::strerror(errno));
    }
    if (pr == 0) continue;
    const ssize_t n = ::read(from_child.read.get(), buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ScorerUnavailable(std::string("read: ") + std::strerror(errno));
    }
    if (n == 0) break;
    response.append(buf, static_cast<std::size_t>(n));
  }
  const int status = child.wait();
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
    throw ScorerUnavailable("scorer command not found: " + config.argv.back());
  }

  std::vector<std::string_view> lines;
  std::string_view rest = response;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  if (lines.size() != batch.size()) {
    throw ProtocolError("scorer returned " + std::to_string(lines.size()) + " scores for " +
                        std::to_string(batch.size()) + " requests");
  }
  std::vector<double> scores;
  scores.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) scores.push_back(parse_score(lines[i], i));
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ProtocolError("scorer exited abnormally (status " + std::to_string(status) + ")");
  }
  return scores;
}

}  // namespace dqa
