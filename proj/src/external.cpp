#include "ceal/external.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "ceal/error.hpp"

namespace ceal {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxCapture = 1 << 20;

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return static_cast<int>(std::clamp<long long>(left, 0, 1000));
}

}  // namespace

CommandResult run_command(const std::string& command, double timeout_seconds) {
  CommandResult res;
  int out_pipe[2], err_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0) throw std::runtime_error("pipe2 failed");
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    throw std::runtime_error("pipe2 failed");
  }

  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
    throw std::runtime_error("fork failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(out_pipe[1]);
  close(err_pipe[1]);

  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(std::max(timeout_seconds, 0.0)));
  std::array<pollfd, 2> fds{{{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}}};
  std::array<std::string*, 2> sinks{&res.out, &res.err};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0 && Clock::now() < deadline) {
    if (poll(fds.data(), fds.size(), remaining_ms(deadline)) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t k = 0; k < fds.size(); ++k) {
      if (fds[k].fd < 0 || fds[k].revents == 0) continue;
      const ssize_t n = read(fds[k].fd, buf, sizeof buf);
      if (n > 0) {
        if (sinks[k]->size() < kMaxCapture) sinks[k]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        close(fds[k].fd);
        fds[k].fd = -1;
        --open_fds;
      }
    }
  }

  int status = 0;
  bool reaped = false;
  while (!reaped && Clock::now() < deadline) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) reaped = true;
    else std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!reaped) {
    kill(-pid, SIGKILL);
    waitpid(pid, &status, 0);
    res.timed_out = true;
  }
  for (auto& f : fds) {
    if (f.fd >= 0) close(f.fd);
  }
  if (!res.timed_out) {
    if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) res.signaled = true;
  }
  return res;
}

std::string substitute(std::string_view tmpl, std::span<const std::string> names, const Configuration& values) {
  if (names.size() != values.size()) throw StructuralError("substitute: names and values differ in length");
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i++]);
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw ConfigError("command template: unterminated '{'");
    const std::string name(tmpl.substr(i + 1, close - i - 1));
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw ConfigError("command template: unknown slot '{" + name + "}'");
    const double v = values[static_cast<std::size_t>(it - names.begin())];
    if (std::floor(v) == v && std::fabs(v) < 9e15) out += fmt::format("{}", static_cast<long long>(v));
    else out += fmt::format("{}", v);
    i = close + 1;
  }
  return out;
}

namespace {

bool take_prefix(std::string_view& s, std::string_view p) {
  if (s.substr(0, p.size()) != p) return false;
  s.remove_prefix(p.size());
  return true;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string_view next_field(std::string_view& s) {
  const auto sp = s.find(' ');
  auto f = s.substr(0, sp);
  s = sp == std::string_view::npos ? std::string_view{} : s.substr(sp + 1);
  return f;
}

}  // namespace

std::optional<ResultLine> parse_result_line(std::string_view line, std::string* error) {
  auto fail = [&](std::string msg) -> std::optional<ResultLine> {
    if (error) *error = std::move(msg);
    return std::nullopt;
  };
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (!take_prefix(line, "RESULT ")) return fail("line does not start with 'RESULT '");

  ResultLine r;
  auto f = next_field(line);
  if (!take_prefix(f, "exec_s=") || !parse_number(f, r.exec_s)) return fail("bad or missing exec_s field");
  f = next_field(line);
  if (!take_prefix(f, "nodes=") || !parse_number(f, r.nodes)) return fail("bad or missing nodes field");
  f = next_field(line);
  if (!take_prefix(f, "cores_per_node=") || !parse_number(f, r.cores_per_node)) {
    return fail("bad or missing cores_per_node field");
  }
  f = next_field(line);
  if (!take_prefix(f, "comp_times=")) return fail("missing comp_times field");
  if (!line.empty()) return fail("unexpected trailing text after comp_times");
  while (true) {
    const auto comma = f.find(',');
    double v = 0.0;
    if (!parse_number(f.substr(0, comma), v)) return fail("bad value in comp_times");
    r.comp_times.push_back(v);
    if (comma == std::string_view::npos) break;
    f.remove_prefix(comma + 1);
  }
  if (!std::isfinite(r.exec_s) || r.exec_s <= 0.0) return fail("exec_s must be finite and positive");
  if (r.nodes == 0 || r.cores_per_node == 0) return fail("nodes and cores_per_node must be positive");
  for (double t : r.comp_times) {
    if (!std::isfinite(t) || t <= 0.0) return fail("comp_times must be finite and positive");
  }
  return r;
}

std::optional<ResultLine> find_result_line(std::string_view out, std::string* error) {
  std::optional<std::string_view> found;
  while (!out.empty()) {
    const auto nl = out.find('\n');
    const auto line = out.substr(0, nl);
    out = nl == std::string_view::npos ? std::string_view{} : out.substr(nl + 1);
    if (line.substr(0, 6) == "RESULT") {
      if (found) {
        if (error) *error = "more than one RESULT line";
        return std::nullopt;
      }
      found = line;
    }
  }
  if (!found) {
    if (error) *error = "no RESULT line in output";
    return std::nullopt;
  }
  return parse_result_line(*found, error);
}

namespace {

std::string describe_failure(const CommandResult& r, double timeout) {
  if (r.timed_out) return fmt::format("timed out after {} s", timeout);
  if (r.signaled) return "terminated by signal";
  std::string tail = r.err.size() > 400 ? r.err.substr(r.err.size() - 400) : r.err;
  return fmt::format("exit code {}; stderr: {}", r.exit_code, tail);
}

}  // namespace

Measurement external_measure(std::string_view cmd_template, std::span<const std::string> names,
                             const Configuration& c, double timeout_seconds) {
  const auto cmd = substitute(cmd_template, names, c);
  const auto r = run_command(cmd, timeout_seconds);
  if (r.timed_out || r.signaled || r.exit_code != 0) {
    return Measurement::failed(c, Provenance::External, describe_failure(r, timeout_seconds));
  }
  std::string err;
  auto parsed = find_result_line(r.out, &err);
  if (!parsed) return Measurement::failed(c, Provenance::External, "parse error: " + err);
  const double slowest = *std::max_element(parsed->comp_times.begin(), parsed->comp_times.end());
  if (std::fabs(slowest - parsed->exec_s) > 1e-9 * std::max(1.0, parsed->exec_s)) {
    return Measurement::failed(
        c, Provenance::External,
        fmt::format("exec_s={} disagrees with slowest component time {}", parsed->exec_s, slowest));
  }
  return Measurement::make(c, std::move(parsed->comp_times), parsed->nodes, parsed->cores_per_node,
                           Provenance::External);
}

ExternalExecutor::ExternalExecutor(ExternalCommand workflow, std::vector<std::optional<ExternalCommand>> components,
                                   double timeout_seconds)
    : workflow_(std::move(workflow)), components_(std::move(components)), timeout_(timeout_seconds) {
  if (!(timeout_ > 0.0)) throw ConfigError("external executor: timeout must be positive");
}

Measurement ExternalExecutor::measure(const Configuration& c) {
  return external_measure(workflow_.command_template, workflow_.names, c, timeout_);
}

ComponentMeasurement ExternalExecutor::measure_component(std::size_t j, const Configuration& cj) {
  if (j >= components_.size() || !components_[j]) {
    return ComponentMeasurement::failed(j, cj, Provenance::External, "no command configured for this component");
  }
  const auto& cmd = *components_[j];
  const auto r = run_command(substitute(cmd.command_template, cmd.names, cj), timeout_);
  if (r.timed_out || r.signaled || r.exit_code != 0) {
    return ComponentMeasurement::failed(j, cj, Provenance::External, describe_failure(r, timeout_));
  }
  std::string err;
  auto parsed = find_result_line(r.out, &err);
  if (!parsed) return ComponentMeasurement::failed(j, cj, Provenance::External, "parse error: " + err);
  return ComponentMeasurement::make(j, cj, parsed->exec_s, parsed->nodes, parsed->cores_per_node,
                                    Provenance::External);
}

}  // namespace ceal
