#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <mutex>

#include "overlap/errors.hpp"
#include "overlap/trainer.hpp"

extern char** environ;

namespace overlap {

namespace {

class Pipe {
public:
    Pipe() {
        if (::pipe2(fds_.data(), O_CLOEXEC) != 0) {
            throw BackendError(std::string("pipe2 failed: ") + std::strerror(errno));
        }
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    Pipe(const Pipe&) = delete;
    Pipe& operator=(const Pipe&) = delete;

    int read_end() const { return fds_[0]; }
    int write_end() const { return fds_[1]; }
    void close_read() { close_fd(fds_[0]); }
    void close_write() { close_fd(fds_[1]); }

private:
    static void close_fd(int& fd) {
        if (fd >= 0) {
            ::close(fd);
            fd = -1;
        }
    }
    std::array<int, 2> fds_{-1, -1};
};

class SpawnActions {
public:
    SpawnActions() { posix_spawn_file_actions_init(&actions_); }
    ~SpawnActions() { posix_spawn_file_actions_destroy(&actions_); }
    SpawnActions(const SpawnActions&) = delete;
    SpawnActions& operator=(const SpawnActions&) = delete;
    posix_spawn_file_actions_t* get() { return &actions_; }

private:
    posix_spawn_file_actions_t actions_;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

ProcessResult run_process(const std::string& command, std::string_view input, std::chrono::milliseconds timeout) {
    // A backend that exits without draining stdin must not kill us with SIGPIPE.
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    Pipe in_pipe;
    Pipe out_pipe;
    Pipe err_pipe;

    SpawnActions actions;
    posix_spawn_file_actions_adddup2(actions.get(), in_pipe.read_end(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), out_pipe.write_end(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(actions.get(), err_pipe.write_end(), STDERR_FILENO);

    std::string shell = "/bin/sh";
    std::string flag = "-c";
    std::string cmd = command;
    char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};

    pid_t pid = -1;
    if (const int rc = ::posix_spawn(&pid, shell.c_str(), actions.get(), nullptr, argv, environ); rc != 0) {
        throw BackendError("cannot spawn backend '" + command + "': " + std::strerror(rc));
    }
    in_pipe.close_read();
    out_pipe.close_write();
    err_pipe.close_write();

    set_nonblocking(in_pipe.write_end());
    set_nonblocking(out_pipe.read_end());
    set_nonblocking(err_pipe.read_end());

    ProcessResult result;
    std::size_t written = 0;
    if (input.empty()) {
        in_pipe.close_write();
    }
    bool out_open = true;
    bool err_open = true;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::array<char, 65536> buf;

    while (out_open || err_open) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            ::kill(pid, SIGKILL);
            break;
        }
        std::array<pollfd, 3> fds{};
        nfds_t count = 0;
        const int stdin_fd = in_pipe.write_end();
        if (stdin_fd >= 0) {
            fds[count++] = {stdin_fd, POLLOUT, 0};
        }
        if (out_open) {
            fds[count++] = {out_pipe.read_end(), POLLIN, 0};
        }
        if (err_open) {
            fds[count++] = {err_pipe.read_end(), POLLIN, 0};
        }
        const auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        const int ready = ::poll(fds.data(), count, static_cast<int>(std::min<long long>(wait_ms, 1000)));
        if (ready < 0) {
            if (errno == EINTR) {
                continue;
            }
            ::kill(pid, SIGKILL);
            ::waitpid(pid, nullptr, 0);
            throw BackendError(std::string("poll failed: ") + std::strerror(errno));
        }
        for (nfds_t i = 0; i < count; ++i) {
            const auto& p = fds[i];
            if (p.revents == 0) {
                continue;
            }
            if (p.fd == stdin_fd) {
                const ssize_t n = ::write(p.fd, input.data() + written, input.size() - written);
                if (n > 0) {
                    written += static_cast<std::size_t>(n);
                }
                if ((n < 0 && errno != EAGAIN) || written == input.size() || (p.revents & (POLLERR | POLLHUP))) {
                    in_pipe.close_write();
                }
                continue;
            }
            const bool is_out = p.fd == out_pipe.read_end();
            const ssize_t n = ::read(p.fd, buf.data(), buf.size());
            if (n > 0) {
                (is_out ? result.out : result.err).append(buf.data(), static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EAGAIN) {
                (is_out ? out_open : err_open) = false;
            }
        }
    }

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.exit_code = 128 + WTERMSIG(status);
    }
    return result;
}

}  // namespace overlap
