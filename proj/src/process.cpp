#include "migmate/process.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <mutex>
#include <set>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace migmate::process {

namespace {

std::mutex active_mutex;
std::set<pid_t> active_groups;

void track(pid_t pgid, bool add)
{
    std::lock_guard lock(active_mutex);
    if (add)
        active_groups.insert(pgid);
    else
        active_groups.erase(pgid);
}

} // namespace

void kill_active() noexcept
{
    std::lock_guard lock(active_mutex);
    for (pid_t g : active_groups)
        ::kill(-g, SIGKILL);
}

Result run_shell(const std::string& command, const std::filesystem::path& cwd, std::chrono::milliseconds timeout)
{
    Result result;
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0)
        return result;

    // Everything the child touches is prepared before fork.
    std::string dir = cwd.string();
    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        return result;
    }
    if (pid == 0) {
        sigset_t none;
        ::sigemptyset(&none);
        ::sigprocmask(SIG_SETMASK, &none, nullptr);
        ::setpgid(0, 0);
        ::dup2(fds[1], STDOUT_FILENO);
        ::dup2(fds[1], STDERR_FILENO);
        int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0)
            ::dup2(devnull, STDIN_FILENO);
        if (::chdir(dir.c_str()) != 0)
            ::_exit(127);
        ::execv("/bin/sh", const_cast<char* const*>(argv));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(fds[1]);
    result.launched = true;
    track(pid, true);

    auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    bool open = true;
    while (open) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            break;
        }
        pollfd p{fds[0], POLLIN, 0};
        int rc = ::poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 250)));
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        if (rc == 0)
            continue;
        ssize_t n = ::read(fds[0], buf, sizeof buf);
        if (n > 0)
            result.output.append(buf, static_cast<std::size_t>(n));
        else if (n == 0 || errno != EINTR)
            open = false;
    }
    ::close(fds[0]);

    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    // Reap stragglers left in the group after the shell exited.
    if (!result.timed_out)
        ::kill(-pid, SIGKILL);
    track(pid, false);
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

} // namespace migmate::process
