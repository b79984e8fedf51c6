#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"

namespace xsal::bridge {

namespace {

void ignore_sigpipe() {
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

}  // namespace

FdTransport::FdTransport(int read_fd, int write_fd, bool owns) : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {
    ignore_sigpipe();
}

FdTransport::~FdTransport() { close_fds(); }

void FdTransport::close_fds() {
    if (!owns_) return;
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
}

void FdTransport::write_line(const std::string& line) {
    std::string framed = line;
    framed += '\n';
    const char* p = framed.data();
    std::size_t left = framed.size();
    while (left > 0) {
        const ssize_t n = ::write(write_fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::connection_lost, std::string("write failed: ") + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::optional<std::string> FdTransport::read_line() {
    for (;;) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        char chunk[65536];
        const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::connection_lost, std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0) return std::nullopt;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

ChildProcessTransport::ChildProcessTransport(int read_fd, int write_fd, int pid)
    : FdTransport(read_fd, write_fd), pid_(pid) {}

std::unique_ptr<ChildProcessTransport> ChildProcessTransport::spawn(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw Error(ErrorCode::io_error, "pipe failed");
    if (::pipe(from_child) != 0) {
        ::close(to_child[0]);
        ::close(to_child[1]);
        throw Error(ErrorCode::io_error, "pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorCode::io_error, "fork failed");
    if (pid == 0) {
        ::dup2(to_child[0], STDIN_FILENO);
        ::dup2(from_child[1], STDOUT_FILENO);
        ::close(to_child[0]);
        ::close(to_child[1]);
        ::close(from_child[0]);
        ::close(from_child[1]);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::unique_ptr<ChildProcessTransport>(new ChildProcessTransport(from_child[0], to_child[1], pid));
}

ChildProcessTransport::~ChildProcessTransport() {
    close_fds();
    int status = 0;
    ::waitpid(pid_, &status, 0);
}

std::unique_ptr<FdTransport> connect_tcp(const std::string& host, int port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw Error(ErrorCode::io_error, "cannot resolve " + host + ": " + ::gai_strerror(rc));
    int fd = -1;
    for (auto* ai = res; ai; ai = ai->ai_next) {
        fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
        ::close(fd);
        fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw Error(ErrorCode::connection_lost, "cannot connect to " + host + ":" + service);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<FdTransport>(fd, fd);
}

}  // namespace xsal::bridge
