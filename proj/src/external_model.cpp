#include "segroute/external_model.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "segroute/error.hpp"
#include "segroute/svol.hpp"

namespace segroute {

namespace {

void ignore_sigpipe()
{
    static std::once_flag once;
    std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd)
{
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

/// Removes a scratch file when it goes out of scope.
struct ScratchFile {
    std::filesystem::path path;
    ~ScratchFile()
    {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

} // namespace

ExternalModelClient::ExternalModelClient(ExternalModelSpec spec) : spec_(std::move(spec))
{
    if (spec_.command.empty())
        throw ValidationError("external model command is empty");
    ignore_sigpipe();
    if (spec_.scratch_directory.empty()) {
        scratch_ = std::filesystem::temp_directory_path() /
                   fmt::format("segroute-{}-{:x}", ::getpid(), reinterpret_cast<std::uintptr_t>(this));
    } else {
        scratch_ = std::filesystem::absolute(spec_.scratch_directory);
    }
    std::filesystem::create_directories(scratch_);
}

ExternalModelClient::~ExternalModelClient()
{
    try {
        shutdown();
    } catch (...) {
        kill_child();
    }
    if (spec_.scratch_directory.empty()) {
        std::error_code ec;
        std::filesystem::remove_all(scratch_, ec);
    }
}

std::filesystem::path ExternalModelClient::scratch_path(const std::string& suffix)
{
    std::lock_guard lock(mutex_);
    return scratch_ / fmt::format("req-{}-{}", counter_++, suffix);
}

void ExternalModelClient::start()
{
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0)
        throw SpawnError(fmt::format("pipe failed: {}", std::strerror(errno)));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw SpawnError(fmt::format("pipe failed: {}", std::strerror(errno)));
    }
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]})
            ::close(fd);
        throw SpawnError(fmt::format("pipe failed: {}", std::strerror(errno)));
    }

    std::vector<char*> argv;
    for (auto& a : spec_.command)
        argv.push_back(a.data());
    argv.push_back(nullptr);
    const std::string workdir = spec_.working_directory.string();

    pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
            ::close(fd);
        throw SpawnError(fmt::format("fork failed: {}", std::strerror(errno)));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        int err = 0;
        if (!workdir.empty() && ::chdir(workdir.c_str()) != 0)
            err = errno;
        if (err == 0) {
            ::execvp(argv[0], argv.data());
            err = errno;
        }
        [[maybe_unused]] auto n = ::write(err_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    int child_errno = 0;
    ssize_t got = ::read(err_pipe[0], &child_errno, sizeof child_errno);
    ::close(err_pipe[0]);
    if (got > 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        ::waitpid(pid, nullptr, 0);
        throw SpawnError(fmt::format("cannot launch '{}': {}", spec_.command.front(), std::strerror(child_errno)));
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
}

void ExternalModelClient::kill_child()
{
    close_fd(to_child_);
    close_fd(from_child_);
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
    buffer_.clear();
}

void ExternalModelClient::write_line(const std::string& line)
{
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            int err = errno;
            kill_child();
            throw ProtocolError(fmt::format("writing request to model failed: {}", std::strerror(err)));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string ExternalModelClient::read_line()
{
    const auto deadline = std::chrono::steady_clock::now() + spec_.timeout;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            kill_child();
            throw ModelTimeoutError(fmt::format("model did not answer within {} ms", spec_.timeout.count()));
        }
        pollfd pfd{from_child_, POLLIN, 0};
        int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining.count(), 1 << 30)));
        if (ready < 0) {
            if (errno == EINTR)
                continue;
            int err = errno;
            kill_child();
            throw ProtocolError(fmt::format("poll failed: {}", std::strerror(err)));
        }
        if (ready == 0)
            continue;
        char chunk[4096];
        ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            int err = errno;
            kill_child();
            throw ProtocolError(fmt::format("reading model response failed: {}", std::strerror(err)));
        }
        if (n == 0) {
            kill_child();
            throw ProtocolError("model process closed its output before responding");
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

nlohmann::json ExternalModelClient::call(const nlohmann::json& request)
{
    std::lock_guard lock(mutex_);
    if (pid_ < 0)
        start();
    write_line(request.dump());
    std::string line = read_line();

    nlohmann::json response;
    try {
        response = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError(fmt::format("malformed response line: {}", line));
    }
    if (!response.is_object() || !response.contains("ok") || !response["ok"].is_boolean())
        throw ProtocolError(fmt::format("response lacks boolean 'ok': {}", line));
    if (!response["ok"].get<bool>()) {
        std::string message = response.contains("error") && response["error"].is_string()
                                  ? response["error"].get<std::string>()
                                  : std::string("(no error message)");
        throw ModelReportedError(message);
    }
    return response;
}

void ExternalModelClient::shutdown()
{
    std::lock_guard lock(mutex_);
    if (pid_ < 0)
        return;
    try {
        write_line(nlohmann::json{{"op", "shutdown"}}.dump());
        read_line();
    } catch (const ModelCallError&) {
        // Child already gone or unresponsive; kill_child has run.
    }
    close_fd(to_child_);
    close_fd(from_child_);
    if (pid_ > 0) {
        // Give the child a moment to exit on its own before forcing it.
        for (int tries = 0; tries < 200; ++tries) {
            if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(10'000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
}

ExternalClassifier::ExternalClassifier(std::shared_ptr<ExternalModelClient> client) : client_(std::move(client))
{
    if (client_->spec().labels.empty())
        throw ValidationError("external classifier must declare its labels");
}

ClassScores ExternalClassifier::classify(const Volume& preprocessed, std::string_view) const
{
    ScratchFile input{client_->scratch_path("in.svol")};
    svol::write(preprocessed, input.path);
    auto response = client_->call({{"op", "classify"}, {"volume", input.path.string()}});
    if (!response.contains("scores") || !response["scores"].is_object())
        throw ProtocolError(fmt::format("classify response lacks 'scores': {}", response.dump()));
    std::map<ClassLabel, double> probs;
    for (const auto& [label, p] : response["scores"].items()) {
        if (!p.is_number())
            throw ProtocolError(fmt::format("score for '{}' is not a number", label));
        probs[label] = p.get<double>();
    }
    std::vector<ClassLabel> declared = labels();
    std::sort(declared.begin(), declared.end());
    std::vector<ClassLabel> got;
    for (const auto& [l, p] : probs)
        got.push_back(l);
    if (got != declared)
        throw ProtocolError(fmt::format("classifier answered labels {} but declared {}", fmt::join(got, ","),
                                        fmt::join(declared, ",")));
    try {
        return ClassScores(std::move(probs));
    } catch (const ValidationError& e) {
        throw ProtocolError(fmt::format("invalid scores from model: {}", e.what()));
    }
}

Volume ExternalSegmenter::segment(const Volume& windowed) const
{
    ScratchFile input{client_->scratch_path("in.svol")};
    ScratchFile output{client_->scratch_path("out.svol")};
    svol::write(windowed, input.path);
    client_->call({{"op", "segment"}, {"volume", input.path.string()}, {"output", output.path.string()}});
    Volume mask = [&] {
        try {
            return svol::read(output.path);
        } catch (const Error& e) {
            throw ProtocolError(fmt::format("model output {} unreadable: {}", output.path.string(), e.what()));
        }
    }();
    if (mask.kind() != PayloadKind::Mask)
        throw ProtocolError("model output is not a mask volume");
    if (mask.dims() != windowed.dims())
        throw ProtocolError("model output dims differ from the input volume");
    return mask;
}

} // namespace segroute
