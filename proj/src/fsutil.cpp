#include "noteeline/fsutil.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "noteeline/errors.hpp"

namespace noteeline::fsutil {

namespace fs = std::filesystem;

namespace {

std::string temp_suffix() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    return ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++) + "." +
           std::to_string(rd() & 0xFFFFF);
}

[[noreturn]] void io_error(const std::string& what, const fs::path& p) {
    throw Error(ErrorCode::IoError, what + " " + p.string() + ": " + std::strerror(errno));
}

}  // namespace

void write_file_atomic(const fs::path& target, std::string_view content, const BeforeRenameHook& before_rename) {
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + target.parent_path().string() + ": " + ec.message());
    }
    fs::path temp = target;
    temp += temp_suffix();

    int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_error("cannot open", temp);
    const char* data = content.data();
    std::size_t left = content.size();
    while (left > 0) {
        ssize_t n = ::write(fd, data, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            fs::remove(temp, ec);
            io_error("cannot write", temp);
        }
        data += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
        fs::remove(temp, ec);
        io_error("cannot sync", temp);
    }

    if (before_rename) {
        // A throwing hook models a crash: the temp file stays behind, the target is untouched.
        before_rename(temp);
    }

    fs::rename(temp, target, ec);
    if (ec) {
        fs::remove(temp, ec);
        throw Error(ErrorCode::IoError, "cannot rename onto " + target.string());
    }
}

std::string read_file(const fs::path& path) {
    std::error_code ec;
    if (!fs::exists(path, ec)) throw Error(ErrorCode::NotFound, "no such file: " + path.string());
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    return ss.str();
}

}  // namespace noteeline::fsutil
