#include "matec/record_log.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <spdlog/spdlog.h>
#include <zlib.h>

#include "matec/error.hpp"

namespace matec {

namespace {

constexpr std::string_view kMagic = "MATECLOG";
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 12;
constexpr std::size_t kFrameSize = 8;

Error io_error(const std::string& what, const std::filesystem::path& path) {
    return Error("StorageError", what + " " + path.string() + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view bytes, const std::filesystem::path& path) {
    while (!bytes.empty()) {
        const auto n = ::write(fd, bytes.data(), bytes.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw io_error("write failed for", path);
        }
        bytes.remove_prefix(static_cast<size_t>(n));
    }
}

std::string read_file(int fd, const std::filesystem::path& path) {
    std::string data;
    char buf[1 << 16];
    ::lseek(fd, 0, SEEK_SET);
    for (;;) {
        const auto n = ::read(fd, buf, sizeof buf);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw io_error("read failed for", path);
        }
        if (n == 0) break;
        data.append(buf, static_cast<size_t>(n));
    }
    return data;
}

std::string header_bytes() {
    ByteWriter w;
    std::string h(kMagic);
    w.u32(kFormatVersion);
    return h + w.take();
}

std::uint32_t load_u32(std::string_view s, size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
    return v;
}

std::string frame(std::uint8_t type, std::string_view payload) {
    std::string body;
    body.reserve(payload.size() + 1);
    body.push_back(static_cast<char>(type));
    body.append(payload);
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(body.size()));
    w.u32(crc32_of(body));
    return w.take() + body;
}

} // namespace

std::uint32_t crc32_of(std::string_view bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

RecordLog::RecordLog(std::filesystem::path path, int fd, bool durable)
    : path_(std::move(path)), fd_(fd), durable_(durable), mutex_(std::make_unique<std::mutex>()) {}

RecordLog::RecordLog(RecordLog&& other) noexcept
    : path_(std::move(other.path_)), fd_(std::exchange(other.fd_, -1)), durable_(other.durable_), end_(other.end_),
      mutex_(std::move(other.mutex_)) {}

RecordLog& RecordLog::operator=(RecordLog&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = std::exchange(other.fd_, -1);
        durable_ = other.durable_;
        end_ = other.end_;
        mutex_ = std::move(other.mutex_);
    }
    return *this;
}

RecordLog::~RecordLog() {
    if (fd_ >= 0) ::close(fd_);
}

RecordLog RecordLog::open(const std::filesystem::path& path, const Visitor& visit, RecoveryReport* report,
                          bool durable) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw io_error("cannot open", path);
    RecordLog log(path, fd, durable);

    const std::string data = read_file(fd, path);
    RecoveryReport local;
    RecoveryReport& rep = report ? *report : local;
    rep = {};

    if (data.size() < kHeaderSize) {
        // Empty, or a header torn before the first commit.
        if (!data.empty()) {
            rep.torn_tail_dropped = true;
            rep.dropped_bytes = data.size();
            spdlog::warn("record log {}: discarding torn header ({} bytes)", path.string(), data.size());
        }
        if (::ftruncate(fd, 0) != 0) throw io_error("cannot truncate", path);
        ::lseek(fd, 0, SEEK_SET);
        write_all(fd, header_bytes(), path);
        if (durable && ::fdatasync(fd) != 0) throw io_error("cannot sync", path);
        log.end_ = kHeaderSize;
        return log;
    }
    if (std::string_view(data).substr(0, kMagic.size()) != kMagic || load_u32(data, 8) != kFormatVersion) {
        throw Error("CorruptRecord", "record log " + path.string() + ": bad header");
    }

    size_t pos = kHeaderSize;
    while (pos < data.size()) {
        const size_t remaining = data.size() - pos;
        bool torn = remaining < kFrameSize;
        std::uint32_t len = 0;
        if (!torn) {
            len = load_u32(data, pos);
            torn = len == 0 || remaining - kFrameSize < len;
        }
        if (!torn) {
            const std::string_view body(data.data() + pos + kFrameSize, len);
            if (crc32_of(body) != load_u32(data, pos + 4)) {
                if (pos + kFrameSize + len == data.size()) {
                    torn = true;
                } else {
                    throw Error("CorruptRecord", "record log " + path.string() + ": checksum mismatch at offset " +
                                                     std::to_string(pos) + " (record " +
                                                     std::to_string(rep.records + 1) + ")");
                }
            } else {
                visit(LogRecord{static_cast<std::uint8_t>(body[0]), std::string(body.substr(1)), pos});
                ++rep.records;
                pos += kFrameSize + len;
                continue;
            }
        }
        rep.torn_tail_dropped = true;
        rep.dropped_bytes = data.size() - pos;
        spdlog::warn("record log {}: dropping torn tail record at offset {} ({} bytes)", path.string(), pos,
                     rep.dropped_bytes);
        if (::ftruncate(fd, static_cast<off_t>(pos)) != 0) throw io_error("cannot truncate", path);
        if (durable && ::fdatasync(fd) != 0) throw io_error("cannot sync", path);
        break;
    }
    log.end_ = pos;
    return log;
}

std::uint64_t RecordLog::append(std::uint8_t type, std::string_view payload) {
    const auto bytes = frame(type, payload);
    std::lock_guard lock(*mutex_);
    const auto offset = end_;
    if (::lseek(fd_, static_cast<off_t>(end_), SEEK_SET) < 0) throw io_error("cannot seek", path_);
    write_all(fd_, bytes, path_);
    if (durable_ && ::fdatasync(fd_) != 0) throw io_error("cannot sync", path_);
    end_ += bytes.size();
    return offset;
}

void RecordLog::rewrite(const std::vector<std::pair<std::uint8_t, std::string>>& records) {
    std::lock_guard lock(*mutex_);
    auto tmp = path_;
    tmp += ".compact";
    const int fd = ::open(tmp.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw io_error("cannot open", tmp);
    std::string data = header_bytes();
    for (const auto& [type, payload] : records) data += frame(type, payload);
    try {
        write_all(fd, data, tmp);
        if (::fsync(fd) != 0) throw io_error("cannot sync", tmp);
    } catch (...) {
        ::close(fd);
        throw;
    }
    if (::rename(tmp.c_str(), path_.c_str()) != 0) {
        ::close(fd);
        throw io_error("cannot rename onto", path_);
    }
    ::close(fd_);
    fd_ = fd;
    end_ = data.size();
}

std::uint64_t RecordLog::size_bytes() const {
    std::lock_guard lock(*mutex_);
    return end_;
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void ByteWriter::f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
}

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
}

std::string_view ByteReader::take(std::size_t n) {
    if (in_.size() < n) throw Error("CorruptRecord", "record payload truncated");
    auto out = in_.substr(0, n);
    in_.remove_prefix(n);
    return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t ByteReader::u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
}

std::uint64_t ByteReader::u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
}

double ByteReader::f64() {
    const auto bits = u64();
    double v = 0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string ByteReader::str() { return std::string(take(u32())); }

} // namespace matec
