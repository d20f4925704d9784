#pragma once

// Append-only, length-prefixed, checksummed record log.
//
// File layout (little-endian):
//   header   : "MATECLOG" (8 bytes) | u32 format_version (=1)
//   record*  : u32 body_len | u32 crc32(body) | body
//   body     : u8 record_type | payload (body_len - 1 bytes)
//
// Recovery replays records in order. A trailing record that is incomplete or
// fails its checksum is a torn write: it is truncated away with a warning. A
// checksum failure anywhere before the tail raises Error("CorruptRecord").

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace matec {

struct LogRecord {
    std::uint8_t type = 0;
    std::string payload;
    std::uint64_t offset = 0;
};

struct RecoveryReport {
    std::size_t records = 0;
    bool torn_tail_dropped = false;
    std::uint64_t dropped_bytes = 0;
};

class RecordLog {
public:
    using Visitor = std::function<void(const LogRecord&)>;

    // Opens or creates `path`, replaying every committed record through `visit`.
    static RecordLog open(const std::filesystem::path& path, const Visitor& visit, RecoveryReport* report = nullptr,
                          bool durable = true);

    RecordLog(RecordLog&& other) noexcept;
    RecordLog& operator=(RecordLog&& other) noexcept;
    RecordLog(const RecordLog&) = delete;
    RecordLog& operator=(const RecordLog&) = delete;
    ~RecordLog();

    // Returns the record's offset once it is on disk (fdatasync when durable).
    std::uint64_t append(std::uint8_t type, std::string_view payload);

    // Atomically replaces the log with `records` (write temp file, rename).
    void rewrite(const std::vector<std::pair<std::uint8_t, std::string>>& records);

    const std::filesystem::path& path() const { return path_; }
    std::uint64_t size_bytes() const;

private:
    RecordLog(std::filesystem::path path, int fd, bool durable);

    std::filesystem::path path_;
    int fd_ = -1;
    bool durable_ = true;
    std::uint64_t end_ = 0;
    std::unique_ptr<std::mutex> mutex_;
};

std::uint32_t crc32_of(std::string_view bytes);

// Little-endian primitive encoding used by record payloads.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void str(std::string_view s);
    std::string take() { return std::move(out_); }
    const std::string& bytes() const { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view in) : in_(in) {}
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str();
    bool done() const { return in_.empty(); }

private:
    std::string_view take(std::size_t n);
    std::string_view in_;
};

} // namespace matec
