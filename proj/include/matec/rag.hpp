#pragma once

// Document chunking, embedding and exact top-k cosine retrieval.

#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "matec/embedder.hpp"

namespace matec {

struct ChunkId {
    std::string doc_id;
    int ordinal = 0;

    std::string to_string() const { return doc_id + "#" + std::to_string(ordinal); }
    auto operator<=>(const ChunkId&) const = default;
};

struct Chunk {
    ChunkId chunk_id;
    std::string text;
    std::vector<double> vector; // unit L2 norm
    std::string source_title;
    std::size_t offset = 0;     // start position of `text` in the source body

    bool operator==(const Chunk&) const = default;
};

struct RetrievedChunk {
    Chunk chunk;
    double score = 0; // cosine similarity
    int rank = 1;     // 1-based
};

struct ChunkSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Sliding-window split: window k starts near k*(size-overlap) and spans at
// most `size` chars. Both cuts snap back to whitespace when one is in reach,
// and every window reaches the start of the next, so dropping the overlap
// from each chunk and concatenating reconstructs the body.
// Throws Error("BadChunkParams") unless 0 <= overlap < size.
std::vector<ChunkSpan> plan_chunks(std::string_view body, std::size_t size, std::size_t overlap);

class VectorStore {
public:
    explicit VectorStore(std::shared_ptr<const Embedder> embedder);

    // Opens (or creates) a store persisted at `file`. Every mutation is
    // appended to the file before it becomes visible.
    static VectorStore open(const std::filesystem::path& file, std::shared_ptr<const Embedder> embedder);

    VectorStore(VectorStore&&) noexcept;
    VectorStore& operator=(VectorStore&&) noexcept;
    ~VectorStore();

    // Replaces any previous chunks of `doc_id`. Returns the number of chunks.
    // Errors: EmptyDocument, BadChunkParams, BackendError (from the embedder).
    std::size_t ingest(const std::string& doc_id, const std::string& title, std::string_view body,
                       std::size_t chunk_size_chars = 1000, std::size_t overlap_chars = 200);

    // Exact top-k by cosine; ties by ascending chunk id. Errors: EmptyStore,
    // BadQuery (k < 1).
    std::vector<RetrievedChunk> query(std::string_view text, int k) const;
    std::vector<RetrievedChunk> query_vector(const std::vector<double>& v, int k) const;

    std::size_t size() const;
    std::vector<Chunk> snapshot() const;

    // Rewrites the backing file with only live chunks.
    void compact();

    const Embedder& embedder() const { return *embedder_; }

private:
    struct Persistence;

    std::shared_ptr<const Embedder> embedder_;
    mutable std::unique_ptr<std::shared_mutex> mutex_;
    std::vector<Chunk> chunks_; // ordered by chunk id
    std::unique_ptr<Persistence> persistence_;
};

} // namespace matec
