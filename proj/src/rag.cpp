#include "matec/rag.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <numeric>

#include "matec/error.hpp"
#include "matec/record_log.hpp"

namespace matec {

namespace {

enum : std::uint8_t { kMetaRecord = 0, kChunkRecord = 1, kDropDocRecord = 2 };

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string encode_chunk(const Chunk& c) {
    ByteWriter w;
    w.str(c.chunk_id.doc_id);
    w.u32(static_cast<std::uint32_t>(c.chunk_id.ordinal));
    w.u64(c.offset);
    w.str(c.source_title);
    w.str(c.text);
    w.u32(static_cast<std::uint32_t>(c.vector.size()));
    for (double x : c.vector) w.f64(x);
    return w.take();
}

Chunk decode_chunk(std::string_view payload) {
    ByteReader r(payload);
    Chunk c;
    c.chunk_id.doc_id = r.str();
    c.chunk_id.ordinal = static_cast<int>(r.u32());
    c.offset = r.u64();
    c.source_title = r.str();
    c.text = r.str();
    c.vector.resize(r.u32());
    for (auto& x : c.vector) x = r.f64();
    return c;
}

bool by_id(const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; }

} // namespace

std::vector<ChunkSpan> plan_chunks(std::string_view body, std::size_t size, std::size_t overlap) {
    if (size == 0 || overlap >= size) {
        throw Error("BadChunkParams", "need 0 <= overlap_chars < chunk_size_chars");
    }
    const size_t n = body.size();
    const size_t stride = size - overlap;

    // Window starts: nominal k*stride, moved back to just after a whitespace
    // char when one lies within `overlap` chars. Bounding the look-back by the
    // overlap keeps every window long enough to reach the next start.
    std::vector<size_t> starts{0};
    for (size_t nominal = stride; nominal < n; nominal += stride) {
        size_t s = nominal;
        const size_t floor = std::max(starts.back() + 1, nominal - std::min(nominal, overlap));
        for (size_t p = nominal; p > floor; --p) {
            if (is_space(body[p - 1])) {
                s = p;
                break;
            }
        }
        starts.push_back(s);
    }

    std::vector<ChunkSpan> spans;
    for (size_t k = 0; k < starts.size(); ++k) {
        const size_t s = starts[k];
        size_t e = std::min(s + size, n);
        if (e < n) {
            const size_t must_reach = k + 1 < starts.size() ? starts[k + 1] : e;
            for (size_t p = e; p >= must_reach && p > s; --p) {
                if (is_space(body[p])) {
                    e = p;
                    break;
                }
            }
        }
        spans.push_back({s, e});
    }
    return spans;
}

struct VectorStore::Persistence {
    RecordLog log;
};

VectorStore::VectorStore(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)), mutex_(std::make_unique<std::shared_mutex>()) {
    if (!embedder_) throw Error("BadArgument", "vector store needs an embedder");
}

VectorStore::VectorStore(VectorStore&&) noexcept = default;
VectorStore& VectorStore::operator=(VectorStore&&) noexcept = default;
VectorStore::~VectorStore() = default;

VectorStore VectorStore::open(const std::filesystem::path& file, std::shared_ptr<const Embedder> embedder) {
    VectorStore store(std::move(embedder));
    bool saw_meta = false;
    std::map<ChunkId, Chunk> live;
    auto log = RecordLog::open(file, [&](const LogRecord& rec) {
        ByteReader r(rec.payload);
        switch (rec.type) {
        case kMetaRecord: {
            const auto dim = r.u32();
            const auto id = r.str();
            if (dim != store.embedder_->dimension() || id != store.embedder_->id()) {
                throw Error("EmbedderMismatch", "store " + file.string() + " was built with embedder " + id);
            }
            saw_meta = true;
            break;
        }
        case kChunkRecord: {
            auto c = decode_chunk(rec.payload);
            live[c.chunk_id] = std::move(c);
            break;
        }
        case kDropDocRecord: {
            const auto doc = r.str();
            std::erase_if(live, [&](const auto& kv) { return kv.first.doc_id == doc; });
            break;
        }
        default:
            throw Error("CorruptRecord", "unknown vector store record type " + std::to_string(rec.type));
        }
    });
    if (!saw_meta) {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(store.embedder_->dimension()));
        w.str(store.embedder_->id());
        log.append(kMetaRecord, w.bytes());
    }
    for (auto& [id, c] : live) store.chunks_.push_back(std::move(c));
    store.persistence_ = std::make_unique<Persistence>(Persistence{std::move(log)});
    return store;
}

std::size_t VectorStore::ingest(const std::string& doc_id, const std::string& title, std::string_view body,
                                std::size_t chunk_size_chars, std::size_t overlap_chars) {
    if (body.empty()) throw Error("EmptyDocument", "document '" + doc_id + "' has an empty body");
    if (doc_id.empty()) throw Error("EmptyDocument", "document id must be nonempty");
    const auto spans = plan_chunks(body, chunk_size_chars, overlap_chars);

    // Embedding happens before taking the write lock; readers keep seeing the
    // previous version until the swap below.
    std::vector<Chunk> fresh;
    fresh.reserve(spans.size());
    for (size_t i = 0; i < spans.size(); ++i) {
        Chunk c;
        c.chunk_id = {doc_id, static_cast<int>(i)};
        c.text = std::string(body.substr(spans[i].begin, spans[i].end - spans[i].begin));
        c.offset = spans[i].begin;
        c.source_title = title;
        c.vector = embedder_->embed(c.text);
        fresh.push_back(std::move(c));
    }

    std::unique_lock lock(*mutex_);
    if (persistence_) {
        ByteWriter w;
        w.str(doc_id);
        persistence_->log.append(kDropDocRecord, w.bytes());
        for (const auto& c : fresh) persistence_->log.append(kChunkRecord, encode_chunk(c));
    }
    std::erase_if(chunks_, [&](const Chunk& c) { return c.chunk_id.doc_id == doc_id; });
    const auto count = fresh.size();
    for (auto& c : fresh) chunks_.push_back(std::move(c));
    std::sort(chunks_.begin(), chunks_.end(), by_id);
    return count;
}

std::vector<RetrievedChunk> VectorStore::query(std::string_view text, int k) const {
    if (k < 1) throw Error("BadQuery", "k must be >= 1");
    return query_vector(embedder_->embed(text), k);
}

std::vector<RetrievedChunk> VectorStore::query_vector(const std::vector<double>& v, int k) const {
    if (k < 1) throw Error("BadQuery", "k must be >= 1");
    std::shared_lock lock(*mutex_);
    if (chunks_.empty()) throw Error("EmptyStore", "vector store has no chunks");

    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(chunks_.size());
    for (size_t i = 0; i < chunks_.size(); ++i) {
        scored.emplace_back(std::clamp(dot(v, chunks_[i].vector), -1.0, 1.0), i);
    }
    // chunks_ is sorted by id, so index order is the tie-break order.
    const auto take = std::min(static_cast<size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });

    std::vector<RetrievedChunk> out;
    out.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        out.push_back(RetrievedChunk{chunks_[scored[i].second], scored[i].first, static_cast<int>(i + 1)});
    }
    return out;
}

std::size_t VectorStore::size() const {
    std::shared_lock lock(*mutex_);
    return chunks_.size();
}

std::vector<Chunk> VectorStore::snapshot() const {
    std::shared_lock lock(*mutex_);
    return chunks_;
}

void VectorStore::compact() {
    std::unique_lock lock(*mutex_);
    if (!persistence_) return;
    std::vector<std::pair<std::uint8_t, std::string>> records;
    ByteWriter meta;
    meta.u32(static_cast<std::uint32_t>(embedder_->dimension()));
    meta.str(embedder_->id());
    records.emplace_back(kMetaRecord, meta.take());
    for (const auto& c : chunks_) records.emplace_back(kChunkRecord, encode_chunk(c));
    persistence_->log.rewrite(records);
}

} // namespace matec
