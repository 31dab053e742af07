#pragma once

#include "courseassist/common.hpp"
#include "courseassist/embedding.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace courseassist {

enum class DocumentKind { lecture, homework, quiz, exam, other };

std::string_view to_string(DocumentKind kind);
DocumentKind parse_document_kind(std::string_view text);

using KindFilter = std::optional<std::set<DocumentKind>>;

inline constexpr std::size_t kDefaultChunkSize = 4000;
inline constexpr std::size_t kDefaultTopK = 2;

struct Document {
    std::string id;
    std::string course_id;
    std::string title;
    DocumentKind kind = DocumentKind::other;
    std::optional<std::string> source_uri;
    std::string raw_text;
    Timestamp uploaded_at{};
    int version = 1;
    bool active = true;
};

/// Half-open range of code points in a document's raw text.
struct CharRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - start; }
    bool operator==(const CharRange&) const = default;
};

struct ChunkDescriptor {
    std::size_t ordinal = 0;
    CharRange range;
    std::string text;
};

struct Chunk {
    std::string id;
    std::string document_id;
    std::size_t ordinal = 0;
    CharRange range;
    std::string text;
    EmbeddingVector embedding;
};

struct RetrievalResult {
    std::string chunk_id;
    std::string document_id;
    double score = 0.0;
    int rank = 0;

    bool operator==(const RetrievalResult&) const = default;
};

/// Fixed-size split by code points, no overlap. Concatenating the returned
/// texts reproduces `raw_text`; every chunk but the last has exactly
/// `chunk_size` code points.
std::vector<ChunkDescriptor> chunk_document(std::string_view raw_text,
                                            std::size_t chunk_size = kDefaultChunkSize);

struct DocumentInput {
    std::string course_id;
    std::string title;
    DocumentKind kind = DocumentKind::other;
    std::string raw_text;
    std::optional<std::string> source_uri;
    std::optional<Timestamp> uploaded_at;
};

/// Per-course vector index over educator materials.
///
/// Each course index is an immutable snapshot; retrievals take a reference
/// to the current snapshot and never block each other, ingestion builds a
/// new snapshot under the course's writer lock and publishes it in one swap.
/// Re-ingesting a title within a course retires the previous version.
class KnowledgeStore {
public:
    /// Called with the new document, its chunks and the ids of documents it
    /// retires, before the snapshot is published. Throwing aborts ingestion.
    using CommitHook = std::function<void(const Document&, const std::vector<Chunk>&,
                                          const std::vector<std::string>& retired_ids)>;

    explicit KnowledgeStore(std::shared_ptr<const EmbeddingProvider> provider,
                            std::size_t chunk_size = kDefaultChunkSize);
    ~KnowledgeStore();

    KnowledgeStore(const KnowledgeStore&) = delete;
    KnowledgeStore& operator=(const KnowledgeStore&) = delete;

    void set_commit_hook(CommitHook hook);

    void add_course(const std::string& course_id);
    bool has_course(const std::string& course_id) const;

    std::string ingest_document(const DocumentInput& input);

    /// Loads an already-embedded document (e.g. from storage) without calling
    /// the provider or the commit hook.
    void restore(Document document, std::vector<Chunk> chunks);

    std::vector<RetrievalResult> retrieve(const std::string& course_id, std::string_view query_text,
                                          std::size_t k = kDefaultTopK,
                                          const KindFilter& kind_filter = std::nullopt) const;
    std::vector<RetrievalResult> retrieve_by_vector(const std::string& course_id,
                                                    std::span<const double> query,
                                                    std::size_t k = kDefaultTopK,
                                                    const KindFilter& kind_filter = std::nullopt) const;

    std::optional<Document> document(const std::string& document_id) const;
    std::optional<Chunk> chunk(const std::string& chunk_id) const;
    std::vector<Document> documents(const std::string& course_id, bool include_retired = false) const;
    std::vector<Chunk> chunks_of(const std::string& document_id) const;

    const EmbeddingProvider& provider() const noexcept { return *provider_; }
    std::size_t chunk_size() const noexcept { return chunk_size_; }

private:
    struct CourseIndex;
    struct CourseSlot;

    std::shared_ptr<const CourseIndex> snapshot(const std::string& course_id) const;
    std::shared_ptr<CourseSlot> slot(const std::string& course_id) const;
    std::shared_ptr<CourseSlot> slot_or_create(const std::string& course_id);
    std::string next_document_id();

    std::shared_ptr<const EmbeddingProvider> provider_;
    std::size_t chunk_size_;
    CommitHook commit_hook_;

    mutable std::mutex courses_mutex_;
    std::map<std::string, std::shared_ptr<CourseSlot>> courses_;
    std::atomic<std::uint64_t> next_id_{1};
};

} // namespace courseassist
