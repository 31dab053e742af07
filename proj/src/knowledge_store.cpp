#include "courseassist/knowledge_store.hpp"

#include <algorithm>
#include <cstdio>

namespace courseassist {

std::string_view to_string(DocumentKind kind) {
    switch (kind) {
    case DocumentKind::lecture: return "lecture";
    case DocumentKind::homework: return "homework";
    case DocumentKind::quiz: return "quiz";
    case DocumentKind::exam: return "exam";
    case DocumentKind::other: return "other";
    }
    return "other";
}

DocumentKind parse_document_kind(std::string_view text) {
    const auto t = to_lower(trim(text));
    if (t == "lecture") return DocumentKind::lecture;
    if (t == "homework") return DocumentKind::homework;
    if (t == "quiz") return DocumentKind::quiz;
    if (t == "exam") return DocumentKind::exam;
    if (t == "other") return DocumentKind::other;
    throw Error(ErrorCode::validation, "unknown document kind: " + std::string(text));
}

std::vector<ChunkDescriptor> chunk_document(std::string_view raw_text, std::size_t chunk_size) {
    if (chunk_size == 0) throw Error(ErrorCode::validation, "chunk_size must be >= 1");
    std::vector<ChunkDescriptor> out;
    std::size_t byte_start = 0;
    std::size_t cp_start = 0;
    std::size_t cp_count = 0;
    for (std::size_t i = 0; i <= raw_text.size(); ++i) {
        const bool at_end = i == raw_text.size();
        const bool boundary = at_end || (static_cast<unsigned char>(raw_text[i]) & 0xC0) != 0x80;
        if (!boundary) continue;
        if (cp_count == chunk_size || (at_end && cp_count > 0)) {
            out.push_back({out.size(), {cp_start, cp_start + cp_count},
                           std::string(raw_text.substr(byte_start, i - byte_start))});
            byte_start = i;
            cp_start += cp_count;
            cp_count = 0;
        }
        if (!at_end) ++cp_count;
    }
    return out;
}

struct KnowledgeStore::CourseIndex {
    struct Entry {
        std::shared_ptr<const Chunk> chunk;
        DocumentKind kind;
    };
    std::map<std::string, std::shared_ptr<const Document>> documents;
    std::map<std::string, std::vector<std::shared_ptr<const Chunk>>> chunks_by_document;
    /// Active chunks only.
    std::vector<Entry> entries;
};

struct KnowledgeStore::CourseSlot {
    std::mutex writer;
    mutable std::mutex publish;
    std::shared_ptr<const CourseIndex> current = std::make_shared<CourseIndex>();

    std::shared_ptr<const CourseIndex> load() const {
        std::lock_guard lock(publish);
        return current;
    }
    void store(std::shared_ptr<const CourseIndex> next) {
        std::lock_guard lock(publish);
        current = std::move(next);
    }
};

KnowledgeStore::KnowledgeStore(std::shared_ptr<const EmbeddingProvider> provider,
                               std::size_t chunk_size)
    : provider_(std::move(provider)), chunk_size_(chunk_size) {
    if (!provider_) throw Error(ErrorCode::invalid_config, "knowledge store needs an embedding provider");
    if (chunk_size_ == 0) throw Error(ErrorCode::invalid_config, "chunk_size must be >= 1");
}

KnowledgeStore::~KnowledgeStore() = default;

void KnowledgeStore::set_commit_hook(CommitHook hook) { commit_hook_ = std::move(hook); }

void KnowledgeStore::add_course(const std::string& course_id) { slot_or_create(course_id); }

bool KnowledgeStore::has_course(const std::string& course_id) const {
    return slot(course_id) != nullptr;
}

std::shared_ptr<KnowledgeStore::CourseSlot> KnowledgeStore::slot(const std::string& course_id) const {
    std::lock_guard lock(courses_mutex_);
    auto it = courses_.find(course_id);
    return it == courses_.end() ? nullptr : it->second;
}

std::shared_ptr<KnowledgeStore::CourseSlot> KnowledgeStore::slot_or_create(const std::string& course_id) {
    std::lock_guard lock(courses_mutex_);
    auto& s = courses_[course_id];
    if (!s) s = std::make_shared<CourseSlot>();
    return s;
}

std::shared_ptr<const KnowledgeStore::CourseIndex>
KnowledgeStore::snapshot(const std::string& course_id) const {
    auto s = slot(course_id);
    if (!s) throw Error(ErrorCode::not_found, "unknown course: " + course_id);
    return s->load();
}

std::string KnowledgeStore::next_document_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc-%08llu",
                  static_cast<unsigned long long>(next_id_.fetch_add(1)));
    return buf;
}

namespace {

std::string chunk_id_for(const std::string& document_id, std::size_t ordinal) {
    return document_id + ":" + std::to_string(ordinal);
}

} // namespace

std::string KnowledgeStore::ingest_document(const DocumentInput& input) {
    if (input.raw_text.empty()) throw Error(ErrorCode::validation, "document text is empty");
    if (!utf8::is_valid(input.raw_text)) {
        throw Error(ErrorCode::validation, "document text is not valid UTF-8");
    }
    if (input.course_id.empty()) throw Error(ErrorCode::validation, "course id is empty");

    auto doc = std::make_shared<Document>();
    doc->id = next_document_id();
    doc->course_id = input.course_id;
    doc->title = input.title;
    doc->kind = input.kind;
    doc->source_uri = input.source_uri;
    doc->raw_text = input.raw_text;
    doc->uploaded_at = input.uploaded_at.value_or(now_utc());

    // Embedding happens outside any lock; a failure here leaves the index untouched.
    std::vector<Chunk> chunks;
    for (auto& d : chunk_document(input.raw_text, chunk_size_)) {
        Chunk c;
        c.id = chunk_id_for(doc->id, d.ordinal);
        c.document_id = doc->id;
        c.ordinal = d.ordinal;
        c.range = d.range;
        c.embedding = provider_->embed(d.text);
        c.text = std::move(d.text);
        chunks.push_back(std::move(c));
    }

    auto s = slot_or_create(input.course_id);
    std::lock_guard writer(s->writer);
    auto current = s->load();
    auto next = std::make_shared<CourseIndex>(*current);

    std::vector<std::string> retired;
    for (auto& [id, existing] : next->documents) {
        if (existing->active && existing->title == doc->title) {
            doc->version = std::max(doc->version, existing->version + 1);
            auto copy = std::make_shared<Document>(*existing);
            copy->active = false;
            existing = copy;
            retired.push_back(id);
        } else if (existing->title == doc->title) {
            doc->version = std::max(doc->version, existing->version + 1);
        }
    }
    if (!retired.empty()) {
        std::erase_if(next->entries, [&](const CourseIndex::Entry& e) {
            return std::find(retired.begin(), retired.end(), e.chunk->document_id) != retired.end();
        });
    }

    if (commit_hook_) commit_hook_(*doc, chunks, retired);

    auto& owned = next->chunks_by_document[doc->id];
    for (auto& c : chunks) {
        auto shared = std::make_shared<const Chunk>(std::move(c));
        owned.push_back(shared);
        next->entries.push_back({shared, doc->kind});
    }
    next->documents[doc->id] = doc;
    s->store(std::move(next));
    return doc->id;
}

void KnowledgeStore::restore(Document document, std::vector<Chunk> chunks) {
    auto s = slot_or_create(document.course_id);
    std::lock_guard writer(s->writer);
    auto next = std::make_shared<CourseIndex>(*s->load());
    auto doc = std::make_shared<const Document>(std::move(document));
    auto& owned = next->chunks_by_document[doc->id];
    std::sort(chunks.begin(), chunks.end(),
              [](const Chunk& a, const Chunk& b) { return a.ordinal < b.ordinal; });
    for (auto& c : chunks) {
        if (c.embedding.size() != provider_->dimension()) {
            throw Error(ErrorCode::dimension_mismatch,
                        "stored chunk " + c.id + " has dimension " + std::to_string(c.embedding.size()));
        }
        auto shared = std::make_shared<const Chunk>(std::move(c));
        owned.push_back(shared);
        if (doc->active) next->entries.push_back({shared, doc->kind});
    }
    next->documents[doc->id] = doc;

    // keep generated ids ahead of restored ones
    unsigned long long n = 0;
    if (std::sscanf(doc->id.c_str(), "doc-%llu", &n) == 1) {
        auto cur = next_id_.load();
        while (cur <= n && !next_id_.compare_exchange_weak(cur, n + 1)) {
        }
    }
    s->store(std::move(next));
}

std::vector<RetrievalResult> KnowledgeStore::retrieve(const std::string& course_id,
                                                      std::string_view query_text, std::size_t k,
                                                      const KindFilter& kind_filter) const {
    auto index = snapshot(course_id);
    if (k == 0) throw Error(ErrorCode::validation, "k must be >= 1");
    if (index->entries.empty()) return {};
    const auto query = provider_->embed(query_text);
    return retrieve_by_vector(course_id, query, k, kind_filter);
}

std::vector<RetrievalResult> KnowledgeStore::retrieve_by_vector(const std::string& course_id,
                                                                std::span<const double> query,
                                                                std::size_t k,
                                                                const KindFilter& kind_filter) const {
    auto index = snapshot(course_id);
    if (k == 0) throw Error(ErrorCode::validation, "k must be >= 1");

    struct Scored {
        double score;
        const Chunk* chunk;
    };
    std::vector<Scored> scored;
    scored.reserve(index->entries.size());
    for (const auto& e : index->entries) {
        if (kind_filter && !kind_filter->contains(e.kind)) continue;
        scored.push_back({cosine_similarity(query, e.chunk->embedding), e.chunk.get()});
    }
    const auto better = [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.chunk->document_id != b.chunk->document_id) return a.chunk->document_id < b.chunk->document_id;
        return a.chunk->ordinal < b.chunk->ordinal;
    };
    const auto n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), better);

    std::vector<RetrievalResult> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({scored[i].chunk->id, scored[i].chunk->document_id, scored[i].score,
                       static_cast<int>(i + 1)});
    }
    return out;
}

std::optional<Document> KnowledgeStore::document(const std::string& document_id) const {
    std::vector<std::shared_ptr<CourseSlot>> slots;
    {
        std::lock_guard lock(courses_mutex_);
        for (auto& [_, s] : courses_) slots.push_back(s);
    }
    for (auto& s : slots) {
        auto index = s->load();
        if (auto it = index->documents.find(document_id); it != index->documents.end()) {
            return *it->second;
        }
    }
    return std::nullopt;
}

std::vector<Chunk> KnowledgeStore::chunks_of(const std::string& document_id) const {
    auto doc = document(document_id);
    if (!doc) return {};
    auto index = snapshot(doc->course_id);
    std::vector<Chunk> out;
    if (auto it = index->chunks_by_document.find(document_id); it != index->chunks_by_document.end()) {
        for (auto& c : it->second) out.push_back(*c);
    }
    return out;
}

std::optional<Chunk> KnowledgeStore::chunk(const std::string& chunk_id) const {
    const auto colon = chunk_id.rfind(':');
    if (colon == std::string::npos) return std::nullopt;
    for (auto& c : chunks_of(chunk_id.substr(0, colon))) {
        if (c.id == chunk_id) return c;
    }
    return std::nullopt;
}

std::vector<Document> KnowledgeStore::documents(const std::string& course_id, bool include_retired) const {
    auto index = snapshot(course_id);
    std::vector<Document> out;
    for (auto& [_, d] : index->documents) {
        if (d->active || include_retired) out.push_back(*d);
    }
    return out;
}

} // namespace courseassist
