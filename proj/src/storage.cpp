#include "courseassist/storage.hpp"

#include "json_codec.hpp"

#include <sqlite3.h>

#include <cstring>

namespace courseassist {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS courses (
    id TEXT PRIMARY KEY,
    config TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS documents (
    id TEXT PRIMARY KEY,
    course_id TEXT NOT NULL,
    title TEXT NOT NULL,
    kind TEXT NOT NULL,
    source_uri TEXT,
    raw_text TEXT NOT NULL,
    uploaded_at TEXT NOT NULL,
    version INTEGER NOT NULL,
    active INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS chunks (
    id TEXT PRIMARY KEY,
    document_id TEXT NOT NULL REFERENCES documents(id),
    ordinal INTEGER NOT NULL,
    range_start INTEGER NOT NULL,
    range_end INTEGER NOT NULL,
    text TEXT NOT NULL,
    embedding BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS conversations (
    id TEXT PRIMARY KEY,
    course_id TEXT NOT NULL,
    user_ref TEXT NOT NULL,
    user_kind TEXT NOT NULL,
    mode_at_start TEXT NOT NULL,
    started_at TEXT NOT NULL,
    last_activity_at TEXT NOT NULL,
    shared INTEGER NOT NULL DEFAULT 0
);
CREATE INDEX IF NOT EXISTS conversations_by_course ON conversations(course_id, started_at, id);
CREATE TABLE IF NOT EXISTS messages (
    conversation_id TEXT NOT NULL REFERENCES conversations(id),
    seq INTEGER NOT NULL,
    body TEXT NOT NULL,
    PRIMARY KEY (conversation_id, seq)
);
)sql";

[[noreturn]] void fail(sqlite3* db, const std::string& what) {
    throw Error(ErrorCode::storage, what + ": " + (db ? sqlite3_errmsg(db) : "no database"));
}

} // namespace

class Storage::Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) fail(db, "prepare");
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind_null(int i) {
        check(sqlite3_bind_null(stmt_, i));
        return *this;
    }
    Statement& bind_blob(int i, const void* data, std::size_t n) {
        check(sqlite3_bind_blob(stmt_, i, data, static_cast<int>(n), SQLITE_TRANSIENT));
        return *this;
    }

    /// True while rows are available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        fail(db_, "step");
    }
    void run() {
        while (step()) {
        }
    }

    std::string text(int col) const {
        auto p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p),
                               static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string{};
    }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
    std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::vector<double> doubles(int col) const {
        const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col));
        std::vector<double> out(n / sizeof(double));
        if (n) std::memcpy(out.data(), sqlite3_column_blob(stmt_, col), out.size() * sizeof(double));
        return out;
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) fail(db_, "bind");
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

class Storage::Transaction {
public:
    explicit Transaction(Storage& s) : s_(s) { s_.exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(s_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        s_.exec("COMMIT");
        done_ = true;
    }

private:
    Storage& s_;
    bool done_ = false;
};

Storage::Storage(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        throw Error(ErrorCode::storage, "cannot open database " + path + ": " + msg);
    }
    exec("PRAGMA foreign_keys = ON");
    exec(kSchema);
}

Storage::~Storage() { sqlite3_close(db_); }

void Storage::exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw Error(ErrorCode::storage, msg);
    }
}

void Storage::save_course_config(const CourseConfig& config) {
    std::lock_guard lock(mutex_);
    Statement(db_, "INSERT INTO courses(id, config) VALUES(?1, ?2) "
                   "ON CONFLICT(id) DO UPDATE SET config = excluded.config")
        .bind(1, config.course_id)
        .bind(2, course_config_to_json(config))
        .run();
}

std::vector<CourseConfig> Storage::load_course_configs() {
    std::lock_guard lock(mutex_);
    std::vector<CourseConfig> out;
    Statement st(db_, "SELECT config FROM courses ORDER BY id");
    while (st.step()) out.push_back(course_config_from_json(st.text(0)));
    return out;
}

void Storage::save_document(const Document& d, const std::vector<Chunk>& chunks,
                            const std::vector<std::string>& retired_ids) {
    std::lock_guard lock(mutex_);
    Transaction tx(*this);
    Statement doc(db_, "INSERT INTO documents(id, course_id, title, kind, source_uri, raw_text, "
                       "uploaded_at, version, active) VALUES(?1,?2,?3,?4,?5,?6,?7,?8,?9)");
    doc.bind(1, d.id).bind(2, d.course_id).bind(3, d.title).bind(4, std::string(to_string(d.kind)));
    if (d.source_uri) doc.bind(5, *d.source_uri);
    else doc.bind_null(5);
    doc.bind(6, d.raw_text)
        .bind(7, format_timestamp(d.uploaded_at))
        .bind(8, std::int64_t{d.version})
        .bind(9, std::int64_t{d.active ? 1 : 0})
        .run();
    for (const auto& c : chunks) {
        Statement(db_, "INSERT INTO chunks(id, document_id, ordinal, range_start, range_end, text, "
                       "embedding) VALUES(?1,?2,?3,?4,?5,?6,?7)")
            .bind(1, c.id)
            .bind(2, c.document_id)
            .bind(3, static_cast<std::int64_t>(c.ordinal))
            .bind(4, static_cast<std::int64_t>(c.range.start))
            .bind(5, static_cast<std::int64_t>(c.range.end))
            .bind(6, c.text)
            .bind_blob(7, c.embedding.data(), c.embedding.size() * sizeof(double))
            .run();
    }
    for (const auto& id : retired_ids) {
        Statement(db_, "UPDATE documents SET active = 0 WHERE id = ?1").bind(1, id).run();
    }
    tx.commit();
}

std::vector<std::pair<Document, std::vector<Chunk>>> Storage::load_documents() {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<Document, std::vector<Chunk>>> out;
    Statement st(db_, "SELECT id, course_id, title, kind, source_uri, raw_text, uploaded_at, version, "
                      "active FROM documents ORDER BY id");
    while (st.step()) {
        Document d;
        d.id = st.text(0);
        d.course_id = st.text(1);
        d.title = st.text(2);
        d.kind = parse_document_kind(st.text(3));
        if (!st.is_null(4)) d.source_uri = st.text(4);
        d.raw_text = st.text(5);
        d.uploaded_at = parse_timestamp(st.text(6));
        d.version = static_cast<int>(st.integer(7));
        d.active = st.integer(8) != 0;
        out.emplace_back(std::move(d), std::vector<Chunk>{});
    }
    for (auto& [doc, chunks] : out) {
        Statement cs(db_, "SELECT id, ordinal, range_start, range_end, text, embedding FROM chunks "
                          "WHERE document_id = ?1 ORDER BY ordinal");
        cs.bind(1, doc.id);
        while (cs.step()) {
            Chunk c;
            c.id = cs.text(0);
            c.document_id = doc.id;
            c.ordinal = static_cast<std::size_t>(cs.integer(1));
            c.range = {static_cast<std::size_t>(cs.integer(2)), static_cast<std::size_t>(cs.integer(3))};
            c.text = cs.text(4);
            c.embedding = cs.doubles(5);
            chunks.push_back(std::move(c));
        }
    }
    return out;
}

void Storage::write_conversation_locked(const Conversation& c) {
    Statement(db_, "INSERT INTO conversations(id, course_id, user_ref, user_kind, mode_at_start, "
                   "started_at, last_activity_at, shared) VALUES(?1,?2,?3,?4,?5,?6,?7,?8)")
        .bind(1, c.id)
        .bind(2, c.course_id)
        .bind(3, c.user_ref)
        .bind(4, std::string(to_string(c.user_kind)))
        .bind(5, std::string(to_string(c.mode_at_start)))
        .bind(6, format_timestamp(c.started_at))
        .bind(7, format_timestamp(c.last_activity_at))
        .bind(8, std::int64_t{c.shared ? 1 : 0})
        .run();
    for (std::size_t i = 0; i < c.messages.size(); ++i) {
        Statement(db_, "INSERT INTO messages(conversation_id, seq, body) VALUES(?1,?2,?3)")
            .bind(1, c.id)
            .bind(2, static_cast<std::int64_t>(i))
            .bind(3, json(c.messages[i]).dump())
            .run();
    }
}

void Storage::insert_conversation(const Conversation& conversation) {
    std::lock_guard lock(mutex_);
    Transaction tx(*this);
    write_conversation_locked(conversation);
    tx.commit();
}

void Storage::append_turn(const std::string& conversation_id, const Message& user,
                          const Message& assistant, Timestamp last_activity) {
    std::lock_guard lock(mutex_);
    Transaction tx(*this);
    Statement count(db_, "SELECT COUNT(*) FROM messages WHERE conversation_id = ?1");
    count.bind(1, conversation_id);
    count.step();
    const auto next = count.integer(0);
    for (const auto* m : {&user, &assistant}) {
        Statement(db_, "INSERT INTO messages(conversation_id, seq, body) VALUES(?1,?2,?3)")
            .bind(1, conversation_id)
            .bind(2, next + (m == &user ? 0 : 1))
            .bind(3, json(*m).dump())
            .run();
    }
    Statement(db_, "UPDATE conversations SET last_activity_at = ?2 WHERE id = ?1")
        .bind(1, conversation_id)
        .bind(2, format_timestamp(last_activity))
        .run();
    tx.commit();
}

void Storage::set_shared(const std::string& conversation_id, bool shared) {
    std::lock_guard lock(mutex_);
    Statement(db_, "UPDATE conversations SET shared = ?2 WHERE id = ?1")
        .bind(1, conversation_id)
        .bind(2, std::int64_t{shared ? 1 : 0})
        .run();
}

std::vector<Message> Storage::load_messages_locked(const std::string& conversation_id) {
    std::vector<Message> out;
    Statement st(db_, "SELECT body FROM messages WHERE conversation_id = ?1 ORDER BY seq");
    st.bind(1, conversation_id);
    while (st.step()) out.push_back(json::parse(st.text(0)).get<Message>());
    return out;
}

namespace {

constexpr const char* kConversationColumns =
    "SELECT id, course_id, user_ref, user_kind, mode_at_start, started_at, last_activity_at, shared "
    "FROM conversations ";

} // namespace

std::optional<Conversation> Storage::load_conversation(const std::string& conversation_id) {
    std::lock_guard lock(mutex_);
    Statement st(db_, (std::string(kConversationColumns) + "WHERE id = ?1").c_str());
    st.bind(1, conversation_id);
    if (!st.step()) return std::nullopt;
    Conversation c;
    c.id = st.text(0);
    c.course_id = st.text(1);
    c.user_ref = st.text(2);
    c.user_kind = json(st.text(3)).get<UserKind>();
    c.mode_at_start = parse_mode(st.text(4));
    c.started_at = parse_timestamp(st.text(5));
    c.last_activity_at = parse_timestamp(st.text(6));
    c.shared = st.integer(7) != 0;
    c.messages = load_messages_locked(c.id);
    return c;
}

std::vector<Conversation> Storage::load_conversations(const std::string& course_id,
                                                      const ExportFilter& filter) {
    std::lock_guard lock(mutex_);
    // ISO-8601 UTC strings of fixed width order the same as the instants they name.
    Statement st(db_, (std::string(kConversationColumns) +
                       "WHERE course_id = ?1 AND (?2 IS NULL OR started_at >= ?2) "
                       "AND (?3 IS NULL OR started_at < ?3) AND (?4 = 1 OR user_kind = 'student') "
                       "ORDER BY started_at, id")
                          .c_str());
    st.bind(1, course_id);
    if (filter.from) st.bind(2, format_timestamp(*filter.from));
    else st.bind_null(2);
    if (filter.to) st.bind(3, format_timestamp(*filter.to));
    else st.bind_null(3);
    st.bind(4, std::int64_t{filter.include_developers ? 1 : 0});

    std::vector<Conversation> out;
    while (st.step()) {
        Conversation c;
        c.id = st.text(0);
        c.course_id = st.text(1);
        c.user_ref = st.text(2);
        c.user_kind = json(st.text(3)).get<UserKind>();
        c.mode_at_start = parse_mode(st.text(4));
        c.started_at = parse_timestamp(st.text(5));
        c.last_activity_at = parse_timestamp(st.text(6));
        c.shared = st.integer(7) != 0;
        out.push_back(std::move(c));
    }
    for (auto& c : out) c.messages = load_messages_locked(c.id);
    return out;
}

void Storage::import_conversations(const std::vector<Conversation>& conversations) {
    std::lock_guard lock(mutex_);
    Transaction tx(*this);
    for (const auto& c : conversations) {
        Statement(db_, "DELETE FROM messages WHERE conversation_id = ?1").bind(1, c.id).run();
        Statement(db_, "DELETE FROM conversations WHERE id = ?1").bind(1, c.id).run();
        write_conversation_locked(c);
    }
    tx.commit();
}

} // namespace courseassist
