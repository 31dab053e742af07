// Shared fixtures and independent oracles for the test binaries.
#pragma once

#include "courseassist/analytics.hpp"
#include "courseassist/prompt_assembler.hpp"
#include "courseassist/random.hpp"
#include "courseassist/service.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;
using namespace courseassist;

class TempDir {
public:
    TempDir() {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("courseassist-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Plain cosine written out here rather than borrowed from the library. The
// accumulation order matches a straightforward loop so exact ties stay exact.
inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return c > 1 ? 1 : (c < -1 ? -1 : c);
}

struct OracleHit {
    std::string chunk_id;
    std::string document_id;
    std::size_t ordinal;
    double score;
};

// Exhaustive scan: score every active chunk, full sort by
// (score desc, document_id asc, ordinal asc), keep k.
inline std::vector<OracleHit> brute_force_top_k(const KnowledgeStore& store, const std::string& course,
                                                const std::vector<double>& query, std::size_t k,
                                                const KindFilter& filter = std::nullopt) {
    std::vector<OracleHit> all;
    for (const auto& d : store.documents(course)) {
        if (filter && !filter->contains(d.kind)) continue;
        for (const auto& c : store.chunks_of(d.id)) {
            all.push_back({c.id, c.document_id, c.ordinal, oracle_cosine(query, c.embedding)});
        }
    }
    std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.document_id != b.document_id) return a.document_id < b.document_id;
        return a.ordinal < b.ordinal;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// Tokens that land in pairwise distinct buckets of the hash embedder, so
// cosines between bags of them are plain set arithmetic.
inline std::vector<std::string> distinct_bucket_tokens(const HashEmbedder& e, std::size_t n,
                                                       const std::string& prefix = "tok") {
    std::vector<std::string> out;
    std::vector<bool> used(e.dimension(), false);
    for (std::size_t i = 0; out.size() < n && i < 100000; ++i) {
        auto t = prefix + std::to_string(i);
        auto b = e.bucket_of(t);
        if (used[b]) continue;
        used[b] = true;
        out.push_back(t);
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
    return out;
}

// Random well-formed UTF-8 with `n` code points drawn from all encoding widths.
inline std::string random_utf8(SeededRng& rng, std::size_t n) {
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t cp;
        switch (rng.below(4)) {
        case 0: cp = static_cast<std::uint32_t>(rng.between(0x20, 0x7E)); break;
        case 1: cp = static_cast<std::uint32_t>(rng.between(0x80, 0x7FF)); break;
        case 2: cp = static_cast<std::uint32_t>(rng.between(0xE000, 0xFFFD)); break;
        default: cp = static_cast<std::uint32_t>(rng.between(0x10000, 0x10FFFF)); break;
        }
        if (rng.below(10) == 0) cp = rng.below(2) ? '\n' : ' ';
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

// Independent code point count: every byte that is not a continuation byte.
inline std::size_t count_code_points(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

// Recount of the headline usage numbers straight from raw messages, sharing
// no code with the analytics module: epoch-second arithmetic for weeks and
// hours, a pairwise scan for rounds.
struct Recount {
    std::size_t conversations = 0;
    std::size_t excluded = 0;
    std::size_t within_ten = 0;
    std::size_t zero = 0;
    std::size_t single = 0;
    std::size_t within_three = 0;
    std::size_t questions = 0;
    std::size_t emitted = 0;
    std::size_t answered = 0;
    std::map<ConversationMode, std::size_t> modes;
    std::map<long long, std::size_t> weekly;
    std::array<std::size_t, 24> hourly{};
};

inline long long floor_div_ll(long long a, long long b) {
    long long q = a / b;
    if (a % b != 0 && (a < 0) != (b < 0)) q -= 1;
    return q;
}

inline Recount recount(const std::vector<Conversation>& convs, Timestamp semester_start, int tz_minutes,
                       bool exclude_developers = true) {
    Recount r;
    const long long tz = tz_minutes * 60LL;
    const long long start_day = floor_div_ll(semester_start.time_since_epoch().count(), 86400);
    for (const auto& c : convs) {
        if (exclude_developers && c.user_kind == UserKind::developer) {
            ++r.excluded;
            continue;
        }
        ++r.conversations;
        const long long secs = c.last_activity_at.time_since_epoch().count() - c.started_at.time_since_epoch().count();
        if (secs < 600) ++r.within_ten;
        std::size_t answered_pairs = 0;
        bool flagged = false, answered = false, emitted = false;
        std::optional<ConversationMode> first_mode;
        for (std::size_t i = 0; i < c.messages.size(); ++i) {
            const auto& m = c.messages[i];
            if (m.role == MessageRole::user) {
                ++r.questions;
                if (!first_mode) first_mode = m.metadata.mode;
                if (flagged) answered = true;
                if (i + 1 < c.messages.size() && c.messages[i + 1].role == MessageRole::assistant &&
                    !c.messages[i + 1].metadata.error) {
                    ++answered_pairs;
                }
            } else if (m.metadata.has_follow_up) {
                flagged = emitted = true;
            }
        }
        r.zero += answered_pairs == 0;
        r.single += answered_pairs == 1;
        r.within_three += answered_pairs <= 3;
        r.emitted += emitted;
        r.answered += answered;
        ++r.modes[first_mode.value_or(c.mode_at_start)];
        const long long local = c.started_at.time_since_epoch().count() + tz;
        ++r.weekly[floor_div_ll(floor_div_ll(local, 86400) - start_day, 7)];
        ++r.hourly[static_cast<std::size_t>(floor_div_ll(local, 3600) - floor_div_ll(local, 86400) * 24)];
    }
    return r;
}

// Configuration after removing the first `p` elements of the drop order,
// expressed directly as sections so it can be rendered with no budget pressure.
PromptSections without_first(const PromptSections& s, std::size_t p) {
    auto out = s;
    const auto rounds = s.history.size() / 2;
    const auto r = std::min(p, rounds);
    out.history.erase(out.history.begin(), out.history.begin() + static_cast<std::ptrdiff_t>(2 * r));
    p -= r;
    const auto c = std::min(p, out.retrieved_contexts.size());
    out.retrieved_contexts.resize(out.retrieved_contexts.size() - c);
    p -= c;
    if (p > 0) out.follow_up_directive.reset(), --p;
    if (p > 0) out.course_description.clear(), --p;
    if (p > 0) out.active_time_guidance.clear(), --p;
    if (p > 0) out.educator_rules.clear(), --p;
    return out;
}

inline CourseConfig basic_course(const std::string& id) {
    CourseConfig c;
    c.course_id = id;
    c.name = id;
    c.description = "An introductory programming course.";
    return c;
}

// Course "c" with one homework, quiz and lecture document built from tokens in
// distinct hash buckets, so question similarities are exact fractions.
struct DispatchFixture {
    std::shared_ptr<KnowledgeStore> store = std::make_shared<KnowledgeStore>(std::make_shared<HashEmbedder>());
    std::shared_ptr<ScriptedProvider> model =
        std::make_shared<ScriptedProvider>(std::vector<ScriptRule>{}, "no");
    LlmGateway gateway{model, [] {
                           GatewayOptions o;
                           o.initial_backoff = std::chrono::milliseconds(0);
                           o.max_retries = 0;
                           return o;
                       }()};
    Dispatcher dispatcher{*store, gateway};
    std::vector<std::string> tok = distinct_bucket_tokens(HashEmbedder{}, 12);
    std::string hw_doc, quiz_doc, lecture_doc;

    DispatchFixture() {
        store->add_course("c");
        hw_doc = ingest("hw1", DocumentKind::homework, join({tok[0], tok[1], tok[2], tok[3]}));
        quiz_doc = ingest("quiz1", DocumentKind::quiz, join({tok[8], tok[9]}));
        lecture_doc = ingest("lec1", DocumentKind::lecture, join({tok[10], tok[11]}));
    }

    std::string ingest(const std::string& title, DocumentKind kind, const std::string& text) {
        DocumentInput d;
        d.course_id = "c";
        d.title = title;
        d.kind = kind;
        d.raw_text = text;
        return store->ingest_document(d);
    }

    // Questions with known cosine against the homework chunk.
    std::string exact() const { return join({tok[0], tok[1], tok[2], tok[3]}); }     // 1.0
    std::string gray() const { return join({tok[0], tok[1], tok[2], tok[4]}); }      // 0.75
    std::string unrelated() const { return join({tok[5], tok[6], tok[7]}); }         // 0.0
};

/// In-memory service with the scripted model and a controllable clock.
struct ServiceFixture {
    std::shared_ptr<Storage> storage;
    std::shared_ptr<KnowledgeStore> knowledge;
    std::shared_ptr<ScriptedProvider> model;
    std::shared_ptr<LlmGateway> gateway;
    std::unique_ptr<CourseAssistService> service;
    std::shared_ptr<Timestamp> clock;

    explicit ServiceFixture(const std::string& db = ":memory:") {
        storage = std::make_shared<Storage>(db);
        knowledge = std::make_shared<KnowledgeStore>(std::make_shared<HashEmbedder>());
        model = std::make_shared<ScriptedProvider>(std::vector<ScriptRule>{}, "Think about the definitions first.");
        GatewayOptions g;
        g.initial_backoff = std::chrono::milliseconds(0);
        gateway = std::make_shared<LlmGateway>(model, g);
        clock = std::make_shared<Timestamp>(parse_timestamp("2024-02-05T18:00:00Z"));
        ServiceOptions o;
        o.anonymization_salt = "test-salt";
        o.id_seed = 42;
        o.clock = [c = clock] { return *c; };
        service = std::make_unique<CourseAssistService>(storage, knowledge, gateway, o);
    }

    void advance(std::chrono::seconds s) { *clock += s; }

    Caller educator() const { return {"prof@example.edu", Role::educator, false}; }
    Caller student(const std::string& name = "alice@example.edu") const { return {name, Role::student, false}; }
};

} // namespace testing_support
