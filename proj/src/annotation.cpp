#include "courseassist/annotation.hpp"

#include "courseassist/common.hpp"
#include "json_codec.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace courseassist {

namespace {

constexpr std::array<std::string_view, 6> kBloomNames{"Remember", "Understand", "Apply",
                                                      "Analyze",  "Evaluate",   "Create"};
constexpr std::array<std::string_view, 4> kCorrectnessNames{"correct_helpful", "unhelpful",
                                                            "erroneous_computational", "erroneous_conceptual"};

} // namespace

std::string_view to_string(BloomLevel level) { return kBloomNames[static_cast<std::size_t>(level)]; }

BloomLevel parse_bloom(std::string_view s) {
    const auto lower = to_lower(trim(s));
    for (std::size_t i = 0; i < kBloomNames.size(); ++i) {
        if (to_lower(kBloomNames[i]) == lower) return kAllBloomLevels[i];
    }
    throw Error(ErrorCode::validation, "unknown bloom level: " + std::string(s));
}

std::string_view to_string(Correctness c) { return kCorrectnessNames[static_cast<std::size_t>(c)]; }

Correctness parse_correctness(std::string_view s) {
    const auto lower = to_lower(trim(s));
    for (std::size_t i = 0; i < kCorrectnessNames.size(); ++i) {
        if (kCorrectnessNames[i] == lower) return kAllCorrectness[i];
    }
    throw Error(ErrorCode::validation, "unknown correctness label: " + std::string(s));
}

const std::vector<std::string>& annotation_csv_header() {
    static const std::vector<std::string> header{
        "conversation_id", "course_id",   "mode",        "question_index",       "bloom",
        "correctness",     "grammatical_error", "polite", "off_topic",           "has_example",
        "llm_question_present", "llm_question_answered", "annotator_id"};
    return header;
}

namespace {

// Reads one CSV record; returns false at end of input. `line` is advanced by
// the number of physical lines consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') ++line;
                field += ch;
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r' && in.peek() == '\n') {
            continue;
        } else if (ch == '\n') {
            ++line;
            fields.push_back(std::move(field));
            return true;
        } else {
            field += ch;
        }
    }
    if (quoted) throw Error(ErrorCode::malformed_input, "unterminated quoted field near line " + std::to_string(line));
    if (any) {
        ++line;
        fields.push_back(std::move(field));
    }
    return any;
}

bool parse_flag(const std::string& raw, const char* column) {
    const auto v = to_lower(trim(raw));
    if (v == "1" || v == "true" || v == "yes" || v == "y") return true;
    if (v == "0" || v == "false" || v == "no" || v == "n") return false;
    throw Error(ErrorCode::validation, std::string(column) + ": not a boolean: '" + raw + "'");
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

Annotation parse_row(const std::vector<std::string>& f) {
    const auto& header = annotation_csv_header();
    if (f.size() != header.size()) {
        throw Error(ErrorCode::validation, "expected " + std::to_string(header.size()) + " fields, got " +
                                               std::to_string(f.size()));
    }
    Annotation a;
    a.conversation_id = trim(f[0]);
    a.course_id = trim(f[1]);
    if (a.conversation_id.empty()) throw Error(ErrorCode::validation, "conversation_id is empty");
    if (a.course_id.empty()) throw Error(ErrorCode::validation, "course_id is empty");
    if (!trim(f[2]).empty()) a.mode = parse_mode(trim(f[2]));
    const auto index = trim(f[3]);
    if (index.empty() || index.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorCode::validation, "question_index is not a non-negative integer");
    }
    a.question_index = std::stoull(std::string(index));
    a.bloom = parse_bloom(f[4]);
    a.correctness = parse_correctness(f[5]);
    a.grammatical_error = parse_flag(f[6], "grammatical_error");
    a.polite = parse_flag(f[7], "polite");
    a.off_topic = parse_flag(f[8], "off_topic");
    a.has_example = parse_flag(f[9], "has_example");
    a.llm_question_present = parse_flag(f[10], "llm_question_present");
    a.llm_question_answered = parse_flag(f[11], "llm_question_answered");
    a.annotator_id = trim(f[12]);
    if (a.llm_question_answered && !a.llm_question_present) {
        throw Error(ErrorCode::validation, "llm_question_answered set without llm_question_present");
    }
    return a;
}

} // namespace

AnnotationImport import_annotations_csv(std::istream& in) {
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!read_record(in, fields, line)) throw Error(ErrorCode::malformed_input, "annotation CSV is empty");
    if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
    for (auto& f : fields) f = trim(f);
    if (fields != annotation_csv_header()) {
        throw Error(ErrorCode::malformed_input, "unexpected annotation CSV header");
    }

    AnnotationImport result;
    while (true) {
        const auto first_line = line + 1;
        if (!read_record(in, fields, line)) break;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        try {
            result.accepted.push_back(parse_row(fields));
        } catch (const Error& e) {
            result.rejected.push_back("line " + std::to_string(first_line) + ": " + e.what());
        }
    }
    return result;
}

AnnotationImport import_annotations_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path);
    return import_annotations_csv(in);
}

void write_annotations_csv(std::ostream& out, const std::vector<Annotation>& annotations) {
    const auto& header = annotation_csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    const auto b = [](bool v) { return v ? "true" : "false"; };
    for (const auto& a : annotations) {
        out << csv_field(a.conversation_id) << ',' << csv_field(a.course_id) << ','
            << (a.mode ? to_string(*a.mode) : "") << ',' << a.question_index << ',' << to_string(a.bloom)
            << ',' << to_string(a.correctness) << ',' << b(a.grammatical_error) << ',' << b(a.polite) << ','
            << b(a.off_topic) << ',' << b(a.has_example) << ',' << b(a.llm_question_present) << ','
            << b(a.llm_question_answered) << ',' << csv_field(a.annotator_id) << '\n';
    }
}

namespace {

using Counts = std::map<std::string, std::map<std::string, std::size_t>>;

ShareTable shares_of(const Counts& counts) {
    ShareTable out;
    for (const auto& [row, cols] : counts) {
        std::size_t total = 0;
        for (const auto& [_, n] : cols) total += n;
        auto& dst = out[row];
        for (const auto& [col, n] : cols) {
            dst[col] = total == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(total);
        }
    }
    return out;
}

template <typename Labels>
void seed_row(Counts& counts, const std::string& row, const Labels& labels) {
    auto& r = counts[row];
    for (auto l : labels) r.emplace(std::string(to_string(l)), 0);
}

} // namespace

AnnotationTables aggregate_annotations(const std::vector<Annotation>& annotations) {
    AnnotationTables t;
    t.total = annotations.size();
    if (annotations.empty()) return t;

    Counts bloom_course, bloom_mode, correctness, linguistic, follow_up;
    const std::array<std::pair<const char*, bool Annotation::*>, 4> flags{{
        {"grammatical_error", &Annotation::grammatical_error},
        {"polite", &Annotation::polite},
        {"off_topic", &Annotation::off_topic},
        {"has_example", &Annotation::has_example},
    }};

    for (const auto& a : annotations) {
        const auto bloom = std::string(to_string(a.bloom));
        seed_row(bloom_course, a.course_id, kAllBloomLevels);
        ++bloom_course[a.course_id][bloom];
        if (a.mode) {
            const auto mode = std::string(to_string(*a.mode));
            seed_row(bloom_mode, mode, kAllBloomLevels);
            ++bloom_mode[mode][bloom];
        }

        const auto label = std::string(to_string(a.correctness));
        for (const auto& row : {a.course_id, std::string("all")}) {
            seed_row(correctness, row, kAllCorrectness);
            ++correctness[row][label];
        }

        for (const auto& [name, member] : flags) {
            auto& row = linguistic[name];
            row.emplace("yes", 0);
            row.emplace("no", 0);
            ++row[a.*member ? "yes" : "no"];
        }

        if (a.llm_question_present) {
            for (const auto& row : {a.course_id, std::string("all")}) {
                auto& r = follow_up[row];
                r.emplace("answered", 0);
                r.emplace("ignored", 0);
                ++r[a.llm_question_answered ? "answered" : "ignored"];
            }
        }
    }

    t.bloom_by_course = shares_of(bloom_course);
    t.bloom_by_mode = shares_of(bloom_mode);
    t.correctness = shares_of(correctness);
    t.correctness_counts = correctness;
    t.linguistic = shares_of(linguistic);
    t.follow_up = shares_of(follow_up);
    return t;
}

std::string annotation_tables_to_json(const AnnotationTables& tables, int indent) {
    json j = {{"total", tables.total},
              {"bloom_by_course", tables.bloom_by_course},
              {"bloom_by_mode", tables.bloom_by_mode},
              {"correctness", tables.correctness},
              {"correctness_counts", tables.correctness_counts},
              {"linguistic", tables.linguistic},
              {"follow_up", tables.follow_up}};
    return j.dump(indent);
}

} // namespace courseassist
