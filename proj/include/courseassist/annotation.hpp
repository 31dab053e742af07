#pragma once

#include "courseassist/mode.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace courseassist {

enum class BloomLevel { remember, understand, apply, analyze, evaluate, create };
enum class Correctness { correct_helpful, unhelpful, erroneous_computational, erroneous_conceptual };

inline constexpr std::array<BloomLevel, 6> kAllBloomLevels{BloomLevel::remember,   BloomLevel::understand,
                                                           BloomLevel::apply,      BloomLevel::analyze,
                                                           BloomLevel::evaluate,   BloomLevel::create};
inline constexpr std::array<Correctness, 4> kAllCorrectness{
    Correctness::correct_helpful, Correctness::unhelpful, Correctness::erroneous_computational,
    Correctness::erroneous_conceptual};

/// "Remember", "Understand", ... (case-insensitive on parse).
std::string_view to_string(BloomLevel level);
BloomLevel parse_bloom(std::string_view s);
std::string_view to_string(Correctness c);
Correctness parse_correctness(std::string_view s);

/// One human label set for one question of a sampled conversation.
struct Annotation {
    std::string conversation_id;
    std::string course_id;
    std::optional<ConversationMode> mode;
    std::size_t question_index = 0;
    BloomLevel bloom = BloomLevel::remember;
    Correctness correctness = Correctness::correct_helpful;
    bool grammatical_error = false;
    bool polite = false;
    bool off_topic = false;
    bool has_example = false;
    bool llm_question_present = false;
    bool llm_question_answered = false;
    std::string annotator_id;

    bool operator==(const Annotation&) const = default;
};

/// Header of the import file, in column order. `mode` may be blank.
const std::vector<std::string>& annotation_csv_header();

struct AnnotationImport {
    std::vector<Annotation> accepted;
    /// "line N: reason" for each rejected row.
    std::vector<std::string> rejected;
};

/// Parses RFC 4180 style CSV. A wrong header throws malformed_input; bad
/// rows (including answered without present) are rejected and reported.
AnnotationImport import_annotations_csv(std::istream& in);
AnnotationImport import_annotations_csv_file(const std::string& path);
void write_annotations_csv(std::ostream& out, const std::vector<Annotation>& annotations);

/// Row label -> (column label -> share). Each row sums to 1.
using ShareTable = std::map<std::string, std::map<std::string, double>>;

struct AnnotationTables {
    std::size_t total = 0;
    ShareTable bloom_by_course;
    ShareTable bloom_by_mode;
    /// Rows: each course plus "all". Columns: the four labels.
    ShareTable correctness;
    /// Rows: grammatical_error, polite, off_topic, has_example. Columns: yes, no.
    ShareTable linguistic;
    /// Among annotations with llm_question_present, per course plus "all": answered, ignored.
    ShareTable follow_up;
    /// Raw counts behind `correctness`, same keys.
    std::map<std::string, std::map<std::string, std::size_t>> correctness_counts;
};

AnnotationTables aggregate_annotations(const std::vector<Annotation>& annotations);
std::string annotation_tables_to_json(const AnnotationTables& tables, int indent = 2);

} // namespace courseassist
