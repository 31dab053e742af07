// Python bindings. Structured values cross the boundary as JSON text or
// plain dicts so the Python side needs no mirror types.
#include "courseassist/analytics.hpp"
#include "courseassist/annotation.hpp"
#include "courseassist/app.hpp"
#include "courseassist/synthetic.hpp"
#include "json_codec.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace courseassist;

namespace {

std::vector<Conversation> parse_export(const std::string& text) {
    std::istringstream in(text);
    return read_export(in);
}

std::string dump_export(const std::vector<Conversation>& conversations) {
    std::ostringstream out;
    write_export(out, conversations);
    return out.str();
}

ReportOptions report_options(const std::string& semester_start, int tz_offset_minutes, bool exclude_developers) {
    ReportOptions o;
    if (!semester_start.empty()) o.semester_start = parse_timestamp(semester_start);
    o.tz_offset_minutes = tz_offset_minutes;
    o.exclude_developers = exclude_developers;
    return o;
}

// A self-contained service over an in-memory or file database with the
// scripted model, for notebooks and smoke tests.
class PyService {
public:
    PyService(const std::string& db, const std::string& script_json, const std::string& salt) {
        app_.storage = std::make_shared<Storage>(db);
        app_.knowledge = std::make_shared<KnowledgeStore>(std::make_shared<HashEmbedder>());
        app_.gateway = std::make_shared<LlmGateway>(ScriptedProvider::from_json(script_json));
        ServiceOptions options;
        options.anonymization_salt = salt;
        options.id_seed = 1;
        app_.service = std::make_unique<CourseAssistService>(app_.storage, app_.knowledge, app_.gateway, options);
        app_.service->load_from_storage();
    }

    void register_course(const std::string& config_json) {
        app_.service->register_course(course_config_from_json(config_json));
    }

    std::string upload_document(const std::string& course, const std::string& title, const std::string& kind,
                                const std::string& text, const std::string& educator) {
        DocumentInput in;
        in.title = title;
        in.kind = parse_document_kind(kind);
        in.raw_text = text;
        return app_.service->upload_document(course, in, {educator, Role::educator, false});
    }

    std::string start_conversation(const std::string& course, const std::string& account, const std::string& mode,
                                   bool developer) {
        return app_.service->start_conversation(course, {account, Role::student, developer}, parse_mode(mode));
    }

    py::dict ask(const std::string& conversation, const std::string& account, const std::string& text,
                 std::optional<std::string> mode, std::vector<std::string> documents) {
        PostQuestionRequest q;
        q.text = text;
        q.selected_documents = std::move(documents);
        if (mode) q.explicit_mode = parse_mode(*mode);
        const auto turn = app_.service->post_question(conversation, {account, Role::student, false}, std::move(q));
        json j = {{"response", turn.response},
                  {"decision", turn.decision},
                  {"message_id", turn.assistant_message_id},
                  {"rounds", turn.rounds}};
        return py::module_::import("json").attr("loads")(j.dump());
    }

    std::string export_course(const std::string& course, bool include_developers) {
        ExportFilter f;
        f.include_developers = include_developers;
        return dump_export(app_.service->export_conversations(course, f));
    }

    void import_export(const std::string& text) { app_.service->import_conversations(parse_export(text)); }

    std::string anonymize(const std::string& account) const { return app_.service->anonymize(account); }

private:
    App app_;
};

} // namespace

PYBIND11_MODULE(_courseassist, m) {
    m.doc() = "Course assistant core: retrieval, dispatch, prompt assembly, analytics";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(PyExc_ValueError, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("embed", [](const std::string& text, std::size_t dim) { return HashEmbedder(dim).embed(text); },
          py::arg("text"), py::arg("dimension") = HashEmbedder::kDefaultDimension);
    m.def("cosine_similarity", [](const std::vector<double>& a, const std::vector<double>& b) {
        return cosine_similarity(a, b);
    });
    m.def(
        "chunk",
        [](const std::string& text, std::size_t size) {
            std::vector<std::string> out;
            for (auto& d : chunk_document(text, size)) out.push_back(std::move(d.text));
            return out;
        },
        py::arg("text"), py::arg("size") = kDefaultChunkSize);
    m.def("extract_follow_up", [](const std::string& raw) {
        return extract_follow_up(raw, FollowUpPolicy::model_decides);
    });
    m.def("segment", [](const std::string& raw) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : segment(raw)) out.emplace_back(std::string(to_string(s.kind)), s.content);
        return out;
    });

    m.def(
        "generate_synthetic_logs",
        [](const std::string& spec_json, std::uint64_t seed) {
            return dump_export(generate_synthetic_logs(simulation_spec_from_json(spec_json), seed));
        },
        py::arg("spec_json"), py::arg("seed") = 0, "Returns NDJSON export text.");
    m.def(
        "compute_report",
        [](const std::string& export_text, const std::string& semester_start, int tz, bool exclude_developers) {
            return report_to_json(compute_report(parse_export(export_text), report_options(semester_start, tz, exclude_developers)));
        },
        py::arg("export_text"), py::arg("semester_start") = "", py::arg("tz_offset_minutes") = 0,
        py::arg("exclude_developers") = true, "Returns the usage report as JSON text.");
    m.def(
        "sample_for_annotation",
        [](const std::string& export_text, std::size_t n, std::uint64_t seed, bool with_follow_up) {
            ConversationPredicate pred;
            if (with_follow_up) pred = [](const Conversation& c) { return emitted_follow_up(c); };
            const auto r = sample_for_annotation(parse_export(export_text), n, seed, pred);
            return py::make_tuple(r.ids, r.shortfall);
        },
        py::arg("export_text"), py::arg("n"), py::arg("seed") = 0, py::arg("with_follow_up") = false);
    m.def("aggregate_annotations_csv", [](const std::string& csv) {
        std::istringstream in(csv);
        const auto imported = import_annotations_csv(in);
        return py::make_tuple(annotation_tables_to_json(aggregate_annotations(imported.accepted)), imported.rejected);
    });
    m.def("run_cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "courseassist");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
    });

    py::class_<PyService>(m, "Service")
        .def(py::init<const std::string&, const std::string&, const std::string&>(), py::arg("db") = ":memory:",
             py::arg("script_json") = R"({"rules": [], "default_response": "Think about the definition first."})",
             py::arg("salt") = "courseassist")
        .def("register_course", &PyService::register_course, py::arg("config_json"))
        .def("upload_document", &PyService::upload_document, py::arg("course"), py::arg("title"), py::arg("kind"),
             py::arg("text"), py::arg("educator") = "educator")
        .def("start_conversation", &PyService::start_conversation, py::arg("course"), py::arg("account"),
             py::arg("mode") = "general", py::arg("developer") = false)
        .def("ask", &PyService::ask, py::arg("conversation"), py::arg("account"), py::arg("text"),
             py::arg("mode") = py::none(), py::arg("documents") = std::vector<std::string>{})
        .def("export_course", &PyService::export_course, py::arg("course"), py::arg("include_developers") = false)
        .def("import_export", &PyService::import_export, py::arg("text"))
        .def("anonymize", &PyService::anonymize, py::arg("account"));
}
