// stakenli: stakeholder classification as textual entailment, stage by stage.
//
// Exit codes: 0 success, 2 input error, 3 provider error, 4 backend transport error.

#include "stakenli/stakenli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace stakenli;

namespace {

#ifndef STAKENLI_DATA_DIR
#define STAKENLI_DATA_DIR "data"
#endif

const std::string default_registry = std::string(STAKENLI_DATA_DIR) + "/stakeholders.json";

struct Record {
    std::string id;
    std::string topic;
    EntityDescription description;
};

// Description and labeled files share a layout; the label is ignored here.
std::vector<Record> load_records(const fs::path& path)
{
    std::vector<Record> out;
    std::set<std::string> ids;
    io::for_each_jsonl(io::read_file(path), path.string(), [&](const json& j, std::size_t) {
        Record r;
        const auto phrase = io::require_string(j, "entity_phrase");
        r.id = io::optional_string(j, "id").value_or(phrase);
        r.topic = io::require_string(j, "topic");
        r.description = description_from_json(io::require(j, "description"), phrase);
        if (!ids.insert(r.id).second) throw input_error("duplicate record id '" + r.id + "'");
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<std::string> read_keywords(const fs::path& path)
{
    std::vector<std::string> out;
    std::string content = io::read_file(path);
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        auto line = text::detail::trim(std::string_view(content).substr(pos, end - pos));
        if (!line.empty() && line[0] != '#') out.push_back(line);
        pos = end + 1;
    }
    return out;
}

void write_output(const fs::path& out, const std::string& content, RunManifest& manifest)
{
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_file_atomic(out, content);
    manifest.write_for(out);
}

nli::TemplateRegistry template_registry(const std::string& path)
{
    return path.empty() ? nli::TemplateRegistry::builtin() : nli::load_templates(path);
}

struct BackendOptions {
    std::string backend = "lexical";
    std::string endpoint = "http://127.0.0.1:8765";
    double timeout_s = 30.0;
    std::size_t max_batch = 32;
    std::size_t retries = 3;

    void add_to(CLI::App& app)
    {
        app.add_option("--backend", backend, "Entailment backend")->check(CLI::IsMember({"lexical", "sidecar"}));
        app.add_option("--endpoint", endpoint, "Sidecar base URL");
        app.add_option("--timeout", timeout_s, "Sidecar request timeout in seconds");
        app.add_option("--max-batch", max_batch, "Pairs per sidecar request")->check(CLI::PositiveNumber);
        app.add_option("--retries", retries, "Sidecar retries on transport failure");
    }

    std::unique_ptr<zeroshot::EntailmentScorer> make() const
    {
        if (backend == "lexical") return std::make_unique<zeroshot::LexicalScorer>();
        sidecar::ClientOptions o;
        o.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
        o.max_retries = retries;
        return std::make_unique<sidecar::SidecarScorer>(endpoint, max_batch, o);
    }

    json to_json() const
    {
        json j{{"backend", backend}};
        if (backend == "sidecar") j.update({{"endpoint", endpoint}, {"timeout", timeout_s}, {"max_batch", max_batch}});
        return j;
    }
};

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string corpus, keywords_file, out;
    std::vector<std::string> keywords;
    std::size_t min_hits = 1;
};

int cmd_ingest(const IngestArgs& a)
{
    RunManifest m{"ingest"};
    auto keywords = a.keywords;
    if (!a.keywords_file.empty()) {
        auto more = read_keywords(a.keywords_file);
        keywords.insert(keywords.end(), more.begin(), more.end());
        m.add_input(a.keywords_file);
    }
    const auto corpus = ingest::load_corpus(a.corpus);
    m.add_input(a.corpus);
    const auto kept = ingest::filter_by_topic(corpus, keywords, a.min_hits);
    if (kept.documents.empty()) log::warn("no documents matched the topic keywords");
    m.config = {{"keywords", keywords}, {"min_hits", a.min_hits}};
    write_output(a.out, ingest::serialize_corpus(kept), m);
    std::cerr << "kept " << kept.documents.size() << " of " << corpus.documents.size() << " documents\n";
    return 0;
}

struct DescribeArgs {
    std::string corpus, gazetteer, recognizer = "builtin", endpoint = "http://127.0.0.1:8765";
    std::string overrides, cache, config, knowledge_url = "https://en.wikipedia.org", out;
    bool offline = false;
    std::optional<std::size_t> min_mentions;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

int cmd_describe(const DescribeArgs& a)
{
    RunManifest m{"describe"};
    PipelineConfig config;
    if (!a.config.empty()) {
        config = load_config(a.config);
        m.add_input(a.config);
    }
    if (a.min_mentions) config = config_from_json(json{{"saliency_min_mentions", *a.min_mentions}}, config);

    const auto corpus = ingest::load_corpus(a.corpus);
    m.add_input(a.corpus);

    std::unique_ptr<EntityRecognizer> recognizer;
    if (a.recognizer == "sidecar") {
        recognizer = std::make_unique<sidecar::SidecarRecognizer>(a.endpoint);
    } else {
        if (a.gazetteer.empty()) throw input_error("the builtin recognizer needs --gazetteer");
        recognizer = std::make_unique<GazetteerRecognizer>(load_gazetteer(a.gazetteer));
        m.add_input(a.gazetteer);
    }
    SimilarityResolver resolver(config);

    knowledge::OverrideRegistry overrides;
    if (!a.overrides.empty()) {
        overrides = knowledge::load_overrides(a.overrides);
        m.add_input(a.overrides);
    }
    std::string cache_dir = a.cache;
    if (cache_dir.empty()) {
        const char* env = std::getenv("STAKENLI_CACHE_DIR");
        cache_dir = env && *env ? env : ".stakenli_cache";
    }
    knowledge::KnowledgeCache cache(cache_dir);
    std::unique_ptr<knowledge::RestPageSource> remote;
    if (!a.offline) remote = std::make_unique<knowledge::RestPageSource>(a.knowledge_url);

    const BackgroundLookup background = [&](const std::string& phrase) -> std::optional<std::string> {
        auto page = knowledge::lookup_page(phrase, cache, overrides, !a.offline, remote.get());
        if (!page) return std::nullopt;
        return knowledge::intro_sentences(*page, config.background_sentences);
    };

    const auto described = describe_corpus(corpus, *recognizer, resolver, background, {config, a.jobs});
    m.config = config_to_json(config);
    m.config["recognizer"] = a.recognizer;
    m.config["offline"] = a.offline;
    write_output(a.out, io::to_jsonl(described, described_to_json), m);
    std::cerr << "described " << described.size() << " entities\n";
    return 0;
}

struct CompileArgs {
    std::string labeled, registry = default_registry, templates, template_id = "original", out;
};

int cmd_compile(const CompileArgs& a)
{
    RunManifest m{"compile"};
    const auto registry = load_label_registry(a.registry);
    const auto examples = ingest::load_labeled(a.labeled, registry);
    const auto templates = template_registry(a.templates);
    const auto& tmpl = templates.get(a.template_id);
    for (const auto& p : {a.registry, a.labeled, a.templates})
        if (!p.empty()) m.add_input(p);
    const auto instances = nli::compile_dataset(examples, registry, tmpl);
    m.config = {{"template_id", tmpl.id()}};
    write_output(a.out, nli::serialize_nli(instances), m);
    std::cerr << "compiled " << instances.size() << " instances from " << examples.size() << " examples\n";
    return 0;
}

struct SplitArgs {
    std::string labeled, registry = default_registry, out_dir;
    std::vector<std::string> unseen;
    double dev_fraction = 0.2, test_fraction = 0.2;
    std::uint64_t seed = 13;
};

int cmd_split(const SplitArgs& a)
{
    const auto registry = load_label_registry(a.registry);
    const auto examples = ingest::load_labeled(a.labeled, registry);
    const auto s = ingest::make_splits(examples, {a.unseen.begin(), a.unseen.end()}, a.dev_fraction, a.seed,
                                       a.test_fraction);
    fs::create_directories(a.out_dir);
    const std::pair<const char*, const std::vector<LabeledExample>*> parts[] = {
        {"train", &s.train}, {"dev", &s.dev}, {"test_seen", &s.test_seen}, {"test_unseen", &s.test_unseen}};
    for (const auto& [name, part] : parts) {
        RunManifest m{"split"};
        m.add_input(a.registry);
        m.add_input(a.labeled);
        m.seed = a.seed;
        m.config = {{"unseen", a.unseen}, {"dev_fraction", a.dev_fraction}, {"test_fraction", a.test_fraction}};
        write_output(fs::path(a.out_dir) / (std::string(name) + ".jsonl"), ingest::serialize_labeled(*part), m);
        std::cerr << name << ": " << part->size() << " examples, " << ingest::label_set(*part).size() << " labels\n";
    }
    return 0;
}

struct ClassifyArgs {
    std::string descriptions, registry = default_registry, templates, template_id = "original", topic, out;
    BackendOptions backend;
    std::optional<double> threshold;
    std::optional<std::size_t> top_k;
};

int cmd_classify(const ClassifyArgs& a)
{
    RunManifest m{"classify"};
    const auto registry = load_label_registry(a.registry);
    const auto records = load_records(a.descriptions);
    const auto templates = template_registry(a.templates);
    const auto& tmpl = templates.get(a.template_id);
    for (const auto& p : {a.registry, a.descriptions, a.templates})
        if (!p.empty()) m.add_input(p);
    auto scorer = a.backend.make();
    const bool multi = a.threshold || a.top_k;

    std::string out;
    for (const auto& r : records) {
        const auto& topic = a.topic.empty() ? r.topic : a.topic;
        const auto candidates = candidates_for_topic(registry, topic);
        const auto result =
            multi ? zeroshot::classify_multi(r.description, candidates, tmpl, *scorer, a.threshold.value_or(0.0),
                                             a.top_k.value_or(candidates.size()))
                  : zeroshot::classify_single(r.description, candidates, tmpl, *scorer);
        out += zeroshot::result_to_json(r.id, topic, scorer->id(), result).dump() + "\n";
    }
    m.config = a.backend.to_json();
    m.config["template_id"] = tmpl.id();
    if (a.threshold) m.config["threshold"] = *a.threshold;
    if (a.top_k) m.config["top_k"] = *a.top_k;
    write_output(a.out, out, m);
    return 0;
}

struct EvalArgs {
    std::string predictions, golds, registry = default_registry, split_name = "test", out, csv;
};

int cmd_eval(const EvalArgs& a)
{
    RunManifest m{"eval"};
    const auto registry = load_label_registry(a.registry);
    const auto golds = ingest::load_labeled(a.golds, registry);

    std::map<std::string, std::string> predicted;
    std::string template_id, backend;
    io::for_each_jsonl(io::read_file(a.predictions), a.predictions, [&](const json& j, std::size_t) {
        const auto id = io::require_string(j, "id");
        const auto& p = io::require(j, "predicted");
        std::string label;
        if (p.is_string())
            label = p.get<std::string>();
        else if (p.is_array() && !p.empty() && p[0].is_string())
            label = p[0].get<std::string>();
        else if (!p.is_array())
            throw input_error("field 'predicted' must be a label or a list of labels");
        if (!predicted.emplace(id, label).second) throw input_error("duplicate prediction id '" + id + "'");
        template_id = j.value("template_id", template_id);
        backend = j.value("backend", backend);
    });

    std::vector<std::string> g, p;
    for (const auto& ex : golds) {
        auto it = predicted.find(ex.id);
        if (it == predicted.end()) throw input_error("no prediction for gold id '" + ex.id + "'");
        g.push_back(ex.label);
        p.push_back(it->second);
        predicted.erase(it);
    }
    if (!predicted.empty()) throw input_error("prediction id '" + predicted.begin()->first + "' has no gold record");

    const auto universe = ingest::label_set(golds);
    auto report = eval::score_predictions(g, p, {universe.begin(), universe.end()});
    report.split = a.split_name;
    report.template_id = template_id;
    report.backend = backend;

    m.add_input(a.registry);
    m.add_input(a.golds);
    m.add_input(a.predictions);
    m.config = {{"split", a.split_name}};
    write_output(a.out, eval::report_to_json(report).dump(2) + "\n", m);
    if (!a.csv.empty()) {
        RunManifest cm = m;
        write_output(a.csv, eval::csv_header + eval::report_csv_rows(report), cm);
    }
    std::cerr << "macro F1 " << report.macro_f1 << " over " << report.n_examples << " examples\n";
    return 0;
}

struct RobustnessArgs {
    std::string descriptions, registry = default_registry, templates, split_name = "test", out, csv;
    std::vector<std::string> template_ids;
    BackendOptions backend;
};

int cmd_robustness(const RobustnessArgs& a)
{
    RunManifest m{"robustness"};
    const auto registry = load_label_registry(a.registry);
    const auto golds = ingest::load_labeled(a.descriptions, registry);
    const auto reg = template_registry(a.templates);
    std::vector<nli::PromptTemplate> templates;
    if (a.template_ids.empty())
        templates = reg.templates();
    else
        for (const auto& id : a.template_ids) templates.push_back(reg.get(id));
    for (const auto& p : {a.registry, a.descriptions, a.templates})
        if (!p.empty()) m.add_input(p);

    auto scorer = a.backend.make();
    const auto report = eval::robustness_sweep(golds, registry, templates, *scorer, PipelineConfig{}, a.split_name);
    m.config = a.backend.to_json();
    write_output(a.out, eval::robustness_to_json(report).dump(2) + "\n", m);
    if (!a.csv.empty()) {
        std::string rows = eval::csv_header;
        for (const auto& r : report.per_template) rows += eval::report_csv_rows(r);
        RunManifest cm = m;
        write_output(a.csv, rows, cm);
    }
    std::cerr << "max macro-F1 spread " << report.max_spread << " over " << templates.size() << " templates\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zero-shot news stakeholder classification via textual entailment"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Filter a corpus to topic-specific articles");
    ingest->add_option("--corpus", ingest_args.corpus, "Corpus JSONL")->required();
    ingest->add_option("--keywords", ingest_args.keywords_file, "Keyword file, one per line");
    ingest->add_option("--keyword", ingest_args.keywords, "Keyword (repeatable)");
    ingest->add_option("--min-hits", ingest_args.min_hits, "Distinct keywords required")->check(CLI::PositiveNumber);
    ingest->add_option("--out", ingest_args.out, "Filtered corpus JSONL")->required();

    DescribeArgs describe_args;
    auto* describe = app.add_subcommand("describe", "Build cross-document entity descriptions");
    describe->add_option("--corpus", describe_args.corpus, "Corpus JSONL")->required();
    describe->add_option("--recognizer", describe_args.recognizer, "Entity recognizer")
        ->check(CLI::IsMember({"builtin", "sidecar"}));
    describe->add_option("--gazetteer", describe_args.gazetteer, "Gazetteer JSON for the builtin recognizer");
    describe->add_option("--endpoint", describe_args.endpoint, "Sidecar base URL");
    describe->add_option("--overrides", describe_args.overrides, "Phrase -> page title overrides JSON");
    describe->add_option("--cache", describe_args.cache, "Knowledge cache directory (default $STAKENLI_CACHE_DIR)");
    describe->add_option("--knowledge-url", describe_args.knowledge_url, "Encyclopedia base URL");
    describe->add_flag("--offline", describe_args.offline, "Never contact the encyclopedia");
    describe->add_option("--config", describe_args.config, "PipelineConfig overrides JSON");
    describe->add_option("--min-mentions", describe_args.min_mentions, "Saliency threshold")->check(CLI::PositiveNumber);
    describe->add_option("--jobs", describe_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
    describe->add_option("--out", describe_args.out, "Description JSONL")->required();

    CompileArgs compile_args;
    auto* compile = app.add_subcommand("compile", "Compile labeled examples into an NLI dataset");
    compile->add_option("--labeled", compile_args.labeled, "Labeled JSONL")->required();
    compile->add_option("--registry", compile_args.registry, "Label registry JSON");
    compile->add_option("--templates", compile_args.templates, "Template registry JSON (default: shipped)");
    compile->add_option("--template", compile_args.template_id, "Template id");
    compile->add_option("--out", compile_args.out, "NLI JSONL")->required();

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Split labeled examples into train/dev/test_seen/test_unseen");
    split->add_option("--labeled", split_args.labeled, "Labeled JSONL")->required();
    split->add_option("--registry", split_args.registry, "Label registry JSON");
    split->add_option("--unseen", split_args.unseen, "Label held out for zero-shot testing (repeatable)");
    split->add_option("--dev-fraction", split_args.dev_fraction, "Dev share of each seen label");
    split->add_option("--test-fraction", split_args.test_fraction, "test_seen share of each seen label");
    split->add_option("--seed", split_args.seed, "Shuffle seed");
    split->add_option("--out-dir", split_args.out_dir, "Output directory")->required();

    ClassifyArgs classify_args;
    auto* classify = app.add_subcommand("classify", "Zero-shot classify entity descriptions");
    classify->add_option("--descriptions", classify_args.descriptions, "Description or labeled JSONL")->required();
    classify->add_option("--registry", classify_args.registry, "Label registry JSON");
    classify->add_option("--templates", classify_args.templates, "Template registry JSON (default: shipped)");
    classify->add_option("--template", classify_args.template_id, "Template id");
    classify->add_option("--topic", classify_args.topic, "Override every record's topic");
    classify->add_option("--threshold", classify_args.threshold, "Multi-label score threshold")
        ->check(CLI::Range(0.0, 1.0));
    classify->add_option("--top-k", classify_args.top_k, "Multi-label: at most K labels")->check(CLI::PositiveNumber);
    classify->add_option("--out", classify_args.out, "Predictions JSONL")->required();
    classify_args.backend.add_to(*classify);

    EvalArgs eval_args;
    auto* evaluate = app.add_subcommand("eval", "Score predictions against gold labels");
    evaluate->add_option("--predictions", eval_args.predictions, "Predictions JSONL")->required();
    evaluate->add_option("--golds", eval_args.golds, "Labeled JSONL")->required();
    evaluate->add_option("--registry", eval_args.registry, "Label registry JSON");
    evaluate->add_option("--split-name", eval_args.split_name, "Split name recorded in the report");
    evaluate->add_option("--out", eval_args.out, "Report JSON")->required();
    evaluate->add_option("--csv", eval_args.csv, "Also write per-label CSV rows here");

    RobustnessArgs rob_args;
    auto* robustness = app.add_subcommand("robustness", "Compare macro F1 across hypothesis templates");
    robustness->add_option("--descriptions", rob_args.descriptions, "Labeled JSONL")->required();
    robustness->add_option("--registry", rob_args.registry, "Label registry JSON");
    robustness->add_option("--templates", rob_args.templates, "Template registry JSON (default: shipped)");
    robustness->add_option("--template", rob_args.template_ids, "Template id (repeatable; default all)");
    robustness->add_option("--split-name", rob_args.split_name, "Split name recorded in the report");
    robustness->add_option("--out", rob_args.out, "Report JSON")->required();
    robustness->add_option("--csv", rob_args.csv, "Also write per-label CSV rows here");
    rob_args.backend.add_to(*robustness);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_args);
        if (describe->parsed()) return cmd_describe(describe_args);
        if (compile->parsed()) return cmd_compile(compile_args);
        if (split->parsed()) return cmd_split(split_args);
        if (classify->parsed()) return cmd_classify(classify_args);
        if (evaluate->parsed()) return cmd_eval(eval_args);
        if (robustness->parsed()) return cmd_robustness(rob_args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
