#include "stakenli/ingest.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

using namespace stakenli;
using namespace stakenli::ingest;
using testing_support::example;
using testing_support::shipped_registry;

namespace {
std::string doc_line(const std::string& id, const std::string& text, const std::string& extra = "")
{
    return R"({"id":")" + id + R"(","topic":"Demonetization","title":"t","text":")" + text +
           R"(","source":"s")" + extra + "}\n";
}

std::string labeled_line(const std::string& phrase, const std::string& label, const std::string& topic)
{
    return R"({"entity_phrase":")" + phrase + R"(","topic":")" + topic +
           R"(","description":{"snippets":[{"doc_id":"d1","sentence_index":0,"text":"x."}]},"label":")" + label +
           "\"}\n";
}

std::string error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}
}  // namespace

TEST(LoadCorpus, ThreeLines)
{
    const auto text = doc_line("a", "one") + doc_line("b", "two", R"(,"date":"2016-11-08")") + doc_line("c", "three");
    const auto corpus = parse_corpus(text, "c.jsonl");
    ASSERT_EQ(corpus.documents.size(), 3u);
    EXPECT_EQ(corpus.documents[1].date, "2016-11-08");
    EXPECT_EQ(corpus.find("c")->text, "three");
    EXPECT_EQ(parse_corpus(serialize_corpus(corpus), "x").documents, corpus.documents);
}

TEST(LoadCorpus, EmptyFileWarns)
{
    log::ScopedCapture capture;
    EXPECT_TRUE(parse_corpus("", "empty.jsonl").documents.empty());
    ASSERT_EQ(capture.messages().size(), 1u);
    EXPECT_NE(capture.messages()[0].find("empty"), std::string::npos);
}

TEST(LoadCorpus, DuplicateIdNamesLine)
{
    const auto msg = error_of([] { parse_corpus(doc_line("a", "one") + doc_line("a", "two"), "c.jsonl"); });
    EXPECT_NE(msg.find("c.jsonl:2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("duplicate document id 'a'"), std::string::npos) << msg;
}

TEST(LoadCorpus, MalformedAndInvalidRecords)
{
    EXPECT_NE(error_of([] { parse_corpus(doc_line("a", "x") + "{oops\n", "c"); }).find("c:2: malformed"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_corpus(doc_line("a", ""), "c"); }).find("empty text"), std::string::npos);
    EXPECT_NE(error_of([] { parse_corpus(doc_line("a", "x", R"(,"date":"2016-13-01")"), "c"); }).find("YYYY-MM-DD"),
              std::string::npos);
    EXPECT_NE(error_of([] { parse_corpus(R"({"id":"a"})" "\n", "c"); }).find("'topic'"), std::string::npos);
}

TEST(FilterByTopic, KeywordHits)
{
    Corpus c;
    c.documents = {{"a", "T", "t", "The new Banknote design.", "s", {}},
                   {"b", "T", "t", "Demonetisation and banknote queues.", "s", {}},
                   {"c", "T", "t", "Cricket scores.", "s", {}}};
    const std::vector<std::string> kw{"demonetisation", "banknote"};
    auto ids = [](const Corpus& x) {
        std::vector<std::string> out;
        for (const auto& d : x.documents) out.push_back(d.id);
        return out;
    };
    EXPECT_EQ(ids(filter_by_topic(c, kw, 1)), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(ids(filter_by_topic(c, kw, 2)), (std::vector<std::string>{"b"}));
    EXPECT_THROW(filter_by_topic(c, {}, 1), Error);
}

TEST(LoadLabeled, KnownAndUnknownLabels)
{
    const auto reg = shipped_registry();
    const auto ok = parse_labeled(labeled_line("Arun Jaitley", "Government", "Demonetization"), "l", reg);
    ASSERT_EQ(ok.size(), 1u);
    EXPECT_EQ(ok[0].label, "Government");
    EXPECT_EQ(ok[0].id, "Arun Jaitley");

    const auto msg = error_of([&] {
        parse_labeled(labeled_line("A", "Government", "Demonetization") + labeled_line("ET", "Aliens", "Demonetization"),
                      "l.jsonl", reg);
    });
    EXPECT_NE(msg.find("l.jsonl:2: record 'ET': unknown label 'Aliens'"), std::string::npos) << msg;
}

TEST(LoadLabeled, RoundTripPreservesFields)
{
    auto a = example("RBI", "Banking Sector", "Demonetization", "RBI acted.");
    a.id = "rbi-1";
    a.description = make_description("RBI", std::string("Bg."), {{"d1", 2, "RBI acted."}, {"d2", 0, "More."}});
    const auto b = example("Amit Shah", "Government", "Article 370");
    const auto back = parse_labeled(serialize_labeled({a, b}), "x", shipped_registry());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(back[1], b);
}

// Synthetic fixture with one record per instance, mirroring the per-topic
// label/instance counts of the annotated dataset.
TEST(TopicStats, ReportsCountsVerbatim)
{
    const auto reg = shipped_registry();
    const std::map<std::string, std::pair<std::size_t, std::size_t>> table{
        {"Agriculture Act", {6, 302}}, {"COVID Control", {6, 351}}, {"CAB Bill", {5, 252}},
        {"Demonetization", {6, 250}},  {"Article 370", {7, 253}}};
    std::vector<LabeledExample> examples;
    for (const auto& [topic, counts] : table) {
        const auto candidates = candidates_for_topic(reg, topic);
        ASSERT_EQ(candidates.size(), counts.first);
        for (std::size_t i = 0; i < counts.second; ++i) {
            auto ex = example(topic + " entity " + std::to_string(i), candidates[i % candidates.size()].name, topic);
            examples.push_back(std::move(ex));
        }
    }
    const auto stats = topic_stats(examples);
    for (const auto& [topic, counts] : table) {
        EXPECT_EQ(stats.at(topic).labels, counts.first) << topic;
        EXPECT_EQ(stats.at(topic).instances, counts.second) << topic;
    }
    EXPECT_EQ(stats.at("Demonetization"), (TopicStats{6, 250}));
}

TEST(MakeSplits, UnseenLabelGoesToTestUnseen)
{
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 10; ++i) ex.push_back(example("e" + std::to_string(i), i % 3 == 0 ? "B" : "A", "T"));
    const auto s = make_splits(ex, {"B"}, 0.2, 13);
    for (const auto* part : {&s.train, &s.dev, &s.test_seen})
        for (const auto& e : *part) EXPECT_EQ(e.label, "A") << e.id;
    ASSERT_EQ(s.test_unseen.size(), 4u);
    for (const auto& e : s.test_unseen) EXPECT_EQ(e.label, "B");
    EXPECT_EQ(s.train.size() + s.dev.size() + s.test_seen.size(), 6u);
}

TEST(MakeSplits, EmptyUnseenSetAndErrors)
{
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 8; ++i) ex.push_back(example("e" + std::to_string(i), i % 2 ? "A" : "B", "T"));
    EXPECT_TRUE(make_splits(ex, {}, 0.25, 1).test_unseen.empty());
    EXPECT_THROW(make_splits(ex, {"A", "B"}, 0.25, 1), Error);
    EXPECT_THROW(make_splits(ex, {"C"}, 0.25, 1), Error);
    EXPECT_THROW(make_splits(ex, {}, 0.0, 1), Error);
    EXPECT_THROW(make_splits(ex, {}, 0.6, 1, 0.5), Error);
}

TEST(MakeSplits, DeterministicPerSeed)
{
    std::vector<LabeledExample> ex;
    for (int i = 0; i < 40; ++i) ex.push_back(example("e" + std::to_string(i), "L" + std::to_string(i % 4), "T"));
    const auto a = make_splits(ex, {"L3"}, 0.2, 99);
    const auto b = make_splits(ex, {"L3"}, 0.2, 99);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.dev, b.dev);
    EXPECT_EQ(a.test_seen, b.test_seen);
    EXPECT_EQ(a.test_unseen, b.test_unseen);
    const auto c = make_splits(ex, {"L3"}, 0.2, 100);
    EXPECT_FALSE(a.dev == c.dev && a.test_seen == c.test_seen);
}

TEST(MakeSplits, InvariantsOnRandomInputs)
{
    std::mt19937_64 rng(31337);
    for (int round = 0; round < 200; ++round) {
        const std::size_t n_labels = 2 + rng() % 6;
        const std::size_t n = n_labels + rng() % 60;
        std::vector<LabeledExample> ex;
        for (std::size_t i = 0; i < n; ++i)
            ex.push_back(example("e" + std::to_string(i), "L" + std::to_string(i < n_labels ? i : rng() % n_labels), "T"));
        std::set<std::string> unseen;
        for (std::size_t l = 0; l < n_labels - 1; ++l)
            if (rng() % 3 == 0) unseen.insert("L" + std::to_string(l));
        const double dev = 0.05 + 0.4 * double(rng() % 100) / 100.0;
        const auto s = make_splits(ex, unseen, dev, rng());

        ASSERT_NO_THROW(validate_splits(s));
        EXPECT_EQ(s.train.size() + s.dev.size() + s.test_seen.size() + s.test_unseen.size(), n);
        const auto train_labels = label_set(s.train);
        for (const auto& l : label_set(s.dev)) EXPECT_TRUE(train_labels.count(l));
        for (const auto& e : s.test_unseen) EXPECT_TRUE(unseen.count(e.label));
        for (const auto& e : s.train) EXPECT_FALSE(unseen.count(e.label));
        // Every seen label keeps a training example.
        for (const auto& l : label_set(ex))
            if (!unseen.count(l)) {
                EXPECT_TRUE(train_labels.count(l)) << l;
            }
    }
}

// Seen/unseen shape of the full annotated dataset: 11 labels, 7 seen and 4
// unseen, with per-split example counts 674 / 231 / 225 / 278.
TEST(MakeSplits, SevenSeenFourUnseenSchema)
{
    DatasetSplits s;
    auto fill = [](std::vector<LabeledExample>& part, const std::string& prefix, std::vector<std::string> labels,
                   std::size_t count) {
        for (std::size_t i = 0; i < count; ++i)
            part.push_back(example(prefix + std::to_string(i), labels[i % labels.size()], "T"));
    };
    const std::vector<std::string> seven{"Government", "Opposition", "Citizen/Activist", "Bureaucrat",
                                         "Farmers",    "Scientist/Researchers", "International-figure"};
    fill(s.train, "tr", seven, 674);
    fill(s.dev, "dv", seven, 231);
    fill(s.test_seen, "ts", {"Government", "Opposition", "Citizen/Activist", "Bureaucrat", "International-figure"},
         225);
    fill(s.test_unseen, "tu", {"Banking Sector", "Private Companies", "Judiciary", "Kashmiri people"}, 278);
    EXPECT_NO_THROW(validate_splits(s));
    EXPECT_EQ(label_set(s.train).size(), 7u);
    EXPECT_EQ(label_set(s.dev).size(), 7u);
    EXPECT_EQ(label_set(s.test_seen).size(), 5u);
    EXPECT_EQ(label_set(s.test_unseen).size(), 4u);
    EXPECT_EQ(s.train.size() + s.dev.size() + s.test_seen.size() + s.test_unseen.size(), 674u + 231 + 225 + 278);

    s.test_unseen.push_back(example("leak", "Farmers", "T"));
    EXPECT_THROW(validate_splits(s), Error);
}
