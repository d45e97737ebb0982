#include "stakenli/sidecar.hpp"
#include "stakenli/zeroshot.hpp"

#include "helpers.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <cmath>
#include <random>
#include <thread>

using namespace stakenli;
using namespace stakenli::zeroshot;
using testing_support::shipped_registry;

namespace {

const nli::PromptTemplate& original()
{
    static const auto reg = nli::TemplateRegistry::builtin();
    return reg.get("original");
}

EntityDescription desc(const std::string& entity, const std::string& text)
{
    return make_description(entity, std::nullopt, {{"d", 0, text}});
}

std::vector<StakeholderLabel> labels(std::initializer_list<const char*> names)
{
    std::vector<StakeholderLabel> out;
    for (auto n : names) out.push_back({n, false, {"T"}});
    return out;
}

/// Returns fixed scores keyed by the label at the end of the hypothesis.
class TableScorer final : public EntailmentScorer {
public:
    explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
    std::string id() const override { return "table"; }
    std::vector<double> score_batch(std::span<const PremiseHypothesis> pairs) override
    {
        ++calls;
        std::vector<double> out;
        for (const auto& p : pairs) {
            double s = 0;
            for (const auto& [label, v] : table_)
                if (p.hypothesis.size() >= label.size() &&
                    p.hypothesis.compare(p.hypothesis.size() - label.size(), label.size(), label) == 0)
                    s = v;
            out.push_back(s);
        }
        return out;
    }
    int calls = 0;

private:
    std::map<std::string, double> table_;
};

/// Wraps another scorer with a strictly increasing map of [0,1] onto itself.
class MonotoneWrapper final : public EntailmentScorer {
public:
    MonotoneWrapper(EntailmentScorer& inner, int variant) : inner_(inner), variant_(variant) {}
    std::string id() const override { return "monotone"; }
    std::vector<double> score_batch(std::span<const PremiseHypothesis> pairs) override
    {
        auto s = inner_.score_batch(pairs);
        for (auto& x : s) {
            switch (variant_) {
            case 0: x = x * x; break;
            case 1: x = std::sqrt(x); break;
            case 2: x = 0.1 + 0.8 * x; break;
            default: x = (std::exp(3 * x) - 1) / (std::exp(3.0) - 1); break;
            }
        }
        return s;
    }

private:
    EntailmentScorer& inner_;
    int variant_;
};

class BrokenScorer final : public EntailmentScorer {
public:
    std::vector<double> result;
    std::string id() const override { return "broken-backend"; }
    std::vector<double> score_batch(std::span<const PremiseHypothesis>) override { return result; }
};

}  // namespace

TEST(LexicalScore, HandCountedValues)
{
    const auto h = original().render("RBI", "Banking Sector");  // content: rbi, banking, sector
    EXPECT_DOUBLE_EQ(lexical_score("The RBI regulates the banking sector.", h), 1.0);
    EXPECT_DOUBLE_EQ(lexical_score("Monsoon rains arrived.", h), 0.0);
    // Only scaffold words besides the label: 1 of 2 content tokens.
    EXPECT_DOUBLE_EQ(lexical_score("Reforms hit banking.", "The entity belongs to the stakeholder group of Banking Sector"),
                     0.5);
    EXPECT_DOUBLE_EQ(lexical_score("anything", "The entity is of stakeholder type"), 0.0);
    // 2 of 3 content tokens (rbi, banking) present.
    EXPECT_NEAR(lexical_score("RBI and banking", h), 2.0 / 3.0, 1e-15);
}

TEST(LexicalScore, AllShippedTemplatesShareContentWords)
{
    const auto& reg = nli::TemplateRegistry::builtin();
    for (const auto& t : reg.templates()) {
        EXPECT_DOUBLE_EQ(lexical_score("banking", t.render("Q", "Banking Sector")), 1.0 / 3.0) << t.id();
    }
}

TEST(ClassifySingle, ArgmaxAndTies)
{
    TableScorer s({{"A", 0.9}, {"B", 0.2}});
    auto r = classify_single(desc("e", "x."), labels({"A", "B"}), original(), s);
    EXPECT_EQ(r.predicted, std::vector<std::string>{"A"});
    EXPECT_EQ(s.calls, 1);
    EXPECT_DOUBLE_EQ(r.score_of("B"), 0.2);

    TableScorer tie({{"A", 0.4}, {"B", 0.4}});
    EXPECT_EQ(classify_single(desc("e", "x."), labels({"B", "A"}), original(), tie).predicted.front(), "B");

    TableScorer zero({});
    EXPECT_EQ(classify_single(desc("e", "x."), labels({"Only"}), original(), zero).predicted.front(), "Only");
    EXPECT_THROW(classify_single(desc("e", "x."), {}, original(), zero), Error);
}

TEST(ClassifySingle, DemonetizationFixtureWithLexicalScorer)
{
    // Content tokens per hypothesis: reserve, bank, india + label words.
    // Government, Opposition, Citizen/Activist, Bureaucrat, Private Companies: 3/4, 3/4, 3/5, 3/4, 3/5.
    // Banking Sector: 5/5.
    LexicalScorer s;
    const auto d = desc("Reserve Bank of India",
                        "The Reserve Bank of India supervises the banking sector and issued new notes in India.");
    const auto r = classify_single(d, candidates_for_topic(shipped_registry(), "Demonetization"), original(), s);
    EXPECT_EQ(r.predicted.front(), "Banking Sector");
    EXPECT_DOUBLE_EQ(r.score_of("Government"), 0.75);
    EXPECT_DOUBLE_EQ(r.score_of("Opposition"), 0.75);
    EXPECT_DOUBLE_EQ(r.score_of("Citizen/Activist"), 0.6);
    EXPECT_DOUBLE_EQ(r.score_of("Bureaucrat"), 0.75);
    EXPECT_DOUBLE_EQ(r.score_of("Banking Sector"), 1.0);
    EXPECT_DOUBLE_EQ(r.score_of("Private Companies"), 0.6);
}

TEST(ClassifySingle, LabelIntroducedAtCallTime)
{
    LexicalScorer s;
    const auto d = desc("Sharma Media House", "Sharma Media House is a media agency running a news channel.");
    const auto r = classify_single(d, labels({"Government", "Media Agency"}), original(), s);
    EXPECT_EQ(r.predicted.front(), "Media Agency");
    EXPECT_NO_THROW(r.score_of("Media Agency"));
}

TEST(ClassifySingle, ArgmaxInvariantUnderMonotoneTransforms)
{
    LexicalScorer lexical;
    const auto reg = shipped_registry();
    std::mt19937_64 rng(3);
    const std::vector<std::string> vocab{"farmers", "bank", "sector", "judiciary", "court", "government", "people",
                                         "kashmiri", "private", "companies", "citizen", "opposition", "minister"};
    for (int i = 0; i < 200; ++i) {
        std::string text;
        for (int w = 0; w < 6; ++w) text += vocab[rng() % vocab.size()] + " ";
        const auto d = desc("Entity" + std::to_string(i), text);
        const auto& topic = reg.topics()[rng() % reg.topics().size()];
        const auto cands = candidates_for_topic(reg, topic);
        const auto base = classify_single(d, cands, original(), lexical).predicted;
        for (int v = 0; v < 4; ++v) {
            MonotoneWrapper m(lexical, v);
            EXPECT_EQ(classify_single(d, cands, original(), m).predicted, base) << text << " variant " << v;
            const auto multi = classify_multi(d, cands, original(), m, 0.0, 1);
            EXPECT_EQ(multi.predicted, base);
        }
    }
}

TEST(ClassifyMulti, ThresholdAndTopK)
{
    TableScorer s({{"A", 0.9}, {"B", 0.8}, {"C", 0.1}});
    const auto d = desc("e", "x.");
    const auto c = labels({"C", "B", "A"});
    EXPECT_EQ(classify_multi(d, c, original(), s, 0.5, 2).predicted, (std::vector<std::string>{"A", "B"}));
    EXPECT_TRUE(classify_multi(d, c, original(), s, 0.95, 2).predicted.empty());
    EXPECT_EQ(classify_multi(d, c, original(), s, 0.5, 1).predicted, (std::vector<std::string>{"A"}));
    EXPECT_THROW(classify_multi(d, c, original(), s, 1.5, 1), Error);
    EXPECT_THROW(classify_multi(d, c, original(), s, 0.5, 0), Error);
}

TEST(Classify, BackendFailuresCarryBackendIdentity)
{
    BrokenScorer b;
    const auto d = desc("e", "x.");
    b.result = {0.5};
    try {
        classify_single(d, labels({"A", "B"}), original(), b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
        EXPECT_NE(std::string(e.what()).find("broken-backend"), std::string::npos);
    }
    b.result = {0.5, 1.5};
    EXPECT_THROW(classify_single(d, labels({"A", "B"}), original(), b), Error);
}

TEST(LexicalScorer, BatchConsistency)
{
    LexicalScorer s;
    std::mt19937_64 rng(8);
    std::vector<PremiseHypothesis> pairs;
    for (int i = 0; i < 40; ++i)
        pairs.push_back({"bank sector farmers " + std::to_string(rng() % 5),
                         original().render("E" + std::to_string(rng() % 3), rng() % 2 ? "Farmers" : "Banking Sector")});
    const auto whole = s.score_batch(pairs);
    for (std::size_t cut = 0; cut <= pairs.size(); cut += 7) {
        auto left = s.score_batch(std::span(pairs).first(cut));
        const auto right = s.score_batch(std::span(pairs).subspan(cut));
        left.insert(left.end(), right.begin(), right.end());
        EXPECT_EQ(left, whole);
    }
}

namespace {
/// Local stand-in for the model sidecar.
class MockSidecar {
public:
    std::atomic<int> entail_requests{0};
    std::atomic<int> drop_scores{0};

    MockSidecar()
    {
        server_.Post("/v1/entail", [this](const httplib::Request& req, httplib::Response& res) {
            ++entail_requests;
            const auto body = json::parse(req.body);
            json scores = json::array();
            for (std::size_t i = 0; i < body["pairs"].size(); ++i) scores.push_back(0.5);
            if (drop_scores > 0 && !scores.empty()) scores.erase(scores.size() - 1);
            res.set_content(json{{"scores", scores}}.dump(), "application/json");
        });
        server_.Post("/v1/ner", [](const httplib::Request& req, httplib::Response& res) {
            const auto text = json::parse(req.body)["text"].get<std::string>();
            const auto pos = text.find("Modi");
            json ents = json::array();
            if (pos != std::string::npos)
                ents.push_back({{"surface", "Modi"}, {"kind", "PERSON"}, {"start", pos}, {"end", pos + 4}});
            res.set_content(json{{"entities", ents}}.dump(), "application/json");
        });
        server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok","model":"mock-nli"})", "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockSidecar()
    {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::vector<PremiseHypothesis> five_pairs()
{
    std::vector<PremiseHypothesis> p;
    for (int i = 0; i < 5; ++i) p.push_back({"premise " + std::to_string(i), "hypothesis " + std::to_string(i)});
    return p;
}

int unused_port()
{
    httplib::Server s;
    const int port = s.bind_to_any_port("127.0.0.1");
    return port;  // socket closes when `s` goes out of scope
}
}  // namespace

TEST(SidecarScorer, ChunksRequests)
{
    MockSidecar mock;
    sidecar::SidecarScorer s(mock.endpoint(), 2);
    const auto scores = s.score_batch(five_pairs());
    EXPECT_EQ(scores, std::vector<double>(5, 0.5));
    EXPECT_EQ(mock.entail_requests.load(), 3);
}

TEST(SidecarScorer, ShortReplyIsProtocolError)
{
    MockSidecar mock;
    mock.drop_scores = 1;
    sidecar::SidecarScorer s(mock.endpoint(), 8);
    try {
        s.score_batch(five_pairs());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
}

TEST(SidecarScorer, UnreachableIsTransportErrorAfterRetries)
{
    sidecar::ClientOptions opts;
    opts.timeout = std::chrono::milliseconds(300);
    opts.backoff = std::chrono::milliseconds(5);
    sidecar::SidecarScorer s("http://127.0.0.1:" + std::to_string(unused_port()), 4, opts);
    try {
        s.score_batch(five_pairs());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::transport);
        EXPECT_TRUE(e.retryable());
        EXPECT_NE(std::string(e.what()).find("3 retries"), std::string::npos) << e.what();
    }
}

TEST(SidecarRecognizer, NerAndHealth)
{
    MockSidecar mock;
    sidecar::SidecarRecognizer r(mock.endpoint());
    const Document d{"d1", "T", "t", "Yesterday Modi spoke.", "s", std::nullopt};
    const auto m = recognize_entities(d, r);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].kind, EntityKind::person);
    EXPECT_EQ(m[0].span, (ByteSpan{10, 14}));
    const auto h = sidecar::health(mock.endpoint());
    EXPECT_EQ(h.status, "ok");
    EXPECT_EQ(h.model, "mock-nli");
}
