#pragma once

#include "stakenli/entity_pipeline.hpp"
#include "stakenli/error.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/zeroshot.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

/// Client side of the model sidecar wire protocol:
///   POST /v1/entail  {"pairs":[{"premise","hypothesis"}]} -> {"scores":[float]}
///   POST /v1/ner     {"text"} -> {"entities":[{"surface","kind","start","end"}]}
///   GET  /v1/health  -> {"status":"ok","model":str}
namespace stakenli::sidecar {

struct ClientOptions {
    std::chrono::milliseconds timeout{30000};
    std::size_t max_retries = 3;
    std::chrono::milliseconds backoff{200};  ///< doubled after every failed attempt
};

/// One keep-alive connection; requests on it are serialized.
class Client {
public:
    explicit Client(std::string endpoint, ClientOptions options = {})
        : endpoint_(std::move(endpoint)), options_(options), http_(normalize(endpoint_))
    {
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
        http_.set_connection_timeout(secs.count(), usecs.count());
        http_.set_read_timeout(secs.count(), usecs.count());
        http_.set_write_timeout(secs.count(), usecs.count());
        http_.set_keep_alive(true);
    }

    const std::string& endpoint() const { return endpoint_; }
    std::size_t request_count() const { return requests_.load(); }

    /// POSTs `body`, retrying connection failures, timeouts and 5xx replies
    /// with exponential backoff. Anything else that is not a JSON 200 reply
    /// is a protocol error.
    json post(const std::string& path, const json& body) { return call(path, &body); }

    json get(const std::string& path) { return call(path, nullptr); }

private:
    static std::string normalize(std::string e)
    {
        while (!e.empty() && e.back() == '/') e.pop_back();
        if (e.find("://") == std::string::npos) e = "http://" + e;
        return e;
    }

    json call(const std::string& path, const json* body)
    {
        const std::string backend = "sidecar " + endpoint_;
        const std::string payload = body ? body->dump() : std::string();
        auto delay = options_.backoff;
        std::string last_failure;
        for (std::size_t attempt = 0; attempt <= options_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(delay);
                delay *= 2;
            }
            httplib::Result res;
            {
                std::lock_guard lock(mutex_);
                ++requests_;
                res = body ? http_.Post(path, payload, "application/json") : http_.Get(path);
            }
            if (!res) {
                last_failure = httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_failure = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) throw protocol_error(backend, path + " answered HTTP " + std::to_string(res->status));
            try {
                return json::parse(res->body);
            } catch (const json::parse_error&) {
                throw protocol_error(backend, path + " answered with a non-JSON body");
            }
        }
        throw transport_error(backend, path + " failed after " + std::to_string(options_.max_retries) +
                                           " retries: " + last_failure);
    }

    std::string endpoint_;
    ClientOptions options_;
    std::mutex mutex_;
    httplib::Client http_;
    std::atomic<std::size_t> requests_{0};
};

/// Entailment scorer backed by POST /v1/entail; large inputs are sent in
/// chunks of at most `max_batch` pairs and reassembled in order.
class SidecarScorer final : public zeroshot::EntailmentScorer {
public:
    SidecarScorer(std::string endpoint, std::size_t max_batch, ClientOptions options = {})
        : client_(std::move(endpoint), options), max_batch_(max_batch)
    {
        if (max_batch_ == 0) throw input_error("max_batch must be positive");
    }

    std::string id() const override { return "sidecar"; }

    std::size_t request_count() const { return client_.request_count(); }

    std::vector<double> score_batch(std::span<const zeroshot::PremiseHypothesis> pairs) override
    {
        const std::string backend = "sidecar " + client_.endpoint();
        std::vector<double> out;
        out.reserve(pairs.size());
        for (std::size_t start = 0; start < pairs.size(); start += max_batch_) {
            const auto chunk = pairs.subspan(start, std::min(max_batch_, pairs.size() - start));
            json req{{"pairs", json::array()}};
            for (const auto& p : chunk) req["pairs"].push_back({{"premise", p.premise}, {"hypothesis", p.hypothesis}});
            const json res = client_.post("/v1/entail", req);
            if (!res.is_object() || !res.contains("scores") || !res["scores"].is_array())
                throw protocol_error(backend, "reply lacks a 'scores' array");
            const auto& scores = res["scores"];
            if (scores.size() != chunk.size())
                throw protocol_error(backend, "returned " + std::to_string(scores.size()) + " scores for " +
                                                  std::to_string(chunk.size()) + " pairs");
            for (const auto& s : scores) {
                if (!s.is_number()) throw protocol_error(backend, "non-numeric score");
                const double v = s.get<double>();
                if (!(v >= 0.0 && v <= 1.0)) throw protocol_error(backend, "score outside [0,1]");
                out.push_back(v);
            }
        }
        return out;
    }

private:
    Client client_;
    std::size_t max_batch_;
};

/// Recognizer backed by POST /v1/ner. Offsets in the reply are byte offsets.
class SidecarRecognizer final : public EntityRecognizer {
public:
    explicit SidecarRecognizer(std::string endpoint, ClientOptions options = {})
        : client_(std::move(endpoint), options)
    {
    }

    std::string name() const override { return "sidecar " + client_.endpoint(); }

    std::vector<RecognizedEntity> recognize(std::string_view text) override
    {
        const json res = client_.post("/v1/ner", json{{"text", std::string(text)}});
        if (!res.is_object() || !res.contains("entities") || !res["entities"].is_array())
            throw provider_error(name(), "reply lacks an 'entities' array");
        std::vector<RecognizedEntity> out;
        for (const auto& e : res["entities"]) {
            try {
                RecognizedEntity r;
                r.surface = io::require_string(e, "surface");
                r.kind = parse_entity_kind(io::require_string(e, "kind")).value_or(EntityKind::other);
                r.span = {io::require_index(e, "start"), io::require_index(e, "end")};
                out.push_back(std::move(r));
            } catch (const Error& err) {
                throw provider_error(name(), err.what());
            }
        }
        return out;
    }

private:
    Client client_;
};

struct Health {
    std::string status;
    std::string model;
};

inline Health health(const std::string& endpoint, ClientOptions options = {})
{
    Client c(endpoint, options);
    const json res = c.get("/v1/health");
    if (!res.is_object()) throw protocol_error("sidecar " + endpoint, "health reply is not an object");
    return {res.value("status", ""), res.value("model", "")};
}

}  // namespace stakenli::sidecar
