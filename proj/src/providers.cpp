#include "scenelang/providers.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scenelang/errors.hpp"
#include "scenelang/rng.hpp"

namespace scenelang {

using nlohmann::json;

namespace {

struct ParsedEndpoint {
    std::string host;
    int port = 80;
    std::string path = "/";
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    std::string rest = endpoint;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) != 0) {
        throw ValidationError("provider endpoint must start with http://: " + endpoint);
    }
    rest = rest.substr(scheme.size());
    ParsedEndpoint out;
    const auto slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = hostport.find(':');
    if (colon == std::string::npos) {
        out.host = hostport;
    } else {
        out.host = hostport.substr(0, colon);
        out.port = std::stoi(hostport.substr(colon + 1));
    }
    if (out.host.empty()) {
        throw ValidationError("provider endpoint has no host: " + endpoint);
    }
    return out;
}

// Shared POST-JSON-with-retries transport.
class HttpJsonClient {
  public:
    explicit HttpJsonClient(const HttpProviderConfig& cfg)
        : cfg_(cfg), parsed_(parse_endpoint(cfg.endpoint)) {}

    json post(const json& body) const {
        std::string last_error = "no attempts made";
        int delay_ms = cfg_.backoff_ms;
        for (int attempt = 0; attempt < std::max(1, cfg_.attempts); ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                delay_ms *= 2;
            }
            httplib::Client client(parsed_.host, parsed_.port);
            client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
            client.set_read_timeout(cfg_.timeout_ms / 1000, (cfg_.timeout_ms % 1000) * 1000);
            httplib::Headers headers;
            if (const char* token = std::getenv(cfg_.auth_token_env.c_str())) {
                headers.emplace("Authorization", std::string("Bearer ") + token);
            }
            auto res = client.Post(parsed_.path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error: HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw ProviderError("provider returned HTTP " + std::to_string(res->status) +
                                    " from " + cfg_.endpoint);
            }
            json parsed = json::parse(res->body, nullptr, false);
            if (parsed.is_discarded()) {
                throw ProviderError("provider returned invalid JSON from " + cfg_.endpoint);
            }
            return parsed;
        }
        throw ProviderError("provider unreachable after " + std::to_string(cfg_.attempts) +
                            " attempts (" + last_error + "): " + cfg_.endpoint);
    }

  private:
    HttpProviderConfig cfg_;
    ParsedEndpoint parsed_;
};

class HttpRefineProvider : public RefineProvider {
  public:
    explicit HttpRefineProvider(const HttpProviderConfig& cfg) : client_(cfg) {}

    std::string refine(const std::string& prompt,
                       const std::vector<std::string>& candidates) override {
        json body;
        body["prompt"] = prompt;
        body["candidates"] = candidates;
        const json res = client_.post(body);
        if (!res.contains("caption") || !res["caption"].is_string()) {
            throw ProviderError("malformed refine response: missing 'caption'");
        }
        const std::string caption = res["caption"].get<std::string>();
        if (caption.empty()) {
            throw ProviderError("malformed refine response: empty caption");
        }
        return caption;
    }

  private:
    HttpJsonClient client_;
};

class HttpEmbedProvider : public EmbedProvider {
  public:
    explicit HttpEmbedProvider(const HttpProviderConfig& cfg) : client_(cfg) {}

    std::vector<double> embed(const std::string& input) override {
        json body;
        body["input"] = input;
        const json res = client_.post(body);
        if (!res.contains("embedding") || !res["embedding"].is_array() ||
            res["embedding"].empty()) {
            throw ProviderError("malformed embed response: missing 'embedding'");
        }
        return res["embedding"].get<std::vector<double>>();
    }

  private:
    HttpJsonClient client_;
};

class HttpJudgeProvider : public JudgeProvider {
  public:
    explicit HttpJudgeProvider(const HttpProviderConfig& cfg) : client_(cfg) {}

    double score(const std::string& kind, const std::string& text,
                 const std::string& context) override {
        json body;
        body["kind"] = kind;
        body["text"] = text;
        body["context"] = context;
        const json res = client_.post(body);
        if (!res.contains("score") || !res["score"].is_number()) {
            throw ProviderError("malformed judge response: missing 'score'");
        }
        const double s = res["score"].get<double>();
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ProviderError("judge score out of [0, 1]");
        }
        return s;
    }

  private:
    HttpJsonClient client_;
};

class HttpCorrectorProvider : public CorrectorProvider {
  public:
    explicit HttpCorrectorProvider(const HttpProviderConfig& cfg) : client_(cfg) {}

    std::string correct(const std::string& text, const std::string& context) override {
        json body;
        body["text"] = text;
        body["context"] = context;
        const json res = client_.post(body);
        if (!res.contains("text") || !res["text"].is_string() ||
            res["text"].get<std::string>().empty()) {
            throw ProviderError("malformed corrector response: missing 'text'");
        }
        return res["text"].get<std::string>();
    }

  private:
    HttpJsonClient client_;
};

} // namespace

std::unique_ptr<RefineProvider> make_http_refine_provider(const HttpProviderConfig& cfg) {
    return std::make_unique<HttpRefineProvider>(cfg);
}

std::unique_ptr<EmbedProvider> make_http_embed_provider(const HttpProviderConfig& cfg) {
    return std::make_unique<HttpEmbedProvider>(cfg);
}

std::unique_ptr<JudgeProvider> make_http_judge_provider(const HttpProviderConfig& cfg) {
    return std::make_unique<HttpJudgeProvider>(cfg);
}

std::unique_ptr<CorrectorProvider> make_http_corrector_provider(const HttpProviderConfig& cfg) {
    return std::make_unique<HttpCorrectorProvider>(cfg);
}

std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc) || c == '\'') {
            current.push_back(static_cast<char>(std::tolower(uc)));
        } else if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(current);
    }
    return tokens;
}

std::vector<double> hash_token_embedding(const std::string& token, int dim) {
    Rng rng(fnv1a(token.data(), token.size()));
    std::vector<double> v(dim);
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        v[i] = rng.uniform(-1.0, 1.0);
        sq += v[i] * v[i];
    }
    const double n = std::sqrt(sq);
    for (double& x : v) {
        x /= n;
    }
    return v;
}

std::vector<std::vector<double>> hash_text_embedding(const std::string& text, int dim) {
    std::vector<std::vector<double>> rows;
    for (const std::string& token : tokenize_lower(text)) {
        rows.push_back(hash_token_embedding(token, dim));
    }
    return rows;
}

void run_parallel(int n, int max_in_flight, const std::function<void(int)>& fn) {
    if (n <= 0) {
        return;
    }
    const int workers = std::max(1, std::min(max_in_flight, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (std::thread& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace scenelang
