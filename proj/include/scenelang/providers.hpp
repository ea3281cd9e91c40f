#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace scenelang {

// Fuses ranked caption candidates into one sentence.
class RefineProvider {
  public:
    virtual ~RefineProvider() = default;
    virtual std::string refine(const std::string& prompt,
                               const std::vector<std::string>& candidates) = 0;
};

// Text -> embedding vector.
class EmbedProvider {
  public:
    virtual ~EmbedProvider() = default;
    virtual std::vector<double> embed(const std::string& input) = 0;
};

// Scores a caption or relation sentence in [0, 1].
class JudgeProvider {
  public:
    virtual ~JudgeProvider() = default;
    virtual double score(const std::string& kind, const std::string& text,
                         const std::string& context) = 0;
};

// Rewrites a low-scoring sentence.
class CorrectorProvider {
  public:
    virtual ~CorrectorProvider() = default;
    virtual std::string correct(const std::string& text, const std::string& context) = 0;
};

struct HttpProviderConfig {
    std::string endpoint;  // http://host:port/path
    std::string auth_token_env = "SCENELANG_API_TOKEN";
    int timeout_ms = 10000;
    int attempts = 3;       // total tries, exponential backoff between them
    int backoff_ms = 200;   // first retry delay; doubles per retry
    int max_in_flight = 4;  // concurrent requests across objects
};

// HTTP JSON services. Bodies follow the wire contracts:
//   refine:    {"prompt", "candidates"} -> {"caption"}
//   embed:     {"input"} -> {"embedding"}
//   judge:     {"kind", "text", "context"} -> {"score"}
//   corrector: {"text", "context"} -> {"text"}
// Transport errors and 5xx responses are retried with exponential backoff;
// anything still failing surfaces as ProviderError.
std::unique_ptr<RefineProvider> make_http_refine_provider(const HttpProviderConfig& cfg);
std::unique_ptr<EmbedProvider> make_http_embed_provider(const HttpProviderConfig& cfg);
std::unique_ptr<JudgeProvider> make_http_judge_provider(const HttpProviderConfig& cfg);
std::unique_ptr<CorrectorProvider> make_http_corrector_provider(const HttpProviderConfig& cfg);

// Deterministic pseudo-embeddings for hermetic offline runs: each lowercase
// token hashes to a fixed unit vector in R^dim.
std::vector<std::string> tokenize_lower(const std::string& text);
std::vector<double> hash_token_embedding(const std::string& token, int dim);
std::vector<std::vector<double>> hash_text_embedding(const std::string& text, int dim);

// Runs fn(i) for i in [0, n) on up to max_in_flight worker threads. The first
// exception is rethrown after all workers finish; results keep index order
// because fn writes into caller-owned slots.
void run_parallel(int n, int max_in_flight, const std::function<void(int)>& fn);

} // namespace scenelang
