#pragma once

// Per-repository text assembly and the embeddings service client.

#include <cstdint>
#include <string>
#include <vector>

#include "repofind/core.hpp"
#include "repofind/http.hpp"

namespace repofind {

class Store;

inline constexpr std::size_t kEmbeddingFieldLimit = 10'000;

struct AssembledText {
    std::string repo_id;
    std::string text;

    friend bool operator==(const AssembledText&, const AssembledText&) = default;
};

AssembledText assemble_text(const RepoRecord& repo, const OrgRecord* org, const std::vector<ContributorRecord>& top2,
                            std::size_t field_limit = kEmbeddingFieldLimit);

struct EmbeddingVector {
    std::string repo_id;
    std::string model_tag;
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

/// The service failed for these repositories after retries.
class EmbeddingError : public NetworkError {
public:
    EmbeddingError(const std::string& what, std::vector<std::string> repo_ids)
        : NetworkError(what), repo_ids_(std::move(repo_ids)) {}
    const std::vector<std::string>& repo_ids() const { return repo_ids_; }

private:
    std::vector<std::string> repo_ids_;
};

/// POST {base}/v1/embeddings {model, input:[...]} -> {data:[{index, embedding}]}.
class EmbeddingClient {
public:
    EmbeddingClient(ApiClient& api, std::string model, std::size_t batch_size = 64);

    const std::string& model_tag() const { return model_; }
    std::size_t batch_size() const { return batch_size_; }
    std::int64_t requests() const { return requests_; }

    /// One vector per text, in input order. Throws ProtocolError on malformed
    /// bodies or mixed dimensions; NetworkError when the service fails.
    std::vector<std::vector<double>> embed_texts(const std::vector<std::string>& texts);

private:
    ApiClient& api_;
    std::string model_;
    std::size_t batch_size_;
    std::int64_t requests_ = 0;
};

/// Embeds a batch, consulting and filling the store cache keyed by
/// (repo_id, model, sha256 of text) when `cache` is given. Order-preserving.
/// Throws InputError for an empty batch, EmbeddingError naming the uncached
/// repos when the service fails, ProtocolError when dimensions disagree.
std::vector<EmbeddingVector> embed(const std::vector<AssembledText>& texts, EmbeddingClient& client,
                                   Store* cache = nullptr);

}  // namespace repofind
