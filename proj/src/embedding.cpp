#include "repofind/embedding.hpp"

#include <cmath>

#include "repofind/assembly.hpp"
#include "repofind/store.hpp"
#include "repofind/text.hpp"

namespace repofind {

AssembledText assemble_text(const RepoRecord& repo, const OrgRecord* org, const std::vector<ContributorRecord>& top2,
                            std::size_t field_limit) {
    return {repo.repo_id, render_fields(labeled_fields(repo, org, top2), field_limit)};
}

EmbeddingClient::EmbeddingClient(ApiClient& api, std::string model, std::size_t batch_size)
    : api_(api), model_(std::move(model)), batch_size_(batch_size == 0 ? 1 : batch_size) {}

std::vector<std::vector<double>> EmbeddingClient::embed_texts(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const auto end = std::min(texts.size(), start + batch_size_);
        nlohmann::json input = nlohmann::json::array();
        for (auto i = start; i < end; ++i) input.push_back(texts[i]);
        ++requests_;
        const auto response = api_.post_json("/v1/embeddings", {{"model", model_}, {"input", input}});
        if (response.status != 200)
            throw NetworkError("embeddings service returned HTTP " + std::to_string(response.status));

        std::vector<std::vector<double>> batch(end - start);
        try {
            const auto body = nlohmann::json::parse(response.body);
            const auto& data = body.at("data");
            if (!data.is_array() || data.size() != batch.size())
                throw ProtocolError("embeddings response has " + std::to_string(data.size()) + " vectors for " +
                                    std::to_string(batch.size()) + " inputs");
            for (const auto& item : data) {
                const auto index = item.at("index").get<std::size_t>();
                if (index >= batch.size() || !batch[index].empty())
                    throw ProtocolError("embeddings response has a bad or repeated index");
                batch[index] = item.at("embedding").get<std::vector<double>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed embeddings response: ") + e.what());
        }
        for (auto& v : batch) {
            if (v.empty()) throw ProtocolError("embeddings response contains an empty vector");
            for (double x : v)
                if (!std::isfinite(x)) throw ProtocolError("embeddings response contains a non-finite value");
            if (!out.empty() && v.size() != out.front().size())
                throw ProtocolError("embedding dimension mismatch: " + std::to_string(v.size()) + " vs " +
                                    std::to_string(out.front().size()));
            out.push_back(std::move(v));
        }
    }
    return out;
}

std::vector<EmbeddingVector> embed(const std::vector<AssembledText>& texts, EmbeddingClient& client, Store* cache) {
    if (texts.empty()) throw InputError("embed needs a non-empty batch");
    const auto& tag = client.model_tag();
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::string> hashes(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out[i].repo_id = texts[i].repo_id;
        out[i].model_tag = tag;
        hashes[i] = text::sha256_hex(texts[i].text);
        if (cache) {
            if (auto hit = cache->cached_embedding(texts[i].repo_id, tag, hashes[i])) {
                out[i].values = std::move(*hit);
                continue;
            }
        }
        missing.push_back(i);
    }

    if (!missing.empty()) {
        std::vector<std::string> batch;
        for (auto i : missing) batch.push_back(texts[i].text);
        std::vector<std::vector<double>> vectors;
        try {
            vectors = client.embed_texts(batch);
        } catch (const ProtocolError&) {
            throw;
        } catch (const NetworkError& e) {
            std::vector<std::string> ids;
            for (auto i : missing) ids.push_back(texts[i].repo_id);
            throw EmbeddingError(std::string("embedding failed: ") + e.what(), std::move(ids));
        }
        for (std::size_t k = 0; k < missing.size(); ++k) out[missing[k]].values = std::move(vectors[k]);
    }

    const auto dim = out.front().dim();
    for (const auto& v : out)
        if (v.dim() != dim)
            throw ProtocolError("embedding dimension mismatch for " + v.repo_id + ": " + std::to_string(v.dim()) +
                                " vs " + std::to_string(dim));
    if (cache)
        for (auto i : missing) cache->put_embedding(texts[i].repo_id, tag, hashes[i], out[i].values);
    return out;
}

}  // namespace repofind
