#include "laekit/prompt.hpp"

#include <set>
#include <sstream>
#include <stdexcept>

namespace laekit {

StyleTokenTable init_style_tokens(const std::vector<std::string>& attribute_names, int m,
                                  int token_dim, std::mt19937_64& rng) {
    if (attribute_names.empty()) throw std::invalid_argument("need at least one attribute");
    if (m < 1) throw std::invalid_argument("tokens per attribute must be >= 1");
    if (token_dim < 1) throw std::invalid_argument("token dimension must be >= 1");
    std::set<std::string> seen(attribute_names.begin(), attribute_names.end());
    if (seen.size() != attribute_names.size())
        throw std::invalid_argument("duplicate attribute names");
    StyleTokenTable table;
    table.attribute_names = attribute_names;
    table.tokens = Tensor::gaussian({static_cast<int>(attribute_names.size()), m, token_dim},
                                    0.02f, rng);
    return table;
}

Tensor embed_word(const std::string& word, int dim) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : word) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::mt19937_64 rng(h);
    // unit-ish scale so the pooled sequence keeps tanh in its active range
    return Tensor::gaussian({dim}, 0.5f, rng);
}

std::vector<Tensor> embed_text(const std::string& text, int dim) {
    std::vector<Tensor> out;
    std::istringstream ss(text);
    std::string word;
    while (ss >> word) out.push_back(embed_word(word, dim));
    return out;
}

SystemPrompt SystemPrompt::from_text(const std::string& text, int dim) {
    SystemPrompt p;
    std::istringstream ss(text);
    std::string word;
    while (ss >> word) {
        p.words.push_back(word);
        p.embedded.push_back(embed_word(word, dim));
    }
    return p;
}

PromptAssembly assemble_prompt(const StyleTokenTable& table, int attribute_index,
                               const SystemPrompt& system,
                               const std::vector<Tensor>& attribute_embeddings) {
    if (attribute_index < 0 || attribute_index >= table.num_attributes())
        throw std::out_of_range("attribute index out of range");
    int d = table.token_dim();
    for (const Tensor& e : system.embedded)
        if (e.size() != d) throw std::invalid_argument("system prompt embedding dim mismatch");
    for (const Tensor& e : attribute_embeddings)
        if (e.size() != d) throw std::invalid_argument("attribute embedding dim mismatch");

    PromptAssembly a;
    a.attribute_index = attribute_index;
    auto push = [&](Tensor t, bool train) {
        a.sequence.push_back(std::move(t));
        a.trainable.push_back(train);
    };
    push(embed_word("<sos>", d), false);
    int m = table.tokens_per_attribute();
    for (int j = 0; j < m; ++j) {
        Tensor v = Tensor::zeros({d});
        int base = (attribute_index * m + j) * d;
        for (int k = 0; k < d; ++k) v[k] = table.tokens[base + k];
        push(std::move(v), true);
    }
    for (const Tensor& e : system.embedded) push(e, false);
    for (const Tensor& e : attribute_embeddings) push(e, false);
    push(embed_word("<eos>", d), false);
    return a;
}

}  // namespace laekit
