#pragma once

#include <random>
#include <string>
#include <vector>

#include "laekit/tensor.hpp"

namespace laekit {

// Learnable per-attribute token vectors. Rows are the only parameters in
// the prompt path that ever receive gradients.
struct StyleTokenTable {
    std::vector<std::string> attribute_names;  // n entries
    Tensor tokens;                             // (n, m, d_l)

    int num_attributes() const { return tokens.shape.empty() ? 0 : tokens.shape[0]; }
    int tokens_per_attribute() const { return tokens.shape.size() > 1 ? tokens.shape[1] : 0; }
    int token_dim() const { return tokens.shape.size() > 2 ? tokens.shape[2] : 0; }
};

// Tokens i.i.d. N(0, 0.02^2), deterministic per seed. Names must be unique.
StyleTokenTable init_style_tokens(const std::vector<std::string>& attribute_names, int m,
                                  int token_dim, std::mt19937_64& rng);

// Frozen word embeddings: each word's vector is seeded from a hash of the
// word itself, so every component that embeds text agrees byte-for-byte.
Tensor embed_word(const std::string& word, int dim);
std::vector<Tensor> embed_text(const std::string& text, int dim);  // whitespace-split

// Frozen instruction shared by every attribute prompt.
struct SystemPrompt {
    std::vector<std::string> words;
    std::vector<Tensor> embedded;  // one vector per word

    static SystemPrompt from_text(const std::string& text, int dim);
};

inline constexpr const char* kDefaultSystemPrompt = "a photo of a face with";

// Ordered token sequence [SOS, V_1..V_m, t_1..t_Lt, A_1..A_k, EOS]; the
// trainable mask is true exactly on the V slots.
struct PromptAssembly {
    std::vector<Tensor> sequence;
    std::vector<bool> trainable;
    int attribute_index = 0;
};

PromptAssembly assemble_prompt(const StyleTokenTable& table, int attribute_index,
                               const SystemPrompt& system,
                               const std::vector<Tensor>& attribute_embeddings);

}  // namespace laekit
