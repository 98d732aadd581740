#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oracle/types.hpp"

namespace oracle {

// Aligned source/target embedding rows for one language pair; row i of src
// and row i of tgt embed the same sentence pair. Optional per-pair gold
// similarity scores in [0,5] for STS evaluation.
struct EmbeddingCorpus {
    std::uint16_t src_lang = 0;
    std::uint16_t tgt_lang = 1;
    Matrix src, tgt;
    Vector gold;
    bool has_gold = false;

    Index n() const { return src.rows(); }
    Index dim() const { return src.cols(); }
};

struct LanguageId {
    std::uint16_t id;
    std::string iso;
};

// Planted-structure corpus: shared semantic latents, per-language orthogonal
// frames, constant language offsets, isotropic noise.
struct SyntheticSpec {
    Index n_pairs = 2000;
    int d = 16;
    int k = 8;  // semantic latent dimension
    double language_offset_scale = 4.0;
    double noise_sigma = 0.05;
    std::uint64_t seed = 0;
    std::uint16_t src_lang = 0;
    std::uint16_t tgt_lang = 1;
};

// OEMB container (little-endian): "OEMB", u16 version=1, u16 flags (bit0 =
// gold scores present), u32 dim, u32 count, u16 src_lang, u16 tgt_lang,
// count x (dim f32 source row, dim f32 target row), then count x f32 gold
// when flagged. Storage is 32-bit; in-memory values are 64-bit.
EmbeddingCorpus load_corpus(const std::string& path);
void save_corpus(const EmbeddingCorpus& corpus, const std::string& path);

struct SplitResult {
    EmbeddingCorpus train, val, test;
};

// Seeded permutation, then contiguous slices of floor(N*f) rows for train and
// val; the remainder is test. Errors when a positive fraction yields an empty
// split.
SplitResult split_corpus(const EmbeddingCorpus& corpus, double f_train, double f_val,
                         double f_test, std::uint64_t seed);

// Per-epoch seeded shuffle cut into batch_size slices; a trailing slice of
// size < 2 is dropped (size >= 2 short slices are kept).
std::vector<std::vector<Index>> batch_iter(Index n, Index batch_size, std::uint64_t seed,
                                           std::uint64_t epoch);

EmbeddingCorpus generate_synthetic(const SyntheticSpec& spec);

EmbeddingCorpus take_rows(const EmbeddingCorpus& corpus, const std::vector<Index>& rows);

// Structured text sidecar mapping language id -> ISO code.
void write_language_registry(const std::string& path, const std::vector<LanguageId>& langs);
std::vector<LanguageId> read_language_registry(const std::string& path);

}  // namespace oracle
