#include "oracle/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include "oracle/rng.hpp"

namespace oracle {

namespace {

constexpr std::size_t kHeaderBytes = 20;
constexpr std::uint64_t kMaxDim = 1u << 20;
constexpr std::uint64_t kMaxCount = 1u << 30;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint16_t get_u16(const std::string& buf, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(buf[off]) |
                                      (static_cast<unsigned char>(buf[off + 1]) << 8));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
    return v;
}

float get_f32(const std::string& buf, std::size_t off) {
    const std::uint32_t bits = get_u32(buf, off);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

EmbeddingCorpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file \"" + path + "\"");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < kHeaderBytes)
        throw DataError(path + ": truncated header, " + std::to_string(buf.size()) +
                        " bytes (need 20) at byte offset 0");
    if (buf.compare(0, 4, "OEMB") != 0)
        throw DataError(path + ": bad magic at byte offset 0");
    const std::uint16_t version = get_u16(buf, 4);
    if (version != 1)
        throw DataError(path + ": unsupported version " + std::to_string(version) +
                        " at byte offset 4");
    const std::uint16_t flags = get_u16(buf, 6);
    if (flags & ~std::uint16_t(1))
        throw DataError(path + ": unknown flags " + std::to_string(flags) +
                        " at byte offset 6");
    const std::uint64_t dim = get_u32(buf, 8);
    const std::uint64_t count = get_u32(buf, 12);
    if (dim > kMaxDim)
        throw DataError(path + ": dim overflow (" + std::to_string(dim) +
                        ") at byte offset 8");
    if (count > kMaxCount)
        throw DataError(path + ": count overflow (" + std::to_string(count) +
                        ") at byte offset 12");
    if (count > 0 && dim == 0)
        throw DataError(path + ": dim 0 with nonzero count at byte offset 8");

    EmbeddingCorpus c;
    c.src_lang = get_u16(buf, 16);
    c.tgt_lang = get_u16(buf, 18);
    c.has_gold = (flags & 1) != 0;

    const std::uint64_t body = count * dim * 2ULL * 4ULL;
    const std::uint64_t expected = kHeaderBytes + body + (c.has_gold ? count * 4ULL : 0ULL);
    if (buf.size() != expected)
        throw DataError(path + ": truncated file, expected " + std::to_string(expected) +
                        " bytes, got " + std::to_string(buf.size()) +
                        " (records begin at byte offset 20)");

    c.src.resize(static_cast<Index>(count), static_cast<Index>(dim));
    c.tgt.resize(static_cast<Index>(count), static_cast<Index>(dim));
    std::size_t off = kHeaderBytes;
    auto read_row = [&](Matrix& M, Index i) {
        for (Index j = 0; j < static_cast<Index>(dim); ++j, off += 4) {
            const float v = get_f32(buf, off);
            if (!std::isfinite(v))
                throw DataError(path + ": non-finite value at byte offset " +
                                std::to_string(off));
            M(i, j) = static_cast<double>(v);
        }
    };
    for (Index i = 0; i < static_cast<Index>(count); ++i) {
        read_row(c.src, i);
        read_row(c.tgt, i);
    }
    if (c.has_gold) {
        c.gold.resize(static_cast<Index>(count));
        for (Index i = 0; i < static_cast<Index>(count); ++i, off += 4) {
            const float v = get_f32(buf, off);
            if (!std::isfinite(v))
                throw DataError(path + ": non-finite gold score at byte offset " +
                                std::to_string(off));
            c.gold(i) = static_cast<double>(v);
        }
    }
    return c;
}

void save_corpus(const EmbeddingCorpus& corpus, const std::string& path) {
    require_same_shape(corpus.src, corpus.tgt, "save_corpus");
    if (corpus.has_gold && corpus.gold.size() != corpus.n())
        throw DataError("save_corpus: gold scores length " + std::to_string(corpus.gold.size()) +
                        " vs " + std::to_string(corpus.n()) + " pairs");
    if (!corpus.src.allFinite() || !corpus.tgt.allFinite())
        throw DataError("save_corpus: non-finite embedding value");

    std::string buf;
    buf.reserve(kHeaderBytes + static_cast<std::size_t>(corpus.src.size()) * 8);
    buf += "OEMB";
    put_u16(buf, 1);
    put_u16(buf, corpus.has_gold ? 1 : 0);
    put_u32(buf, static_cast<std::uint32_t>(corpus.dim()));
    put_u32(buf, static_cast<std::uint32_t>(corpus.n()));
    put_u16(buf, corpus.src_lang);
    put_u16(buf, corpus.tgt_lang);
    for (Index i = 0; i < corpus.n(); ++i) {
        for (Index j = 0; j < corpus.dim(); ++j)
            put_f32(buf, static_cast<float>(corpus.src(i, j)));
        for (Index j = 0; j < corpus.dim(); ++j)
            put_f32(buf, static_cast<float>(corpus.tgt(i, j)));
    }
    if (corpus.has_gold)
        for (Index i = 0; i < corpus.n(); ++i) put_f32(buf, static_cast<float>(corpus.gold(i)));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write corpus file \"" + path + "\"");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed for \"" + path + "\"");
}

EmbeddingCorpus take_rows(const EmbeddingCorpus& corpus, const std::vector<Index>& rows) {
    EmbeddingCorpus out;
    out.src_lang = corpus.src_lang;
    out.tgt_lang = corpus.tgt_lang;
    out.has_gold = corpus.has_gold;
    out.src.resize(static_cast<Index>(rows.size()), corpus.dim());
    out.tgt.resize(static_cast<Index>(rows.size()), corpus.dim());
    if (corpus.has_gold) out.gold.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.src.row(static_cast<Index>(i)) = corpus.src.row(rows[i]);
        out.tgt.row(static_cast<Index>(i)) = corpus.tgt.row(rows[i]);
        if (corpus.has_gold) out.gold(static_cast<Index>(i)) = corpus.gold(rows[i]);
    }
    return out;
}

SplitResult split_corpus(const EmbeddingCorpus& corpus, double f_train, double f_val,
                         double f_test, std::uint64_t seed) {
    if (f_train < 0 || f_val < 0 || f_test < 0 ||
        std::abs(f_train + f_val + f_test - 1.0) > 1e-9)
        throw DataError("split_corpus: fractions must be >= 0 and sum to 1");
    const Index N = corpus.n();
    const auto n_train = static_cast<Index>(std::floor(static_cast<double>(N) * f_train + 1e-9));
    const auto n_val = static_cast<Index>(std::floor(static_cast<double>(N) * f_val + 1e-9));
    const Index n_test = N - n_train - n_val;
    if ((f_train > 0 && n_train == 0) || (f_val > 0 && n_val == 0) ||
        (f_test > 0 && n_test == 0))
        throw DataError("split_corpus: N=" + std::to_string(N) +
                        " too small for the requested fractions");

    Rng rng(seed);
    std::vector<Index> perm = rng.permutation(N);
    const std::vector<Index> tr(perm.begin(), perm.begin() + n_train);
    const std::vector<Index> va(perm.begin() + n_train, perm.begin() + n_train + n_val);
    const std::vector<Index> te(perm.begin() + n_train + n_val, perm.end());
    return {take_rows(corpus, tr), take_rows(corpus, va), take_rows(corpus, te)};
}

std::vector<std::vector<Index>> batch_iter(Index n, Index batch_size, std::uint64_t seed,
                                           std::uint64_t epoch) {
    if (batch_size < 2) throw DataError("batch_iter: batch_size must be >= 2");
    Rng rng(batch_seed(seed, epoch));
    std::vector<Index> perm = rng.permutation(n);
    std::vector<std::vector<Index>> batches;
    for (Index start = 0; start < n; start += batch_size) {
        const Index len = std::min(batch_size, n - start);
        if (len < 2) break;  // drop a trailing singleton
        batches.emplace_back(perm.begin() + start, perm.begin() + start + len);
    }
    return batches;
}

EmbeddingCorpus generate_synthetic(const SyntheticSpec& spec) {
    if (spec.k < 1) throw DataError("generate_synthetic: k must be >= 1");
    if (spec.k > spec.d)
        throw DataError("generate_synthetic: k=" + std::to_string(spec.k) + " > d=" +
                        std::to_string(spec.d));
    if (spec.language_offset_scale < 0 || spec.noise_sigma < 0)
        throw DataError("generate_synthetic: negative scale");
    if (spec.language_offset_scale > 0 && spec.d < spec.k + 2)
        throw DataError("generate_synthetic: language offsets need d >= k+2");
    if (spec.n_pairs < 0) throw DataError("generate_synthetic: negative n_pairs");

    // Draw order is pinned: latents, then the orthogonal frame, then noise.
    Rng rng(spec.seed);
    const Index n = spec.n_pairs, d = spec.d, k = spec.k;
    Matrix latents = rng.gauss_matrix(n, k);

    // One orthogonal d x d frame; both language maps share the semantic block
    // (the only columns [m; 0] touches), the two offset directions come from
    // the orthogonal complement, so b_s dot b_t = 0 and both are orthogonal to
    // the semantic span.
    Matrix G = rng.gauss_matrix(d, d);
    Eigen::HouseholderQR<Matrix> qr(G);
    Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
    Matrix R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (Index j = 0; j < d; ++j)
        if (R(j, j) < 0) Q.col(j) = -Q.col(j);

    const Matrix sem = Q.leftCols(k);
    Vector b_s = Vector::Zero(d), b_t = Vector::Zero(d);
    if (spec.language_offset_scale > 0) {
        b_s = spec.language_offset_scale * Q.col(k);
        b_t = spec.language_offset_scale * Q.col(k + 1);
    }

    EmbeddingCorpus c;
    c.src_lang = spec.src_lang;
    c.tgt_lang = spec.tgt_lang;
    c.src = latents * sem.transpose();
    c.tgt = c.src;
    c.src.rowwise() += b_s.transpose();
    c.tgt.rowwise() += b_t.transpose();
    if (spec.noise_sigma > 0) {
        // The formula adds the same eps realization to both languages.
        Matrix noise = spec.noise_sigma * rng.gauss_matrix(n, d);
        c.src += noise;
        c.tgt += noise;
    }
    return c;
}

void write_language_registry(const std::string& path, const std::vector<LanguageId>& langs) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& l : langs) {
        if (l.iso.empty()) throw DataError("language registry: empty ISO code");
        const std::string key = std::to_string(l.id);
        if (j.contains(key)) throw DataError("language registry: duplicate id " + key);
        j[key] = l.iso;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write language registry \"" + path + "\"");
    out << j.dump(2) << "\n";
}

std::vector<LanguageId> read_language_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open language registry \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("language registry \"" + path + "\": " + e.what());
    }
    std::vector<LanguageId> langs;
    std::map<int, std::string> ordered;
    for (const auto& [key, val] : j.items()) {
        const int id = std::stoi(key);
        if (id < 0 || id > 0xFFFF || ordered.count(id))
            throw DataError("language registry: bad or duplicate id " + key);
        ordered[id] = val.get<std::string>();
    }
    for (const auto& [id, iso] : ordered)
        langs.push_back({static_cast<std::uint16_t>(id), iso});
    return langs;
}

}  // namespace oracle
