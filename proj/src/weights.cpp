#include "lmas/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <unordered_set>

#include "binio.hpp"

namespace lmas {

using namespace binio;

namespace {

constexpr char kMagic[4] = {'L', 'M', 'A', 'S'};
constexpr uint32_t kVersion = 1;

// Deterministic standard-normal stream over mt19937_64 (Box-Muller).
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = (double(rng_() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        double u2 = double(rng_() >> 11) * 0x1.0p-53;         // [0, 1)
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0;
    bool have_spare_ = false;
};

template <class T>
void fill_gaussian(Matrix<T>& m, GaussianStream& g, double scale) {
    for (auto& v : m.data) v = T(g.next() * scale);
}

template <class T>
void get_matrix(std::istream& is, Matrix<T>& m, size_t rows, size_t cols, const char* what) {
    m = Matrix<T>(rows, cols);
    get_tensor(is, m.data, what);
}

template <class T>
std::shared_ptr<const WeightSet<T>> load_body(std::istream& is, const ModelConfig& cfg) {
    auto ws = std::make_shared<WeightSet<T>>();
    ws->config = cfg;
    const size_t d = cfg.hidden_dim, f = cfg.ffn_dim, v = cfg.vocab_size;

    get_matrix(is, ws->tok_embed, v, d, "tok_embed");
    ws->layers.resize(cfg.num_layers);
    for (uint32_t l = 0; l < cfg.num_layers; ++l) {
        auto& lw = ws->layers[l];
        get_matrix(is, lw.attn_q, d, d, "attn_q");
        get_matrix(is, lw.attn_k, d, d, "attn_k");
        get_matrix(is, lw.attn_v, d, d, "attn_v");
        get_matrix(is, lw.attn_out, d, d, "attn_out");
        get_matrix(is, lw.ffn_up, d, f, "ffn_up");
        get_matrix(is, lw.ffn_down, f, d, "ffn_down");
        lw.attn_norm_gain.resize(d);
        get_tensor(is, lw.attn_norm_gain, "attn_norm_gain");
        lw.ffn_norm_gain.resize(d);
        get_tensor(is, lw.ffn_norm_gain, "ffn_norm_gain");
    }
    ws->final_norm_gain.resize(d);
    get_tensor(is, ws->final_norm_gain, "final_norm_gain");
    if (cfg.weight_tying) {
        ws->lm_head = ws->tok_embed;
    } else {
        get_matrix(is, ws->lm_head, v, d, "lm_head");
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw ShapeError("trailing bytes after final tensor");

    if (!ws->tok_embed.all_finite() || !ws->lm_head.all_finite())
        throw FormatError("embedding tensors contain non-finite entries");
    if (!embedding_rows_distinct(*ws))
        throw FormatError("embedding rows are not mutually distinct");
    return ws;
}

} // namespace

template <class T>
WeightSet<T> init_weights(const ModelConfig& config, uint64_t seed) {
    config.validate();
    if (precision_of<T>() != config.precision)
        throw InvalidArgument("init_weights element type does not match config precision tag");

    GaussianStream g(seed);
    const double scale = 1.0 / std::sqrt(double(config.hidden_dim));
    const size_t d = config.hidden_dim, f = config.ffn_dim, v = config.vocab_size;

    WeightSet<T> ws;
    ws.config = config;
    ws.tok_embed = Matrix<T>(v, d);
    fill_gaussian(ws.tok_embed, g, scale);
    ws.layers.resize(config.num_layers);
    for (auto& lw : ws.layers) {
        lw.attn_q = Matrix<T>(d, d);
        lw.attn_k = Matrix<T>(d, d);
        lw.attn_v = Matrix<T>(d, d);
        lw.attn_out = Matrix<T>(d, d);
        lw.ffn_up = Matrix<T>(d, f);
        lw.ffn_down = Matrix<T>(f, d);
        fill_gaussian(lw.attn_q, g, scale);
        fill_gaussian(lw.attn_k, g, scale);
        fill_gaussian(lw.attn_v, g, scale);
        fill_gaussian(lw.attn_out, g, scale);
        fill_gaussian(lw.ffn_up, g, scale);
        fill_gaussian(lw.ffn_down, g, scale);
        lw.attn_norm_gain.assign(d, T(1));
        lw.ffn_norm_gain.assign(d, T(1));
    }
    ws.final_norm_gain.assign(d, T(1));
    if (config.weight_tying) {
        ws.lm_head = ws.tok_embed;
    } else {
        ws.lm_head = Matrix<T>(v, d);
        fill_gaussian(ws.lm_head, g, scale);
    }
    return ws;
}

template <class T>
void save_weights(const WeightSet<T>& ws, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    const ModelConfig& c = ws.config;

    put_bytes(os, kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, c.num_layers);
    put_u32(os, c.hidden_dim);
    put_u32(os, c.num_heads);
    put_u32(os, c.head_dim);
    put_u32(os, c.ffn_dim);
    put_u32(os, c.vocab_size);
    put_u32(os, c.max_positions);
    put_f64(os, c.norm_epsilon);
    put_f64(os, c.rope_base);
    unsigned char flags[2] = {static_cast<unsigned char>(c.weight_tying ? 1 : 0),
                              static_cast<unsigned char>(c.precision)};
    put_bytes(os, flags, 2);

    put_tensor(os, ws.tok_embed.data);
    for (const auto& lw : ws.layers) {
        put_tensor(os, lw.attn_q.data);
        put_tensor(os, lw.attn_k.data);
        put_tensor(os, lw.attn_v.data);
        put_tensor(os, lw.attn_out.data);
        put_tensor(os, lw.ffn_up.data);
        put_tensor(os, lw.ffn_down.data);
        put_tensor(os, lw.attn_norm_gain);
        put_tensor(os, lw.ffn_norm_gain);
    }
    put_tensor(os, ws.final_norm_gain);
    if (!c.weight_tying) put_tensor(os, ws.lm_head.data);
    if (!os) throw IoError("write failed: " + path.string());
}

AnyWeights load_weights(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());

    char magic[4];
    if (!get_bytes(is, magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic bytes");
    uint32_t version;
    if (!get_u32(is, version)) throw FormatError("truncated header");
    if (version != kVersion) throw FormatError("unsupported version " + std::to_string(version));

    ModelConfig cfg;
    unsigned char flags[2];
    if (!get_u32(is, cfg.num_layers) || !get_u32(is, cfg.hidden_dim) || !get_u32(is, cfg.num_heads) ||
        !get_u32(is, cfg.head_dim) || !get_u32(is, cfg.ffn_dim) || !get_u32(is, cfg.vocab_size) ||
        !get_u32(is, cfg.max_positions) || !get_f64(is, cfg.norm_epsilon) || !get_f64(is, cfg.rope_base) ||
        !get_bytes(is, flags, 2))
        throw ShapeError("truncated header");
    cfg.weight_tying = flags[0] != 0;
    if (flags[1] > 1) throw FormatError("unknown precision tag");
    cfg.precision = static_cast<Precision>(flags[1]);
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ShapeError(std::string("inconsistent header: ") + e.what());
    }

    if (cfg.precision == Precision::F32) return load_body<float>(is, cfg);
    return load_body<double>(is, cfg);
}

template <class T>
std::shared_ptr<const WeightSet<T>> load_weights_as(const std::filesystem::path& path) {
    AnyWeights any = load_weights(path);
    auto* p = std::get_if<std::shared_ptr<const WeightSet<T>>>(&any);
    if (!p) throw FormatError("weight file precision does not match requested element type");
    return *p;
}

template <class T>
bool embedding_rows_distinct(const WeightSet<T>& ws) {
    auto distinct = [](const Matrix<T>& m) {
        std::unordered_set<std::string> seen;
        for (size_t r = 0; r < m.rows; ++r) {
            std::string key(reinterpret_cast<const char*>(m.data.data() + r * m.cols), m.cols * sizeof(T));
            if (!seen.insert(std::move(key)).second) return false;
        }
        return true;
    };
    return distinct(ws.tok_embed) && distinct(ws.lm_head);
}

template WeightSet<float> init_weights<float>(const ModelConfig&, uint64_t);
template WeightSet<double> init_weights<double>(const ModelConfig&, uint64_t);
template void save_weights<float>(const WeightSet<float>&, const std::filesystem::path&);
template void save_weights<double>(const WeightSet<double>&, const std::filesystem::path&);
template std::shared_ptr<const WeightSet<float>> load_weights_as<float>(const std::filesystem::path&);
template std::shared_ptr<const WeightSet<double>> load_weights_as<double>(const std::filesystem::path&);
template bool embedding_rows_distinct<float>(const WeightSet<float>&);
template bool embedding_rows_distinct<double>(const WeightSet<double>&);

} // namespace lmas
