#include "lmas/memory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binio.hpp"

namespace lmas {

using namespace binio;

namespace {
constexpr char kMemMagic[4] = {'L', 'M', 'E', 'M'};
constexpr uint32_t kMemVersion = 1;
} // namespace

template <class T>
LatentMemory<T> extract_memory(const AgentContext<T>& ctx, std::string source_agent) {
    LatentMemory<T> mem;
    mem.layers.reserve(ctx.cache.layers.size());
    for (const auto& layer : ctx.cache.layers) mem.layers.push_back({layer.keys, layer.values});
    uint64_t latent = 0;
    for (const auto& rec : ctx.trace)
        if (rec.kind == StepKind::Latent) ++latent;
    mem.latent_length = latent;
    mem.base_length = uint64_t(ctx.cache.length) - latent;
    mem.source_agent = std::move(source_agent);
    mem.config_fingerprint = ctx.config().fingerprint();
    return mem;
}

template <class T>
void prepend_memory(AgentContext<T>& ctx, const std::vector<LatentMemory<T>>& memories) {
    if (ctx.cache.length != 0 || ctx.next_position != 0)
        throw NonEmptyContext("memory can only be prepended into a fresh context");
    const uint64_t own_fp = ctx.config().fingerprint();
    uint64_t total = 0;
    for (const auto& mem : memories) {
        if (mem.config_fingerprint != own_fp)
            throw ConfigMismatch("memory was produced under a different model config");
        if (mem.layers.size() != ctx.cache.layers.size())
            throw ConfigMismatch("memory layer count differs from context");
        total += mem.total_length();
    }
    if (total > ctx.config().max_positions)
        throw PositionOverflow("prepended memory of " + std::to_string(total) + " exceeds max_positions");

    for (size_t l = 0; l < ctx.cache.layers.size(); ++l) {
        auto& dst = ctx.cache.layers[l];
        for (const auto& mem : memories) {
            dst.keys.insert(dst.keys.end(), mem.layers[l].keys.begin(), mem.layers[l].keys.end());
            dst.values.insert(dst.values.end(), mem.layers[l].values.begin(), mem.layers[l].values.end());
        }
    }
    ctx.cache.length = total;
    ctx.next_position = total; // own tokens continue the position line
}

template <class T>
void save_memory(const LatentMemory<T>& mem, const ModelConfig& cfg, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());

    put_bytes(os, kMemMagic, 4);
    put_u32(os, kMemVersion);
    put_u64(os, mem.config_fingerprint);
    unsigned char prec[2] = {static_cast<unsigned char>(precision_of<T>()), 0};
    put_bytes(os, prec, 2);
    put_u32(os, uint32_t(mem.layers.size()));
    put_u32(os, cfg.hidden_dim);
    put_u64(os, mem.base_length);
    put_u64(os, mem.latent_length);
    put_u32(os, uint32_t(mem.source_agent.size()));
    put_bytes(os, mem.source_agent.data(), mem.source_agent.size());
    for (const auto& layer : mem.layers) {
        put_tensor(os, layer.keys);
        put_tensor(os, layer.values);
    }
    if (!os) throw IoError("write failed: " + path.string());
}

template <class T>
LatentMemory<T> load_memory(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path.string());

    char magic[4];
    if (!get_bytes(is, magic, 4) || std::memcmp(magic, kMemMagic, 4) != 0) throw FormatError("bad magic bytes");
    uint32_t version;
    if (!get_u32(is, version)) throw FormatError("truncated header");
    if (version != kMemVersion) throw FormatError("unsupported version " + std::to_string(version));

    LatentMemory<T> mem;
    unsigned char prec[2];
    uint32_t num_layers = 0, row_width = 0, name_len = 0;
    if (!get_u64(is, mem.config_fingerprint) || !get_bytes(is, prec, 2) || !get_u32(is, num_layers) ||
        !get_u32(is, row_width) || !get_u64(is, mem.base_length) || !get_u64(is, mem.latent_length) ||
        !get_u32(is, name_len))
        throw ShapeError("truncated header");
    if (static_cast<Precision>(prec[0]) != precision_of<T>())
        throw FormatError("memory file precision does not match requested element type");
    mem.source_agent.resize(name_len);
    if (name_len && !get_bytes(is, mem.source_agent.data(), name_len)) throw ShapeError("truncated agent name");

    const size_t elems = size_t(mem.total_length()) * row_width;
    mem.layers.resize(num_layers);
    for (auto& layer : mem.layers) {
        layer.keys.resize(elems);
        get_tensor(is, layer.keys, "memory keys");
        layer.values.resize(elems);
        get_tensor(is, layer.values, "memory values");
    }
    if (is.peek() != std::char_traits<char>::eof()) throw ShapeError("trailing bytes after final tensor");
    return mem;
}

namespace {

template <class T>
struct ProbeOutcome {
    std::vector<std::vector<T>> hidden;
    std::vector<TokenId> tokens;
};

template <class T>
ProbeOutcome<T> run_probes(AgentContext<T>& ctx, const AlignmentOperator<T>& op, uint32_t probe_steps,
                           ProbeMode mode) {
    ProbeOutcome<T> out;
    if (mode == ProbeMode::Latent) {
        Matrix<T> h = generate_latent(ctx, op, LatentRunConfig{probe_steps, true});
        for (size_t i = 0; i < h.rows; ++i)
            out.hidden.emplace_back(h.row(i).begin(), h.row(i).end());
        return out;
    }
    for (uint32_t i = 0; i < probe_steps; ++i) {
        TokenId tok = decode_token<T>(ctx, ctx.last_hidden, 0.0, 1.0, uint64_t(0));
        out.tokens.push_back(tok);
        Matrix<T> emb = embed_tokens(ctx, {tok});
        out.hidden.push_back(forward_step<T>(ctx, emb.row(0), StepKind::Decode));
    }
    return out;
}

} // namespace

template <class T>
TransferCheck verify_transfer_equivalence(std::shared_ptr<const WeightSet<T>> ws,
                                          const std::vector<TokenId>& predecessor_ids, uint32_t predecessor_m,
                                          const std::vector<TokenId>& successor_ids, uint32_t probe_steps,
                                          ProbeMode mode) {
    if (probe_steps < 1) throw InvalidArgument("probe_steps must be >= 1");
    AlignmentOperator<T> op = solve_alignment(*ws, 0.0);
    const LatentRunConfig latent_cfg{predecessor_m, true};

    // World A: run the predecessor, extract its working memory, splice it
    // into a fresh successor, then probe.
    AgentContext<T> pred(ws);
    prefill(pred, predecessor_ids);
    generate_latent(pred, op, latent_cfg);
    LatentMemory<T> mem = extract_memory(pred, "predecessor");

    AgentContext<T> succ(ws);
    prepend_memory(succ, {mem});
    prefill(succ, successor_ids);
    ProbeOutcome<T> via_memory = run_probes(succ, op, probe_steps, mode);

    // World B: identical computation inline in one context, no extraction.
    AgentContext<T> inline_ctx(ws);
    prefill(inline_ctx, predecessor_ids);
    generate_latent(inline_ctx, op, latent_cfg);
    prefill(inline_ctx, successor_ids);
    ProbeOutcome<T> inl = run_probes(inline_ctx, op, probe_steps, mode);

    TransferCheck check;
    for (size_t i = 0; i < via_memory.hidden.size(); ++i)
        for (size_t j = 0; j < via_memory.hidden[i].size(); ++j)
            check.max_abs_diff = std::max(check.max_abs_diff,
                                          std::abs(double(via_memory.hidden[i][j]) - double(inl.hidden[i][j])));
    check.tokens_via_memory = std::move(via_memory.tokens);
    check.tokens_inline = std::move(inl.tokens);
    return check;
}

template struct LatentMemory<float>;
template struct LatentMemory<double>;
template LatentMemory<float> extract_memory<float>(const AgentContext<float>&, std::string);
template LatentMemory<double> extract_memory<double>(const AgentContext<double>&, std::string);
template void prepend_memory<float>(AgentContext<float>&, const std::vector<LatentMemory<float>>&);
template void prepend_memory<double>(AgentContext<double>&, const std::vector<LatentMemory<double>>&);
template void save_memory<float>(const LatentMemory<float>&, const ModelConfig&, const std::filesystem::path&);
template void save_memory<double>(const LatentMemory<double>&, const ModelConfig&, const std::filesystem::path&);
template LatentMemory<float> load_memory<float>(const std::filesystem::path&);
template LatentMemory<double> load_memory<double>(const std::filesystem::path&);
template TransferCheck verify_transfer_equivalence<float>(std::shared_ptr<const WeightSet<float>>,
                                                          const std::vector<TokenId>&, uint32_t,
                                                          const std::vector<TokenId>&, uint32_t, ProbeMode);
template TransferCheck verify_transfer_equivalence<double>(std::shared_ptr<const WeightSet<double>>,
                                                           const std::vector<TokenId>&, uint32_t,
                                                           const std::vector<TokenId>&, uint32_t, ProbeMode);

} // namespace lmas
