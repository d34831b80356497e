#include <doctest.h>

#include <cmath>
#include <random>

#include "lmas/model.hpp"
#include "support/reference_forward.hpp"

using namespace lmas;

namespace {

ModelConfig tiny_config(uint32_t layers = 2, uint32_t hidden = 32, uint32_t heads = 4, uint32_t vocab = 64) {
    ModelConfig cfg;
    cfg.num_layers = layers;
    cfg.hidden_dim = hidden;
    cfg.num_heads = heads;
    cfg.head_dim = hidden / heads;
    cfg.ffn_dim = hidden * 2;
    cfg.vocab_size = vocab;
    cfg.max_positions = 256;
    return cfg;
}

std::shared_ptr<const WeightSetF> shared_weights(const ModelConfig& cfg, uint64_t seed) {
    return std::make_shared<WeightSetF>(init_weights<float>(cfg, seed));
}

std::vector<float> random_vec(size_t n, uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<float> v(n);
    for (auto& x : v) x = float(dist(rng));
    return v;
}

} // namespace

TEST_CASE("embed_tokens selects embedding rows") {
    auto ws = shared_weights(tiny_config(), 7);
    AgentContextF ctx(ws);

    MatrixF one = embed_tokens(ctx, {5});
    for (size_t j = 0; j < one.cols; ++j) CHECK(one.at(0, j) == ws->tok_embed.at(5, j));

    CHECK(embed_tokens(ctx, {}).rows == 0);

    MatrixF two = embed_tokens(ctx, {3, 3});
    CHECK(std::equal(two.row(0).begin(), two.row(0).end(), two.row(1).begin()));

    CHECK_THROWS_AS(embed_tokens(ctx, {64}), IdOutOfRange);
    CHECK_THROWS_AS(embed_tokens(ctx, {-1}), IdOutOfRange);
}

TEST_CASE("forward_step is deterministic and grows every layer by one") {
    auto ws = shared_weights(tiny_config(), 7);
    AgentContextF a(ws), b(ws);
    std::vector<float> emb = random_vec(32, 1);

    auto ha = forward_step<float>(a, emb);
    auto hb = forward_step<float>(b, emb);
    CHECK(ha == hb);
    for (size_t l = 0; l < a.cache.layers.size(); ++l) {
        CHECK(a.cache.layers[l].keys == b.cache.layers[l].keys);
        CHECK(a.cache.layers[l].keys.size() == 32);   // one position
        CHECK(a.cache.layers[l].values.size() == 32);
    }
    CHECK(a.cache.length == 1);
    CHECK(a.next_position == 1);
    CHECK(a.last_hidden == ha);
}

TEST_CASE("forward_step matches the straight-line reference forward") {
    ModelConfig cfg = tiny_config(2, 8, 2, 16);
    auto ws = shared_weights(cfg, 21);
    AgentContextF ctx(ws);

    std::vector<std::vector<float>> inputs;
    for (uint64_t i = 0; i < 6; ++i) inputs.push_back(random_vec(8, 100 + i));

    std::vector<std::vector<float>> engine;
    for (const auto& in : inputs) engine.push_back(forward_step<float>(ctx, in));

    auto reference = lmas_test::reference_forward(*ws, inputs);
    for (size_t p = 0; p < inputs.size(); ++p)
        for (size_t e = 0; e < 8; ++e)
            CHECK(std::abs(engine[p][e] - reference[p][e]) < 1e-6);
}

TEST_CASE("causality: outputs ignore later inputs") {
    ModelConfig cfg = tiny_config();
    auto ws = shared_weights(cfg, 3);

    std::vector<std::vector<float>> inputs;
    for (uint64_t i = 0; i < 8; ++i) inputs.push_back(random_vec(32, 500 + i));

    AgentContextF full(ws);
    std::vector<std::vector<float>> full_h;
    for (const auto& in : inputs) full_h.push_back(forward_step<float>(full, in));

    AgentContextF truncated(ws);
    for (size_t i = 0; i < 4; ++i) {
        auto h = forward_step<float>(truncated, inputs[i]);
        CHECK(h == full_h[i]);
    }
}

TEST_CASE("cache consistency under re-run") {
    ModelConfig cfg = tiny_config();
    auto ws = shared_weights(cfg, 9);
    std::vector<std::vector<float>> inputs;
    for (uint64_t i = 0; i < 10; ++i) inputs.push_back(random_vec(32, 700 + i));

    AgentContextF first(ws), second(ws);
    std::vector<float> h1, h2;
    for (const auto& in : inputs) h1 = forward_step<float>(first, in);
    for (const auto& in : inputs) h2 = forward_step<float>(second, in);
    for (size_t e = 0; e < h1.size(); ++e) CHECK(std::abs(h1[e] - h2[e]) <= 1e-6f);
    CHECK(h1 == h2);
}

TEST_CASE("position overflow") {
    ModelConfig cfg = tiny_config();
    cfg.max_positions = 2;
    auto ws = shared_weights(cfg, 7);
    AgentContextF ctx(ws);
    std::vector<float> emb = random_vec(32, 1);
    forward_step<float>(ctx, emb);
    forward_step<float>(ctx, emb);
    CHECK_THROWS_AS(forward_step<float>(ctx, emb), PositionOverflow);
}

TEST_CASE("flop_count_step hand-expanded case") {
    ModelConfig cfg;
    cfg.num_layers = 1;
    cfg.hidden_dim = 2;
    cfg.num_heads = 1;
    cfg.head_dim = 2;
    cfg.ffn_dim = 4;
    cfg.vocab_size = 8;
    CHECK(flop_count_step(cfg, 1, false) == 36); // 4*4 + 2*2*1 + 2*2*4
    CHECK(flop_count_step(cfg, 1, true) == 36 + 2 * 8);
    CHECK(flop_count_step(cfg, 5, true) - flop_count_step(cfg, 5, false) == uint64_t(2) * 8);
    CHECK_THROWS_AS(flop_count_step(cfg, 0, false), InvalidArgument);
}

TEST_CASE("instrumented flops match the closed form on random configs") {
    std::mt19937_64 rng(2025);
    for (int trial = 0; trial < 20; ++trial) {
        ModelConfig cfg;
        cfg.num_layers = 1 + uint32_t(rng() % 3);
        cfg.num_heads = 1 + uint32_t(rng() % 3);
        cfg.head_dim = 2 + 2 * uint32_t(rng() % 3);
        cfg.hidden_dim = cfg.num_heads * cfg.head_dim;
        cfg.ffn_dim = 4 + uint32_t(rng() % 24);
        cfg.vocab_size = 8 + uint32_t(rng() % 56);
        cfg.max_positions = 64;
        auto ws = shared_weights(cfg, rng());
        AgentContextF ctx(ws);

        const int steps = 1 + int(rng() % 6);
        for (int s = 0; s < steps; ++s) {
            uint64_t before = ctx.flop_counter;
            forward_step<float>(ctx, random_vec(cfg.hidden_dim, rng()));
            uint64_t delta = ctx.flop_counter - before;
            CHECK(delta == flop_count_step(cfg, uint64_t(s) + 1, false));
            CHECK(ctx.trace.back().flops == delta);
            CHECK(ctx.trace.back().context_length == uint64_t(s) + 1);
        }

        uint64_t before = ctx.flop_counter;
        decode_token<float>(ctx, ctx.last_hidden, 0.0, 1.0, uint64_t(1));
        CHECK(ctx.flop_counter - before == uint64_t(cfg.hidden_dim) * cfg.vocab_size);
    }
}

TEST_CASE("decode_token argmax at temperature zero") {
    ModelConfig cfg = tiny_config(1, 8, 2, 16);
    auto ws = shared_weights(cfg, 77);
    AgentContextF ctx(ws);
    std::vector<float> h = random_vec(8, 4);

    // independent logit computation
    size_t best = 0;
    double best_val = -1e300;
    for (size_t i = 0; i < 16; ++i) {
        double acc = 0;
        for (size_t e = 0; e < 8; ++e) acc += double(h[e]) * double(ws->lm_head.at(i, e));
        if (acc > best_val) {
            best_val = acc;
            best = i;
        }
    }
    CHECK(decode_token<float>(ctx, h, 0.0, 1.0, uint64_t(123)) == TokenId(best));

    // a tiny nucleus keeps only the top token, whatever the seed
    for (uint64_t seed = 0; seed < 8; ++seed)
        CHECK(decode_token<float>(ctx, h, 1.0, 1e-9, seed) == TokenId(best));
}

TEST_CASE("decode_token is seed-deterministic") {
    ModelConfig cfg = tiny_config(1, 8, 2, 16);
    auto ws = shared_weights(cfg, 78);
    AgentContextF ctx(ws);
    std::vector<float> h = random_vec(8, 5);
    TokenId a = decode_token<float>(ctx, h, 0.6, 0.95, uint64_t(99));
    TokenId b = decode_token<float>(ctx, h, 0.6, 0.95, uint64_t(99));
    CHECK(a == b);
}

TEST_CASE("nucleus sampling frequencies match the softmax oracle") {
    ModelConfig cfg = tiny_config(1, 4, 1, 8);
    auto ws = shared_weights(cfg, 55);
    AgentContextF ctx(ws);
    std::vector<float> h = random_vec(4, 6, 2.0);

    std::vector<double> probs(8);
    double mx = -1e300, denom = 0;
    for (size_t i = 0; i < 8; ++i) {
        double acc = 0;
        for (size_t e = 0; e < 4; ++e) acc += double(h[e]) * double(ws->lm_head.at(i, e));
        probs[i] = acc;
        mx = std::max(mx, acc);
    }
    for (auto& p : probs) {
        p = std::exp(p - mx);
        denom += p;
    }
    for (auto& p : probs) p /= denom;

    const int draws = 100000;
    std::vector<int> counts(8, 0);
    SamplerRng rng(4242);
    for (int i = 0; i < draws; ++i) counts[size_t(decode_token<float>(ctx, h, 1.0, 1.0, rng))]++;

    for (size_t i = 0; i < 8; ++i)
        CHECK(std::abs(double(counts[i]) / draws - probs[i]) < 0.02);
}

TEST_CASE("decode_token rejects bad sampling parameters") {
    ModelConfig cfg = tiny_config(1, 8, 2, 16);
    auto ws = shared_weights(cfg, 79);
    AgentContextF ctx(ws);
    std::vector<float> h = random_vec(8, 7);
    CHECK_THROWS_AS(decode_token<float>(ctx, h, -0.1, 0.9, uint64_t(1)), InvalidArgument);
    CHECK_THROWS_AS(decode_token<float>(ctx, h, 0.5, 0.0, uint64_t(1)), InvalidArgument);
    CHECK_THROWS_AS(decode_token<float>(ctx, h, 0.5, 1.5, uint64_t(1)), InvalidArgument);
}
