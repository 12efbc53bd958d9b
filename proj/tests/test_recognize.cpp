#include <catch2/catch.hpp>

#include <facepipe/recognize.hpp>
#include <facepipe/synthetic.hpp>

#include <filesystem>
#include <random>
#include <sstream>

using namespace facepipe;

namespace {

Embedding unit2(float x, float y) {
    return Embedding::normalized({x, y});
}

Embedding random_unit(std::mt19937& rng, int dim) {
    std::normal_distribution<float> n(0.0f, 1.0f);
    std::vector<float> v(dim);
    for (auto& x : v) x = n(rng);
    return Embedding::normalized(std::move(v));
}

} // namespace

TEST_CASE("cosine examples") {
    const auto a = unit2(1.0f, 0.0f);
    const auto b = unit2(0.0f, 1.0f);
    const auto c = unit2(0.6f, 0.8f);
    CHECK(cosine(a, a) == 1.0f);
    CHECK(cosine(a, b) == 0.0f);
    CHECK(cosine(a, c) == Approx(0.6f).epsilon(1e-6));
    CHECK(cosine(a, c) == cosine(c, a));
    CHECK_THROWS_AS(cosine(a, Embedding{{1.0f, 0.0f, 0.0f}}), InvalidInputError);
}

TEST_CASE("verify thresholding") {
    const auto a = unit2(1.0f, 0.0f);
    const auto b = unit2(0.0f, 1.0f);
    SECTION("identical embeddings accepted") {
        const auto r = verify(a, a, 0.5f);
        CHECK(r.accepted);
        CHECK(r.similarity == 1.0f);
    }
    SECTION("orthogonal embeddings rejected") {
        const auto r = verify(a, b, 0.5f);
        CHECK_FALSE(r.accepted);
        CHECK(r.similarity == 0.0f);
    }
    SECTION("closed boundary: equality accepts") {
        const auto r = verify(a, a, 1.0f);
        CHECK(r.accepted);
    }
    SECTION("monotone in threshold") {
        const auto c = unit2(0.6f, 0.8f);
        const auto at = [&](float t) { return verify(a, c, t).accepted; };
        for (float t = 0.05f; t < 1.0f; t += 0.05f)
            if (at(t))
                for (float lower = 0.05f; lower < t; lower += 0.05f)
                    CHECK(at(lower));
    }
}

TEST_CASE("gallery enroll and remove") {
    Gallery g;
    CHECK(g.size() == 0);
    g.enroll("alice", "Alice", unit2(1, 0), "2026-01-01T00:00:00Z");
    CHECK(g.size() == 1);
    g.enroll("alice", "Alice", unit2(0, 1), "2026-01-01T00:00:00Z");
    CHECK(g.size() == 1);
    CHECK(g.entries()[0].embeddings.size() == 2);
    g.enroll("bob", "Bob", unit2(0, 1));
    CHECK(g.size() == 2);

    CHECK_THROWS_AS(g.remove("carol"), NotFoundError);
    g.remove("bob");
    CHECK(g.size() == 1);

    SECTION("dimension mismatch rejected") {
        CHECK_THROWS_AS(g.enroll("dave", "Dave",
                                 Embedding::normalized({1.0f, 1.0f, 1.0f})),
                        InvalidInputError);
    }
    SECTION("non-normalized embedding rejected") {
        CHECK_THROWS_AS(g.enroll("dave", "Dave", Embedding{{3.0f, 4.0f}}),
                        InvalidInputError);
    }
}

TEST_CASE("identify") {
    Gallery g;
    const auto probe = unit2(1.0f, 0.0f);

    SECTION("empty gallery rejects with id none and similarity -1") {
        const auto r = g.identify(probe, 0.5f);
        CHECK_FALSE(r.accepted);
        CHECK_FALSE(r.id.has_value());
        CHECK(r.similarity == -1.0f);
    }
    SECTION("self match wins with similarity 1") {
        g.enroll("alice", "Alice", probe);
        const auto r = g.identify(probe, 0.5f);
        CHECK(r.accepted);
        CHECK(r.id == "alice");
        CHECK(r.similarity == 1.0f);
    }
    SECTION("orthogonal probe rejected at 0.5") {
        g.enroll("alice", "Alice", unit2(0.0f, 1.0f));
        const auto r = g.identify(probe, 0.5f);
        CHECK_FALSE(r.accepted);
        CHECK(r.id == "alice"); // argmax is still reported
    }
    SECTION("ties break toward the smaller id") {
        g.enroll("zed", "Z", probe);
        g.enroll("amy", "A", probe);
        const auto r = g.identify(probe, 0.5f);
        CHECK(r.id == "amy");
    }
    SECTION("multi-embedding entries fuse by max") {
        g.enroll("alice", "Alice", unit2(0.0f, 1.0f));
        g.enroll("alice", "Alice", probe);
        const auto r = g.identify(probe, 0.9f);
        CHECK(r.accepted);
        CHECK(r.similarity == 1.0f);
    }
    SECTION("matches an exhaustive scan on random galleries") {
        std::mt19937 rng(2025);
        for (int trial = 0; trial < 20; ++trial) {
            Gallery rg;
            std::vector<std::pair<std::string, Embedding>> flat;
            for (int e = 0; e < 10; ++e) {
                const std::string id = "id" + std::to_string(e);
                const int n = 1 + static_cast<int>(rng() % 3);
                for (int k = 0; k < n; ++k) {
                    auto emb = random_unit(rng, 16);
                    flat.emplace_back(id, emb);
                    rg.enroll(id, id, std::move(emb));
                }
            }
            const auto p = random_unit(rng, 16);
            // oracle: plain scan over every (id, embedding) pair
            std::string best_id;
            float best_sim = -2.0f;
            for (const auto& [id, emb] : flat) {
                const float s = cosine(p, emb);
                if (s > best_sim || (s == best_sim && id < best_id)) {
                    best_sim = s;
                    best_id = id;
                }
            }
            const auto r = rg.identify(p, 0.5f);
            REQUIRE(r.id.has_value());
            CHECK(*r.id == best_id);
            CHECK(r.similarity == best_sim);
            CHECK(r.accepted == (best_sim >= 0.5f));
        }
    }
    SECTION("invariant under gallery reordering") {
        std::mt19937 rng(7);
        std::vector<std::pair<std::string, Embedding>> entries;
        for (int e = 0; e < 8; ++e)
            entries.emplace_back("p" + std::to_string(e), random_unit(rng, 8));
        const auto p = random_unit(rng, 8);
        Gallery fwd, rev;
        for (const auto& [id, emb] : entries) fwd.enroll(id, id, emb);
        for (auto it = entries.rbegin(); it != entries.rend(); ++it)
            rev.enroll(it->first, it->first, it->second);
        const auto a = fwd.identify(p, 0.5f);
        const auto b = rev.identify(p, 0.5f);
        CHECK(a.id == b.id);
        CHECK(a.similarity == b.similarity);
    }
}

TEST_CASE("gallery file round trip is bit stable") {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "facepipe_gallery_test.json";

    Gallery g;
    std::mt19937 rng(99);
    for (int e = 0; e < 5; ++e)
        g.enroll("person" + std::to_string(e), "Person " + std::to_string(e),
                 random_unit(rng, 32), "2026-08-08T12:00:00Z");
    g.save(path.string());
    const auto back = Gallery::load(path.string());

    REQUIRE(back.size() == g.size());
    CHECK(back.dim() == g.dim());
    for (size_t e = 0; e < g.size(); ++e) {
        const auto& ga = g.entries()[e];
        const auto& gb = back.entries()[e];
        CHECK(ga.id == gb.id);
        CHECK(ga.display_name == gb.display_name);
        CHECK(ga.enrolled_at == gb.enrolled_at);
        REQUIRE(ga.embeddings.size() == gb.embeddings.size());
        for (size_t k = 0; k < ga.embeddings.size(); ++k)
            for (size_t i = 0; i < ga.embeddings[k].v.size(); ++i)
                CHECK(ga.embeddings[k].v[i] == gb.embeddings[k].v[i]);
    }

    // similarities reproduce exactly
    const auto probe = random_unit(rng, 32);
    CHECK(g.identify(probe, 0.5f).similarity == back.identify(probe, 0.5f).similarity);

    // second save is byte-identical
    const auto path2 = fs::temp_directory_path() / "facepipe_gallery_test2.json";
    back.save(path2.string());
    std::ifstream f1(path), f2(path2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("pairwise accuracy") {
    const auto a = unit2(1, 0);
    const auto b = unit2(0, 1);
    using Pair = std::tuple<Embedding, Embedding, bool>;

    SECTION("all identical pairs labeled same give 1.0") {
        std::vector<Pair> pairs(4, Pair{a, a, true});
        CHECK(pairwise_accuracy(pairs, 0.5f) == 1.0);
    }
    SECTION("inverted labels give 0.0") {
        std::vector<Pair> pairs{{a, a, false}, {a, b, true}};
        CHECK(pairwise_accuracy(pairs, 0.5f) == 0.0);
    }
    SECTION("synthetic clusters match a threshold sweep oracle") {
        std::mt19937 rng(31);
        std::normal_distribution<float> jitter(0.0f, 0.05f);
        const auto center1 = random_unit(rng, 16);
        const auto center2 = random_unit(rng, 16);
        auto sample_near = [&](const Embedding& c) {
            std::vector<float> v = c.v;
            for (auto& x : v) x += jitter(rng);
            return Embedding::normalized(std::move(v));
        };
        std::vector<Pair> pairs;
        for (int i = 0; i < 40; ++i) {
            pairs.emplace_back(sample_near(center1), sample_near(center1), true);
            pairs.emplace_back(sample_near(center1), sample_near(center2), false);
        }
        for (float t : {0.1f, 0.3f, 0.5f, 0.7f, 0.9f}) {
            size_t correct = 0;
            for (const auto& [x, y, same] : pairs)
                if ((cosine(x, y) >= t) == same) ++correct;
            CHECK(pairwise_accuracy(pairs, t) ==
                  Approx(static_cast<double>(correct) / pairs.size()));
        }
    }
    SECTION("empty pair list rejected") {
        CHECK_THROWS_AS(pairwise_accuracy({}, 0.5f), InvalidInputError);
    }
}

TEST_CASE("embed_face through a hand-computable linear model") {
    // flatten -> linear whose rows are one-hot selectors of four known pixels;
    // the embedding is then the normalized pixel vector, checkable by hand
    Model m;
    m.input_shape = {1, 3, 112, 112};
    m.embedding_dim = 4;
    LayerSpec fl;
    fl.kind = LayerKind::flatten;
    m.layers.push_back(fl);
    LayerSpec lin;
    lin.kind = LayerKind::linear;
    lin.weight = "w";
    m.layers.push_back(lin);
    const int features = 3 * 112 * 112;
    std::vector<float> w(static_cast<size_t>(4) * features, 0.0f);
    // red channel of pixels (0,0), (1,0), (2,0), (3,0): flat indices 0..3
    for (int r = 0; r < 4; ++r)
        w[static_cast<size_t>(r) * features + r] = 1.0f;
    m.weights.emplace("w", Tensor::from_f32({4, features}, std::move(w)));

    Image crop(112, 112, 0);
    crop.at(0, 0, 0) = 153; // 0.6 after /255
    crop.at(1, 0, 0) = 204; // 0.8
    // remaining two selected pixels stay 0
    const auto emb = embed_face(m, crop);
    REQUIRE(emb.dim() == 4);
    // raw vector (0.6, 0.8, 0, 0) already has unit norm
    CHECK(emb.v[0] == Approx(0.6f).epsilon(1e-6));
    CHECK(emb.v[1] == Approx(0.8f).epsilon(1e-6));
    CHECK(emb.v[2] == 0.0f);
    CHECK(emb.v[3] == 0.0f);
    CHECK(emb.unit_norm(1e-6));
}

TEST_CASE("embed_face on the fixture embedder") {
    const auto model = make_fixture_embedder(64);
    const auto frame = make_synthetic_frame(64, std::vector<PlantedFace>{{2, 2, 0}});
    const auto crop = align_face(frame, planted_detection(2, 2)).crop;

    SECTION("unit norm and deterministic") {
        const auto e1 = embed_face(model, crop);
        const auto e2 = embed_face(model, crop);
        CHECK(e1.dim() == 64);
        CHECK(e1.unit_norm(1e-6));
        for (size_t i = 0; i < e1.v.size(); ++i)
            CHECK(e1.v[i] == e2.v[i]);
    }
    SECTION("wrong crop size rejected") {
        CHECK_THROWS_AS(embed_face(model, Image(64, 64, 0)), InvalidInputError);
    }
    SECTION("i8 path stays close to f32") {
        std::vector<Tensor> samples;
        std::vector<Image> crops;
        for (uint32_t id = 0; id < 4; ++id) {
            const auto f = make_synthetic_frame(64, std::vector<PlantedFace>{{2, 2, id}});
            crops.push_back(align_face(f, planted_detection(2, 2)).crop);
            samples.push_back(normalize_to_tensor(crops.back()));
        }
        const auto qm = quantize_model(model, calibrate(model, samples));
        const auto f = embed_face(model, crops[0], DType::f32);
        const auto q = embed_face(qm, crops[0], DType::i8);
        CHECK(cosine(f, q) >= 0.98f);
    }
}
