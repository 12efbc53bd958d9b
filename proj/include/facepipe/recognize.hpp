#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "facepipe/image.hpp"
#include "facepipe/infer.hpp"

namespace facepipe {

// Unit-norm feature vector identifying a face.
struct Embedding {
    std::vector<float> v;

    size_t dim() const { return v.size(); }

    static Embedding normalized(std::vector<float> raw) {
        double ss = 0.0;
        for (float x : raw) ss += static_cast<double>(x) * x;
        if (ss <= 0.0)
            throw InvalidInputError("cannot normalize a zero embedding");
        const double inv = 1.0 / std::sqrt(ss);
        for (auto& x : raw) x = static_cast<float>(x * inv);
        return Embedding{std::move(raw)};
    }

    bool unit_norm(double tol = 1e-6) const {
        double ss = 0.0;
        for (float x : v) ss += static_cast<double>(x) * x;
        return std::abs(std::sqrt(ss) - 1.0) <= tol;
    }
};

// Dot product of unit vectors, clamped to [-1, 1].
inline float cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim())
        throw InvalidInputError("cosine: embedding dimensions differ");
    double dot = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i)
        dot += static_cast<double>(a.v[i]) * b.v[i];
    return static_cast<float>(std::clamp(dot, -1.0, 1.0));
}

// Identification / verification outcome. The `id` is only present for
// gallery identification; plain pairwise verification leaves it empty and the
// accepted flag refers to the similarity threshold alone.
struct MatchResult {
    std::optional<std::string> id;
    std::optional<std::string> display_name;
    float similarity = -1.0f;
    bool accepted = false;
};

// One-to-one decision: accepted iff cosine >= threshold (closed boundary).
inline MatchResult verify(const Embedding& a, const Embedding& b, float threshold) {
    MatchResult r;
    r.similarity = cosine(a, b);
    r.accepted = r.similarity >= threshold;
    return r;
}

// Aligned 112x112 crop -> unit-norm embedding. The trailing normalization is
// applied regardless of whether the model chain already ends in l2norm, so
// the embedding invariant holds for any model.
inline Embedding embed_face(const Model& model, const Image& aligned,
                            DType precision = DType::f32) {
    if (model.input_shape.size() != 4 || aligned.width != model.input_shape[3] ||
        aligned.height != model.input_shape[2])
        throw InvalidInputError("embed_face: aligned crop does not match model input size");
    Tensor input = normalize_to_tensor(aligned);
    Tensor out = precision == DType::i8 ? forward_i8(model, input)
                                        : forward_f32(model, input);
    std::vector<float> raw(out.f32().begin(), out.f32().end());
    return Embedding::normalized(std::move(raw));
}

struct GalleryEntry {
    std::string id;
    std::string display_name;
    std::string enrolled_at; // ISO-8601 UTC
    std::vector<Embedding> embeddings; // non-empty, all same dimension
};

inline std::string now_iso8601_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Persistent store of enrolled identities. Value type: const methods are safe
// to call from many threads; enroll/remove need exclusive access like any
// standard container.
class Gallery {
public:
    Gallery() = default;

    size_t size() const { return entries_.size(); }
    int dim() const { return dim_; }
    const std::vector<GalleryEntry>& entries() const { return entries_; }

    // Appends to an existing id's embedding list or creates a new entry.
    void enroll(const std::string& id, const std::string& display_name,
                Embedding emb, std::string enrolled_at = {}) {
        if (id.empty())
            throw InvalidInputError("enroll: id must be non-empty");
        if (!emb.unit_norm(1e-4))
            throw InvalidInputError("enroll: embedding is not unit-norm");
        if (dim_ == 0)
            dim_ = static_cast<int>(emb.dim());
        else if (static_cast<int>(emb.dim()) != dim_)
            throw InvalidInputError("enroll: embedding dimension does not match gallery");
        for (auto& e : entries_) {
            if (e.id == id) {
                e.embeddings.push_back(std::move(emb));
                return;
            }
        }
        GalleryEntry e;
        e.id = id;
        e.display_name = display_name.empty() ? id : display_name;
        e.enrolled_at = enrolled_at.empty() ? now_iso8601_utc() : std::move(enrolled_at);
        e.embeddings.push_back(std::move(emb));
        entries_.push_back(std::move(e));
    }

    void remove(const std::string& id) {
        auto it = std::find_if(entries_.begin(), entries_.end(),
                               [&](const GalleryEntry& e) { return e.id == id; });
        if (it == entries_.end())
            throw NotFoundError("gallery id not found: " + id);
        entries_.erase(it);
        if (entries_.empty()) dim_ = 0;
    }

    // One-to-many search. Per entry the similarity is the max over its
    // embeddings; the best entry wins, ties broken by lexicographically
    // smallest id, accepted iff best similarity >= threshold.
    MatchResult identify(const Embedding& probe, float threshold) const {
        MatchResult best;
        best.similarity = -1.0f;
        for (const auto& e : entries_) {
            float sim = -1.0f;
            for (const auto& emb : e.embeddings)
                sim = std::max(sim, cosine(probe, emb));
            const bool better =
                !best.id || sim > best.similarity ||
                (sim == best.similarity && e.id < *best.id);
            if (better) {
                best.similarity = sim;
                best.id = e.id;
                best.display_name = e.display_name;
            }
        }
        best.accepted = best.id && best.similarity >= threshold;
        return best;
    }

    // Gallery file: JSON {version:1, dim, entries:[{id, display_name,
    // enrolled_at, embeddings:[[f32...]...]}]}; embeddings stored already
    // unit-normalized.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = 1;
        j["dim"] = dim_;
        auto arr = nlohmann::json::array();
        for (const auto& e : entries_) {
            nlohmann::json ej;
            ej["id"] = e.id;
            ej["display_name"] = e.display_name;
            ej["enrolled_at"] = e.enrolled_at;
            auto embs = nlohmann::json::array();
            for (const auto& emb : e.embeddings) {
                auto vj = nlohmann::json::array();
                // widen to double: exact, and the shortest round-trip dump
                // reparses to the identical f32 bits
                for (float x : emb.v) vj.push_back(static_cast<double>(x));
                embs.push_back(vj);
            }
            ej["embeddings"] = embs;
            arr.push_back(ej);
        }
        j["entries"] = arr;
        return j;
    }

    static Gallery from_json(const nlohmann::json& j) {
        Gallery g;
        if (j.value("version", 0) != 1)
            throw InvalidInputError("unsupported gallery version");
        g.dim_ = j.value("dim", 0);
        for (const auto& ej : j.at("entries")) {
            GalleryEntry e;
            e.id = ej.at("id").get<std::string>();
            e.display_name = ej.value("display_name", e.id);
            e.enrolled_at = ej.value("enrolled_at", std::string{});
            for (const auto& vj : ej.at("embeddings")) {
                Embedding emb;
                emb.v.reserve(vj.size());
                for (const auto& x : vj)
                    emb.v.push_back(static_cast<float>(x.get<double>()));
                if (g.dim_ != 0 && static_cast<int>(emb.v.size()) != g.dim_)
                    throw InvalidInputError("gallery entry dimension mismatch");
                e.embeddings.push_back(std::move(emb));
            }
            if (e.embeddings.empty())
                throw InvalidInputError("gallery entry has no embeddings");
            g.entries_.push_back(std::move(e));
        }
        return g;
    }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out)
            throw InvalidInputError("cannot write gallery file: " + path);
        out << to_json().dump(2) << "\n";
    }

    static Gallery load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw InvalidInputError("cannot open gallery file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInputError(std::string("malformed gallery JSON: ") + e.what());
        }
        return from_json(j);
    }

private:
    int dim_ = 0;
    std::vector<GalleryEntry> entries_;
};

// Fraction of labeled pairs where verify() agrees with the label.
inline double pairwise_accuracy(
    std::span<const std::tuple<Embedding, Embedding, bool>> pairs, float threshold) {
    if (pairs.empty())
        throw InvalidInputError("pairwise_accuracy: no pairs given");
    size_t correct = 0;
    for (const auto& [a, b, same] : pairs)
        if (verify(a, b, threshold).accepted == same) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

} // namespace facepipe
