#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "facepipe/model.hpp"

namespace facepipe {

// FTM model container
//
//   bytes 0..3   magic "FTM1"
//   bytes 4..7   u32 little-endian JSON header length L
//   bytes 8..8+L UTF-8 JSON:
//     { "version": 1,
//       "input_shape": [...],
//       "embedding_dim": N,
//       "layers": [ { "kind": ..., geometry..., "weight": "name", ... } ],
//       "tensors": [ { "name", "shape", "dtype": "f32"|"i8", "qscale"?,
//                      "offset", "byte_len" } ] }
//   blob region follows, tensor offsets relative to blob start,
//   little-endian element order.

static_assert(std::endian::native == std::endian::little,
              "FTM serialization assumes a little-endian host");

namespace ftm {

constexpr char kMagic[4] = {'F', 'T', 'M', '1'};

inline nlohmann::json layer_to_json(const LayerSpec& l) {
    nlohmann::json j;
    j["kind"] = layer_kind_name(l.kind);
    if (l.stride != 1) j["stride"] = l.stride;
    if (l.pad != 0) j["pad"] = l.pad;
    if (l.kernel != 0) j["kernel"] = l.kernel;
    if (l.in_channels != 0) j["in_channels"] = l.in_channels;
    if (l.out_channels != 0) j["out_channels"] = l.out_channels;
    if (!l.weight.empty()) j["weight"] = l.weight;
    if (!l.bias.empty()) j["bias"] = l.bias;
    if (l.in_scale > 0.0f) j["in_scale"] = l.in_scale;
    if (l.out_scale > 0.0f) j["out_scale"] = l.out_scale;
    return j;
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
    LayerSpec l;
    l.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    l.stride = j.value("stride", 1);
    l.pad = j.value("pad", 0);
    l.kernel = j.value("kernel", 0);
    l.in_channels = j.value("in_channels", 0);
    l.out_channels = j.value("out_channels", 0);
    l.weight = j.value("weight", std::string{});
    l.bias = j.value("bias", std::string{});
    l.in_scale = j.value("in_scale", 0.0f);
    l.out_scale = j.value("out_scale", 0.0f);
    if (l.stride < 1 || l.pad < 0)
        throw ShapeError("layer strides/pads must be non-negative");
    return l;
}

} // namespace ftm

inline std::vector<uint8_t> save_model(const Model& m) {
    nlohmann::json header;
    header["version"] = 1;
    header["input_shape"] = m.input_shape;
    header["embedding_dim"] = m.embedding_dim;
    auto layers = nlohmann::json::array();
    for (const auto& l : m.layers) layers.push_back(ftm::layer_to_json(l));
    header["layers"] = layers;

    std::vector<uint8_t> blob;
    auto tensors = nlohmann::json::array();
    for (const auto& [name, t] : m.weights) {
        nlohmann::json tj;
        tj["name"] = name;
        tj["shape"] = t.shape();
        size_t byte_len = 0;
        const uint8_t* src = nullptr;
        if (t.dtype() == DType::f32) {
            tj["dtype"] = "f32";
            byte_len = t.f32().size() * sizeof(float);
            src = reinterpret_cast<const uint8_t*>(t.f32().data());
        } else {
            tj["dtype"] = "i8";
            tj["qscale"] = t.qscale();
            byte_len = t.i8().size();
            src = reinterpret_cast<const uint8_t*>(t.i8().data());
        }
        tj["offset"] = blob.size();
        tj["byte_len"] = byte_len;
        blob.insert(blob.end(), src, src + byte_len);
        tensors.push_back(tj);
    }
    header["tensors"] = tensors;

    const std::string hdr = header.dump();
    std::vector<uint8_t> out;
    out.reserve(8 + hdr.size() + blob.size());
    out.insert(out.end(), ftm::kMagic, ftm::kMagic + 4);
    const uint32_t len = static_cast<uint32_t>(hdr.size());
    out.insert(out.end(), reinterpret_cast<const uint8_t*>(&len),
               reinterpret_cast<const uint8_t*>(&len) + 4);
    out.insert(out.end(), hdr.begin(), hdr.end());
    out.insert(out.end(), blob.begin(), blob.end());
    return out;
}

inline Model load_model(std::span<const uint8_t> bytes) {
    if (bytes.size() < 4)
        throw TruncatedModelError("model blob shorter than magic");
    if (std::memcmp(bytes.data(), ftm::kMagic, 4) != 0)
        throw BadMagicError("bad model magic, expected FTM1");
    if (bytes.size() < 8)
        throw TruncatedModelError("model blob truncated in header length");
    uint32_t hdr_len = 0;
    std::memcpy(&hdr_len, bytes.data() + 4, 4);
    if (8ull + hdr_len > bytes.size())
        throw TruncatedModelError("declared header length runs past end of blob");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + hdr_len);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("invalid model header JSON: ") + e.what());
    }

    Model m;
    try {
        if (header.value("version", 0) != 1)
            throw ModelError("unsupported model version");
        m.input_shape = header.at("input_shape").get<std::vector<int>>();
        m.embedding_dim = header.at("embedding_dim").get<int>();
        for (const auto& lj : header.at("layers"))
            m.layers.push_back(ftm::layer_from_json(lj));

        const size_t blob_off = 8ull + hdr_len;
        const size_t blob_size = bytes.size() - blob_off;
        for (const auto& tj : header.at("tensors")) {
            const auto name = tj.at("name").get<std::string>();
            const auto shape = tj.at("shape").get<std::vector<int>>();
            const auto dtype = tj.at("dtype").get<std::string>();
            const auto offset = tj.at("offset").get<uint64_t>();
            const auto byte_len = tj.at("byte_len").get<uint64_t>();
            if (offset + byte_len > blob_size)
                throw TruncatedModelError("tensor '" + name + "' runs past end of blob");
            const uint8_t* src = bytes.data() + blob_off + offset;
            const int64_t numel = Tensor::numel_of(shape);
            if (dtype == "f32") {
                if (byte_len != static_cast<uint64_t>(numel) * sizeof(float))
                    throw ShapeError("tensor '" + name + "' byte length does not match shape");
                std::vector<float> data(static_cast<size_t>(numel));
                std::memcpy(data.data(), src, byte_len);
                m.weights.emplace(name, Tensor::from_f32(shape, std::move(data)));
            } else if (dtype == "i8") {
                if (byte_len != static_cast<uint64_t>(numel))
                    throw ShapeError("tensor '" + name + "' byte length does not match shape");
                if (!tj.contains("qscale"))
                    throw ModelError("i8 tensor '" + name + "' missing qscale");
                std::vector<int8_t> data(static_cast<size_t>(numel));
                std::memcpy(data.data(), src, byte_len);
                m.weights.emplace(name, Tensor::from_i8(shape, std::move(data),
                                                        tj.at("qscale").get<float>()));
            } else {
                throw ModelError("tensor '" + name + "' has unknown dtype " + dtype);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("model header missing fields: ") + e.what());
    }

    validate_model(m);
    return m;
}

inline Model load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ModelError("model not found: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return load_model(bytes);
}

inline void save_model_file(const std::string& path, const Model& m) {
    auto bytes = save_model(m);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ModelError("cannot write model file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

} // namespace facepipe
