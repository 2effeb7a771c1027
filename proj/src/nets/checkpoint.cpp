#include "nets/checkpoint.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>

namespace dadp {

namespace {

constexpr char kMagic[] = "DADPCKPT1\n";

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace

std::string weight_hash(const torch::nn::Module& module) {
    std::map<std::string, torch::Tensor> named;
    for (const auto& p : module.named_parameters()) named[p.key()] = p.value();
    for (const auto& b : module.named_buffers()) named[b.key()] = b.value();
    std::string bytes;
    for (const auto& [name, tensor] : named) {
        auto t = tensor.detach().to(torch::kFloat64).contiguous();
        bytes.append(name);
        bytes.append(reinterpret_cast<const char*>(t.data_ptr<double>()),
                     sizeof(double) * size_t(t.numel()));
    }
    return sha256_hex(bytes);
}

void save_checkpoint(const std::string& path, const std::string& kind,
                     const nlohmann::json& config, torch::nn::Module& module) {
    torch::serialize::OutputArchive archive;
    module.save(archive);
    std::string payload;
    archive.save_to([&payload](const void* data, size_t size) -> size_t {
        payload.append(static_cast<const char*>(data), size);
        return size;
    });

    nlohmann::json header{{"kind", kind},
                          {"config", config},
                          {"weight_hash", weight_hash(module)},
                          {"payload_bytes", payload.size()}};
    const std::string header_str = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_checkpoint: cannot open " + path);
    f.write(kMagic, sizeof(kMagic) - 1);
    const uint64_t n = header_str.size();
    f.write(reinterpret_cast<const char*>(&n), sizeof(n));
    f.write(header_str.data(), std::streamsize(header_str.size()));
    f.write(payload.data(), std::streamsize(payload.size()));
    if (!f) throw DataError("save_checkpoint: write failed for " + path);
}

namespace {
CheckpointHeader read_header_stream(std::ifstream& f, const std::string& path,
                                    std::string* payload) {
    char magic[sizeof(kMagic) - 1];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw FormatError("checkpoint: bad magic in " + path);
    uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::string header_str(n, '\0');
    f.read(header_str.data(), std::streamsize(n));
    if (!f) throw FormatError("checkpoint: truncated header in " + path);
    nlohmann::json j = nlohmann::json::parse(header_str);
    CheckpointHeader h;
    h.kind = j.at("kind").get<std::string>();
    h.config = j.at("config");
    h.weight_hash = j.at("weight_hash").get<std::string>();
    if (payload) {
        const size_t bytes = j.at("payload_bytes").get<size_t>();
        payload->resize(bytes);
        f.read(payload->data(), std::streamsize(bytes));
        if (!f) throw FormatError("checkpoint: truncated payload in " + path);
    }
    return h;
}
}  // namespace

CheckpointHeader read_checkpoint_header(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint: cannot open " + path);
    return read_header_stream(f, path, nullptr);
}

CheckpointHeader load_checkpoint(const std::string& path, const std::string& expected_kind,
                                 torch::nn::Module& module) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("checkpoint: cannot open " + path);
    std::string payload;
    CheckpointHeader h = read_header_stream(f, path, &payload);
    if (h.kind != expected_kind)
        throw ConfigError("checkpoint: expected kind '" + expected_kind + "', found '" + h.kind +
                          "' in " + path);
    torch::serialize::InputArchive archive;
    archive.load_from(payload.data(), payload.size());
    module.load(archive);
    const std::string actual = weight_hash(module);
    if (actual != h.weight_hash)
        throw IntegrityError("checkpoint: weight hash mismatch in " + path + " (stored " +
                             h.weight_hash + ", recomputed " + actual + ")");
    return h;
}

nlohmann::json noise_config_to_json(const NoisePredictorConfig& c) {
    return {{"base_channels", c.base_channels},
            {"num_resolutions", c.num_resolutions},
            {"channel_mult", c.channel_mult},
            {"attention_resolutions", std::vector<int>(c.attention_resolutions.begin(),
                                                       c.attention_resolutions.end())},
            {"resblocks_per_resolution", c.resblocks_per_resolution},
            {"step_embedding_dim", c.step_embedding_dim},
            {"image_size", c.image_size}};
}

NoisePredictorConfig noise_config_from_json(const nlohmann::json& j) {
    NoisePredictorConfig c;
    c.base_channels = j.value("base_channels", c.base_channels);
    c.num_resolutions = j.value("num_resolutions", c.num_resolutions);
    c.channel_mult = j.value("channel_mult", c.channel_mult);
    if (j.contains("attention_resolutions")) {
        auto v = j.at("attention_resolutions").get<std::vector<int>>();
        c.attention_resolutions = std::set<int>(v.begin(), v.end());
    }
    c.resblocks_per_resolution = j.value("resblocks_per_resolution", c.resblocks_per_resolution);
    c.step_embedding_dim = j.value("step_embedding_dim", c.step_embedding_dim);
    c.image_size = j.value("image_size", c.image_size);
    return c;
}

nlohmann::json depth_config_to_json(const DepthPredictorConfig& c) {
    nlohmann::json sc = nlohmann::json::object();
    for (const auto& [k, v] : c.structure_channels) sc[std::to_string(k)] = v;
    return {{"encoder_channels", c.encoder_channels},
            {"decoder_channels", c.decoder_channels},
            {"fusion_scales", std::vector<int>(c.fusion_scales.begin(), c.fusion_scales.end())},
            {"fusion_enabled", c.fusion_enabled},
            {"structure_channels", sc}};
}

DepthPredictorConfig depth_config_from_json(const nlohmann::json& j) {
    DepthPredictorConfig c;
    c.encoder_channels = j.value("encoder_channels", c.encoder_channels);
    c.decoder_channels = j.value("decoder_channels", c.decoder_channels);
    if (j.contains("fusion_scales")) {
        auto v = j.at("fusion_scales").get<std::vector<int>>();
        c.fusion_scales = std::set<int>(v.begin(), v.end());
    }
    c.fusion_enabled = j.value("fusion_enabled", c.fusion_enabled);
    c.structure_channels.clear();
    if (j.contains("structure_channels"))
        for (const auto& [k, v] : j.at("structure_channels").items())
            c.structure_channels[std::stoi(k)] = v.get<int>();
    return c;
}

}  // namespace dadp
