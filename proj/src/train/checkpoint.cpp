#include "wgn/train/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"

namespace wgn::train {

namespace {

constexpr char kMagic[8] = {'W', 'G', 'N', 'C', 'K', 'P', 'T', '\0'};

std::string dtype_name(torch::Dtype t) {
    if (t == torch::kFloat32) return "f32";
    if (t == torch::kFloat64) return "f64";
    fail(ErrorKind::Io, "unsupported parameter dtype in checkpoint");
}

torch::Dtype dtype_from(const std::string& s) {
    if (s == "f32") return torch::kFloat32;
    if (s == "f64") return torch::kFloat64;
    fail(ErrorKind::Io, "unknown checkpoint dtype " + s);
}

}  // namespace

std::string save_checkpoint(const std::filesystem::path& path, const ModuleSet& modules, nlohmann::json meta) {
    std::string payload;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [prefix, module] : modules) {
        for (const auto& p : module->named_parameters(true)) {
            const auto t = p.value().detach().contiguous().cpu();
            entries.push_back({{"name", prefix + "." + p.key()},
                               {"dtype", dtype_name(t.scalar_type())},
                               {"shape", t.sizes().vec()},
                               {"offset", payload.size()},
                               {"nbytes", t.nbytes()}});
            payload.append(static_cast<const char*>(t.data_ptr()), t.nbytes());
        }
    }
    const std::string sha = sha256_hex(payload);
    nlohmann::json header = {{"format", "wgn-checkpoint"}, {"version", 1}, {"payload_sha256", sha},
                             {"tensors", entries},         {"meta", std::move(meta)}};
    const std::string text = header.dump();
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write checkpoint " + path.string());
        out.write(kMagic, 8);
        std::uint64_t n = text.size();
        unsigned char len[8];
        for (int k = 0; k < 8; ++k) len[k] = static_cast<unsigned char>((n >> (8 * k)) & 0xff);
        out.write(reinterpret_cast<const char*>(len), 8);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out) fail(ErrorKind::Io, "short write on checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
    return sha;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
    char magic[8];
    unsigned char len[8];
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(len), 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) fail(ErrorKind::Io, path.string() + " is not a checkpoint");
    std::uint64_t n = 0;
    for (int k = 0; k < 8; ++k) n |= static_cast<std::uint64_t>(len[k]) << (8 * k);
    std::string text(n, '\0');
    in.read(text.data(), static_cast<std::streamsize>(n));
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Checkpoint ck;
    try {
        ck.header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        fail(ErrorKind::Io, "corrupt checkpoint header in " + path.string());
    }
    if (sha256_hex(payload) != ck.sha256()) fail(ErrorKind::Io, "checkpoint checksum mismatch: " + path.string());
    for (const auto& e : ck.header.at("tensors")) {
        const auto off = e.at("offset").get<std::size_t>(), nb = e.at("nbytes").get<std::size_t>();
        if (off + nb > payload.size()) fail(ErrorKind::Io, "truncated checkpoint " + path.string());
        auto t = torch::empty(e.at("shape").get<std::vector<int64_t>>(), dtype_from(e.at("dtype")));
        if (static_cast<std::size_t>(t.nbytes()) != nb) fail(ErrorKind::Io, "checkpoint tensor size mismatch");
        std::memcpy(t.data_ptr(), payload.data() + off, nb);
        ck.tensors.emplace(e.at("name").get<std::string>(), t);
    }
    return ck;
}

void load_module(const Checkpoint& ckpt, const std::string& prefix, torch::nn::Module& module) {
    torch::NoGradGuard ng;
    for (auto& p : module.named_parameters(true)) {
        const auto key = prefix + "." + p.key();
        const auto it = ckpt.tensors.find(key);
        if (it == ckpt.tensors.end()) fail(ErrorKind::Io, "checkpoint lacks parameter " + key);
        if (it->second.sizes() != p.value().sizes()) fail(ErrorKind::Io, "shape mismatch for " + key);
        p.value().copy_(it->second);
    }
}

std::vector<torch::Tensor> snapshot(const torch::nn::Module& module) {
    std::vector<torch::Tensor> out;
    for (const auto& p : module.parameters(true)) out.push_back(p.detach().clone());
    return out;
}

void restore(torch::nn::Module& module, const std::vector<torch::Tensor>& state) {
    torch::NoGradGuard ng;
    auto params = module.parameters(true);
    if (params.size() != state.size()) fail(ErrorKind::Io, "snapshot does not match the module");
    for (std::size_t k = 0; k < params.size(); ++k) params[k].copy_(state[k]);
}

}  // namespace wgn::train
