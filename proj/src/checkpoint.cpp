#include "semigda/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "semigda/common.hpp"
#include "semigda/hash.hpp"

namespace semigda {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'D', 'A', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_exact(std::ofstream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) throw IoError("checkpoint: write failed");
}

void read_exact(std::ifstream& is, void* data, std::size_t n, const std::string& what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (is.gcount() != static_cast<std::streamsize>(n))
        throw IoError("checkpoint: truncated file while reading " + what);
}

void write_tensor(std::ofstream& os, const Tensor& t) {
    write_exact(os, t.data(), sizeof(double) * static_cast<std::size_t>(t.numel()));
}

void read_tensor(std::ifstream& is, Tensor& t, const std::string& what) {
    read_exact(is, t.data(), sizeof(double) * static_cast<std::size_t>(t.numel()), what);
}

nlohmann::json shape_json(const Tensor& t) {
    nlohmann::json a = nlohmann::json::array();
    for (int64_t d : t.shape()) a.push_back(d);
    return a;
}

}  // namespace

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<CheckpointGroup>& groups,
                     const std::vector<CheckpointOptimizer>& optims) {
    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["meta"] = meta;
    manifest["groups"] = nlohmann::json::array();
    for (const auto& g : groups) {
        nlohmann::json gj;
        gj["name"] = g.name;
        gj["hash"] = nn::params_digest(g.params);
        gj["params"] = nlohmann::json::array();
        for (const nn::Param* p : g.params) {
            nlohmann::json pj;
            pj["name"] = p->name;
            pj["shape"] = shape_json(p->value);
            pj["trainable"] = p->trainable;
            gj["params"].push_back(pj);
        }
        manifest["groups"].push_back(gj);
    }
    manifest["optimizers"] = nlohmann::json::array();
    for (const auto& o : optims) {
        if (!o.adam) throw ConfigError("save_checkpoint: null optimizer for group " + o.group);
        nlohmann::json oj;
        oj["group"] = o.group;
        oj["step"] = o.adam->step_count();
        oj["lr"] = o.adam->lr();
        oj["tensors"] = static_cast<int64_t>(o.adam->size());
        manifest["optimizers"].push_back(oj);
    }

    // whole-payload hash covers optimizer moments too, not just parameters
    Fnv1a64 payload;
    for (const auto& g : groups)
        for (const nn::Param* p : g.params)
            payload.update(p->value.data(), sizeof(double) * std::size_t(p->value.numel()));
    for (const auto& o : optims)
        for (std::size_t i = 0; i < o.adam->size(); ++i) {
            const Tensor& m = o.adam->moment1(i);
            const Tensor& v = o.adam->moment2(i);
            payload.update(m.data(), sizeof(double) * std::size_t(m.numel()));
            payload.update(v.data(), sizeof(double) * std::size_t(v.numel()));
        }
    manifest["payload_hash"] = payload.hex();

    const std::string body = manifest.dump();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
    write_exact(os, kMagic, sizeof(kMagic));
    const std::uint32_t ver = kFormatVersion;
    write_exact(os, &ver, sizeof(ver));
    const std::uint64_t len = body.size();
    write_exact(os, &len, sizeof(len));
    write_exact(os, body.data(), body.size());

    for (const auto& g : groups)
        for (const nn::Param* p : g.params) write_tensor(os, p->value);
    for (const auto& o : optims)
        for (std::size_t i = 0; i < o.adam->size(); ++i) {
            write_tensor(os, o.adam->moment1(i));
            write_tensor(os, o.adam->moment2(i));
        }
    os.close();
    if (!os) throw IoError("checkpoint: close failed for " + path);
}

namespace {

nlohmann::json read_manifest(std::ifstream& is, const std::string& path) {
    char magic[8];
    read_exact(is, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw IoError(path + " is not a checkpoint file");
    std::uint32_t ver = 0;
    read_exact(is, &ver, sizeof(ver), "version");
    if (ver != kFormatVersion)
        throw IoError("checkpoint " + path + " has unsupported format version " +
                      std::to_string(ver));
    std::uint64_t len = 0;
    read_exact(is, &len, sizeof(len), "manifest length");
    std::string body(len, '\0');
    read_exact(is, body.data(), len, "manifest");
    nlohmann::json manifest = nlohmann::json::parse(body, nullptr, false);
    if (manifest.is_discarded()) throw IoError("checkpoint " + path + ": corrupt manifest");
    return manifest;
}

}  // namespace

nlohmann::json read_checkpoint_manifest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    return read_manifest(is, path);
}

nlohmann::json load_checkpoint(const std::string& path, const std::vector<CheckpointGroup>& groups,
                               const std::vector<CheckpointOptimizer>& optims) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checkpoint: cannot open " + path);
    nlohmann::json manifest = read_manifest(is, path);
    Fnv1a64 payload;
    auto read_hashed = [&](Tensor& t, const std::string& what) {
        read_tensor(is, t, what);
        payload.update(t.data(), sizeof(double) * std::size_t(t.numel()));
    };

    const auto& gj = manifest.at("groups");
    if (gj.size() != groups.size())
        throw IoError("checkpoint " + path + ": has " + std::to_string(gj.size()) +
                      " parameter groups, expected " + std::to_string(groups.size()));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& stored = gj[gi];
        const auto& live = groups[gi];
        if (stored.at("name").get<std::string>() != live.name)
            throw IoError("checkpoint " + path + ": group " + std::to_string(gi) + " is '" +
                          stored.at("name").get<std::string>() + "', expected '" + live.name +
                          "'");
        const auto& pj = stored.at("params");
        if (pj.size() != live.params.size())
            throw IoError("checkpoint " + path + ": group '" + live.name + "' has " +
                          std::to_string(pj.size()) + " params, expected " +
                          std::to_string(live.params.size()));
        for (std::size_t pi = 0; pi < live.params.size(); ++pi) {
            nn::Param* p = live.params[pi];
            if (pj[pi].at("name").get<std::string>() != p->name)
                throw IoError("checkpoint " + path + ": param '" +
                              pj[pi].at("name").get<std::string>() + "' does not match live '" +
                              p->name + "'");
            std::vector<int64_t> shape = pj[pi].at("shape").get<std::vector<int64_t>>();
            if (shape != p->value.shape())
                throw IoError("checkpoint " + path + ": shape mismatch for param '" + p->name +
                              "'");
            read_hashed(p->value, p->name);
            p->trainable = pj[pi].at("trainable").get<bool>();
        }
        const std::string digest = nn::params_digest(live.params);
        if (digest != stored.at("hash").get<std::string>())
            throw IoError("checkpoint " + path + ": content hash mismatch for group '" +
                          live.name + "'");
    }

    const auto& oj = manifest.at("optimizers");
    if (oj.size() != optims.size())
        throw IoError("checkpoint " + path + ": has " + std::to_string(oj.size()) +
                      " optimizer states, expected " + std::to_string(optims.size()));
    for (std::size_t oi = 0; oi < optims.size(); ++oi) {
        nn::Adam* adam = optims[oi].adam;
        if (!adam) throw ConfigError("load_checkpoint: null optimizer for group " +
                                     optims[oi].group);
        if (oj[oi].at("group").get<std::string>() != optims[oi].group)
            throw IoError("checkpoint " + path + ": optimizer " + std::to_string(oi) + " is '" +
                          oj[oi].at("group").get<std::string>() + "', expected '" +
                          optims[oi].group + "'");
        if (oj[oi].at("tensors").get<int64_t>() != static_cast<int64_t>(adam->size()))
            throw IoError("checkpoint " + path + ": optimizer '" + optims[oi].group +
                          "' tensor count mismatch");
        adam->step_count() = oj[oi].at("step").get<int64_t>();
        for (std::size_t i = 0; i < adam->size(); ++i) {
            read_hashed(adam->moment1(i), optims[oi].group + ".m");
            read_hashed(adam->moment2(i), optims[oi].group + ".v");
        }
    }
    if (payload.hex() != manifest.at("payload_hash").get<std::string>())
        throw IoError("checkpoint " + path + ": payload hash mismatch");
    return manifest.at("meta");
}

}  // namespace semigda
