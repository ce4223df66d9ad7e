#include "ivegan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ivegan/io.hpp"

namespace ivegan {

namespace {

using nlohmann::json;

std::string encode_doubles(const Tensor& t) {
    // Little-endian IEEE-754; x86-64 host order.
    static_assert(sizeof(double) == 8);
    std::vector<unsigned char> bytes(t.size() * 8);
    std::memcpy(bytes.data(), t.raw(), bytes.size());
    return base64_encode(bytes.data(), bytes.size());
}

Tensor decode_doubles(const std::string& b64, std::vector<std::size_t> shape) {
    const std::vector<unsigned char> bytes = base64_decode(b64);
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    if (bytes.size() != n * 8) {
        throw IoError("checkpoint: parameter blob has wrong length");
    }
    std::vector<double> vals(n);
    std::memcpy(vals.data(), bytes.data(), bytes.size());
    return Tensor(std::move(shape), std::move(vals));
}

std::string act_name(Act a) {
    switch (a) {
        case Act::Tanh: return "tanh";
        case Act::LRelu: return "lrelu";
        case Act::Linear: return "linear";
        case Act::Sigmoid: return "sigmoid";
    }
    throw ValueError("unknown activation");
}

Act act_from(const std::string& s) {
    if (s == "tanh") return Act::Tanh;
    if (s == "lrelu") return Act::LRelu;
    if (s == "linear") return Act::Linear;
    if (s == "sigmoid") return Act::Sigmoid;
    throw IoError("checkpoint: unknown activation \"" + s + "\"");
}

json network_to_json(const Network& net) {
    json layers = json::array();
    for (const Layer& l : net.layers) {
        layers.push_back({{"in", l.weight.rows()},
                          {"out", l.weight.cols()},
                          {"act", act_name(l.act)},
                          {"slope", l.slope},
                          {"W", encode_doubles(l.weight)},
                          {"b", encode_doubles(l.bias)}});
    }
    return layers;
}

Network network_from_json(const json& layers) {
    Network net;
    for (const json& jl : layers) {
        Layer l;
        const std::size_t in = jl.at("in").get<std::size_t>();
        const std::size_t out = jl.at("out").get<std::size_t>();
        l.act = act_from(jl.at("act").get<std::string>());
        l.slope = jl.at("slope").get<double>();
        l.weight = decode_doubles(jl.at("W").get<std::string>(), {in, out});
        l.bias = decode_doubles(jl.at("b").get<std::string>(), {out});
        net.layers.push_back(std::move(l));
    }
    return net;
}

json adam_to_json(const AdamState& s) {
    json jm = json::array(), jv = json::array();
    for (const Tensor& t : s.m) jm.push_back(encode_doubles(t));
    for (const Tensor& t : s.v) jv.push_back(encode_doubles(t));
    return {{"alpha", s.cfg.alpha}, {"beta1", s.cfg.beta1}, {"beta2", s.cfg.beta2},
            {"eps", s.cfg.eps},     {"t", s.t},             {"m", jm},
            {"v", jv}};
}

AdamState adam_from_json(const json& j, const Network& net) {
    AdamState s = AdamState::init(net, {j.at("alpha").get<double>(), j.at("beta1").get<double>(),
                                        j.at("beta2").get<double>(), j.at("eps").get<double>()});
    s.t = j.at("t").get<long>();
    const json& jm = j.at("m");
    const json& jv = j.at("v");
    if (jm.size() != s.m.size() || jv.size() != s.v.size()) {
        throw IoError("checkpoint: optimizer state does not match network");
    }
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        s.m[i] = decode_doubles(jm[i].get<std::string>(), s.m[i].shape());
        s.v[i] = decode_doubles(jv[i].get<std::string>(), s.v[i].shape());
    }
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j;
    j["format_version"] = ckpt.format_version;
    j["kind"] = ckpt.kind;
    j["experiment"] = ckpt.experiment;
    j["config_hash"] = ckpt.config_hash;
    j["iteration"] = ckpt.iteration;
    j["rng_state"] = ckpt.rng_state;
    if (ckpt.kind == "ivegan") {
        if (!ckpt.model) throw ValueError("save_checkpoint: ivegan checkpoint without model");
        const IveGanModel& m = *ckpt.model;
        j["dims"] = {{"data_dim", m.data_dim}, {"z_dim", m.z_dim}, {"zprime_dim", m.zprime_dim}};
        j["networks"] = {{"E", network_to_json(m.E)},
                         {"G", network_to_json(m.G)},
                         {"D", network_to_json(m.D)},
                         {"Dprime", network_to_json(m.Dprime)}};
        j["adam"] = {{"E", adam_to_json(m.adam_E)},
                     {"G", adam_to_json(m.adam_G)},
                     {"D", adam_to_json(m.adam_D)},
                     {"Dprime", adam_to_json(m.adam_Dprime)}};
    } else if (ckpt.kind == "vanilla") {
        if (!ckpt.vanilla) throw ValueError("save_checkpoint: vanilla checkpoint without model");
        const VanillaModel& m = *ckpt.vanilla;
        j["dims"] = {{"data_dim", m.data_dim}, {"noise_dim", m.noise_dim}};
        j["networks"] = {{"G", network_to_json(m.G)}, {"D", network_to_json(m.D)}};
        j["adam"] = {{"G", adam_to_json(m.adam_G)}, {"D", adam_to_json(m.adam_D)}};
    } else {
        throw ValueError("save_checkpoint: unknown kind \"" + ckpt.kind + "\"");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    Checkpoint c;
    try {
        c.format_version = j.at("format_version").get<int>();
        if (c.format_version != 1) {
            throw IoError("unsupported checkpoint format_version " +
                          std::to_string(c.format_version));
        }
        c.kind = j.at("kind").get<std::string>();
        c.experiment = j.at("experiment").get<std::string>();
        c.config_hash = j.at("config_hash").get<std::uint64_t>();
        c.iteration = j.at("iteration").get<std::size_t>();
        c.rng_state = j.at("rng_state").get<std::string>();
        if (c.kind == "ivegan") {
            IveGanModel m;
            m.data_dim = j.at("dims").at("data_dim").get<std::size_t>();
            m.z_dim = j.at("dims").at("z_dim").get<std::size_t>();
            m.zprime_dim = j.at("dims").at("zprime_dim").get<std::size_t>();
            m.E = network_from_json(j.at("networks").at("E"));
            m.G = network_from_json(j.at("networks").at("G"));
            m.D = network_from_json(j.at("networks").at("D"));
            m.Dprime = network_from_json(j.at("networks").at("Dprime"));
            m.adam_E = adam_from_json(j.at("adam").at("E"), m.E);
            m.adam_G = adam_from_json(j.at("adam").at("G"), m.G);
            m.adam_D = adam_from_json(j.at("adam").at("D"), m.D);
            m.adam_Dprime = adam_from_json(j.at("adam").at("Dprime"), m.Dprime);
            m.validate();
            c.model = std::move(m);
        } else if (c.kind == "vanilla") {
            VanillaModel m;
            m.data_dim = j.at("dims").at("data_dim").get<std::size_t>();
            m.noise_dim = j.at("dims").at("noise_dim").get<std::size_t>();
            m.G = network_from_json(j.at("networks").at("G"));
            m.D = network_from_json(j.at("networks").at("D"));
            m.adam_G = adam_from_json(j.at("adam").at("G"), m.G);
            m.adam_D = adam_from_json(j.at("adam").at("D"), m.D);
            if (m.G.in_dim() != m.noise_dim || m.G.out_dim() != m.data_dim ||
                m.D.in_dim() != m.data_dim) {
                throw IoError("checkpoint: vanilla dims do not match networks");
            }
            c.vanilla = std::move(m);
        } else {
            throw IoError("checkpoint: unknown kind \"" + c.kind + "\"");
        }
    } catch (const json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    } catch (const ShapeError& e) {
        throw IoError("checkpoint dimension mismatch in " + path + ": " + e.what());
    }
    return c;
}

}  // namespace ivegan
