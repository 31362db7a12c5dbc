#include "ctts/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctts {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["values"] = t.values();
    return j;
}

Tensor tensor_from_json(const json& j, const std::string& name) {
    if (!j.contains("shape") || !j.contains("values"))
        throw CheckpointError("parameter " + name + " is missing shape or values");
    std::vector<int> shape = j.at("shape").get<std::vector<int>>();
    std::vector<double> values = j.at("values").get<std::vector<double>>();
    try {
        return Tensor::from_values(std::move(shape), std::move(values), true);
    } catch (const std::exception& e) {
        throw CheckpointError("parameter " + name + ": " + e.what());
    }
}

}  // namespace

std::string checkpoint_to_string(const CttsConfig& config, const CttsParams& params,
                                 std::int64_t seed) {
    json j;
    j["format"] = "ctts-checkpoint-v1";
    json jc;
    jc["T"] = config.T;
    jc["d_model"] = config.d_model;
    jc["k_min"] = config.k_min;
    jc["k_max"] = config.k_max;
    jc["scales"] = config.scales;
    jc["num_segments"] = config.num_segments;
    jc["mlp_hidden"] = config.mlp_hidden;
    jc["num_classes"] = config.num_classes;
    jc["neutral_band"] = config.neutral_band;
    jc["seed"] = config.seed;
    j["config"] = jc;
    json jp;
    for (auto& [name, t] : params.named()) jp[name] = tensor_to_json(*t);
    j["params"] = jp;
    j["sigma_max"] = params.sigma_max;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "ctts-checkpoint-v1")
        throw CheckpointError("unrecognized checkpoint format");
    if (!j.contains("config") || !j.contains("params") || !j.contains("sigma_max") ||
        !j.contains("seed"))
        throw CheckpointError("checkpoint is missing a required section");

    Checkpoint out;
    const json& jc = j.at("config");
    try {
        out.config.T = jc.at("T").get<int>();
        out.config.d_model = jc.at("d_model").get<int>();
        out.config.k_min = jc.at("k_min").get<int>();
        out.config.k_max = jc.at("k_max").get<int>();
        out.config.scales = jc.at("scales").get<std::vector<int>>();
        out.config.num_segments = jc.at("num_segments").get<int>();
        out.config.mlp_hidden = jc.at("mlp_hidden").get<int>();
        out.config.num_classes = jc.at("num_classes").get<int>();
        out.config.neutral_band = jc.at("neutral_band").get<double>();
        out.config.seed = jc.at("seed").get<std::int64_t>();
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("bad config section: ") + e.what());
    }
    try {
        validate(out.config);
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("invalid config: ") + e.what());
    }

    // Build a correctly-shaped parameter set, then overwrite every tensor.
    out.params = init_params(out.config, 0);
    const json& jp = j.at("params");
    for (auto& [name, t] : out.params.named()) {
        if (!jp.contains(name)) throw CheckpointError("missing parameter " + name);
        Tensor loaded = tensor_from_json(jp.at(name), name);
        if (loaded.shape() != t->shape())
            throw CheckpointError("parameter " + name + " has shape " + loaded.shape_str() +
                                  ", expected " + t->shape_str());
        *t = loaded;
    }
    if (jp.size() != out.params.named().size())
        throw CheckpointError("checkpoint carries unknown parameters");
    out.params.sigma_max = j.at("sigma_max").get<double>();
    if (!(out.params.sigma_max > 0.0))
        throw CheckpointError("checkpoint sigma_max must be positive");
    out.seed = j.at("seed").get<std::int64_t>();
    return out;
}

void save_checkpoint(const std::string& path, const CttsConfig& config, const CttsParams& params,
                     std::int64_t seed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open " + path + " for writing");
    out << checkpoint_to_string(config, params, seed);
    if (!out) throw CheckpointError("write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

}  // namespace ctts
