#include "regen/codec/checkpoint.hpp"

#include <cstdio>
#include <cstring>

namespace regen {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const std::string& scope) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError(scope.empty() ? it.key() : scope + "." + it.key(),
                              "unknown config key: " +
                                  (scope.empty() ? it.key()
                                                 : scope + "." + it.key()));
    }
}

template <class M>
void write_archive(const std::filesystem::path& path, const std::string& kind,
                   const nlohmann::ordered_json& config, M& model,
                   const TrainerSnapshot* snap) {
    std::vector<Param*> params = model.params();
    nlohmann::ordered_json hdr;
    hdr["model"] = kind;
    hdr["config"] = config;
    auto& tens = hdr["tensors"] = nlohmann::ordered_json::array();
    for (auto* p : params) {
        nlohmann::ordered_json t;
        t["name"] = p->name;
        t["shape"] = p->value.shape;
        tens.push_back(std::move(t));
    }
    bool has_adam = snap != nullptr;
    for (auto* p : params)
        if (has_adam && !p->adam_m.defined()) has_adam = false;
    hdr["has_adam"] = has_adam;
    if (snap) {
        hdr["trainer"]["iter"] = snap->iter;
        hdr["trainer"]["adam_t"] = snap->adam_t;
        hdr["trainer"]["rng"] = snap->rng_state;
    }
    const std::string js = hdr.dump();

    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw IoError("checkpoint: cannot open for write " + path.string());
    if (std::fwrite("RGCK", 1, 4, f.get()) != 4)
        throw IoError("checkpoint: short write");
    const uint16_t version = 1;
    std::fwrite(&version, 2, 1, f.get());
    const uint32_t len = (uint32_t)js.size();
    std::fwrite(&len, 4, 1, f.get());
    if (std::fwrite(js.data(), 1, js.size(), f.get()) != js.size())
        throw IoError("checkpoint: short write");
    auto dump = [&](const Tensor& t) {
        if (std::fwrite(t.data(), 4, (size_t)t.numel(), f.get()) !=
            (size_t)t.numel())
            throw IoError("checkpoint: short write");
    };
    for (auto* p : params) dump(p->value);
    if (has_adam)
        for (auto* p : params) {
            dump(p->adam_m);
            dump(p->adam_v);
        }
}

nlohmann::json read_header(FILE* f, const std::filesystem::path& path) {
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "RGCK", 4) != 0)
        throw CheckpointError("not a checkpoint: " + path.string());
    uint16_t version = 0;
    uint32_t len = 0;
    if (std::fread(&version, 2, 1, f) != 1 || version != 1)
        throw CheckpointError("unsupported checkpoint version");
    if (std::fread(&len, 4, 1, f) != 1)
        throw CheckpointError("truncated checkpoint header");
    std::string js((size_t)len, '\0');
    if (std::fread(js.data(), 1, len, f) != len)
        throw CheckpointError("truncated checkpoint header");
    try {
        return nlohmann::json::parse(js);
    } catch (const std::exception& e) {
        throw CheckpointError("bad checkpoint header: " + std::string(e.what()));
    }
}

template <class M>
void read_tensors(FILE* f, const nlohmann::json& hdr, M& model,
                  TrainerSnapshot* snap) {
    std::vector<Param*> params = model.params();
    const auto& tens = hdr.at("tensors");
    if (tens.size() != params.size())
        throw CheckpointError("checkpoint tensor count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& t = tens[i];
        if (t.at("name").get<std::string>() != params[i]->name)
            throw CheckpointError("checkpoint tensor name mismatch at " +
                                  params[i]->name);
        const Shape sh = t.at("shape").get<Shape>();
        if (sh != params[i]->value.shape)
            throw CheckpointError("checkpoint tensor shape mismatch at " +
                                  params[i]->name);
    }
    auto slurp = [&](Tensor& t) {
        if (std::fread(t.data(), 4, (size_t)t.numel(), f) != (size_t)t.numel())
            throw CheckpointError("truncated checkpoint payload");
    };
    for (auto* p : params) slurp(p->value);
    const bool has_adam = hdr.value("has_adam", false);
    if (has_adam)
        for (auto* p : params) {
            p->adam_m = Tensor(p->value.shape);
            p->adam_v = Tensor(p->value.shape);
            slurp(p->adam_m);
            slurp(p->adam_v);
        }
    if (snap && hdr.contains("trainer")) {
        snap->iter = hdr["trainer"].value("iter", (int64_t)0);
        snap->adam_t = hdr["trainer"].value("adam_t", (int64_t)0);
        snap->rng_state =
            hdr["trainer"].value("rng", std::vector<uint64_t>{});
    }
}

}  // namespace

// ------------------------------------------------------------ configs

nlohmann::ordered_json to_json(const RegenConfig& cfg) {
    nlohmann::ordered_json j;
    j["k"] = cfg.k;
    j["base_channels"] = cfg.enc.base_channels;
    j["channel_multipliers"] = cfg.enc.channel_multipliers;
    j["blocks_per_stage"] = cfg.enc.blocks_per_stage;
    j["gn_groups"] = cfg.enc.gn_groups;
    j["siren_depth"] = cfg.siren.depth;
    j["siren_hidden"] = cfg.siren.hidden_dim;
    j["omega0"] = cfg.siren.omega0;
    j["modulation"] = cfg.siren.modulation;
    j["depth"] = cfg.dec.depth;
    j["heads"] = cfg.dec.heads;
    j["d_model"] = cfg.dec.d_model;
    j["patch_size"] = cfg.dec.patch_size;
    j["mlp_ratio"] = cfg.dec.mlp_ratio;
    j["schedule"] = to_string(cfg.sched_kind);
    j["sched_steps"] = cfg.sched_steps;
    j["alpha_min"] = cfg.alpha_min;
    j["token_budget"] = cfg.token_budget;
    j["replace_frame0"] = cfg.replace_frame0;
    j["init_seed"] = cfg.init_seed;
    return j;
}

RegenConfig regen_config_from_json(const nlohmann::json& j) {
    check_keys(j,
               {"k", "base_channels", "channel_multipliers", "blocks_per_stage",
                "gn_groups", "siren_depth", "siren_hidden", "omega0",
                "modulation", "depth", "heads", "d_model", "patch_size",
                "mlp_ratio", "schedule", "sched_steps", "alpha_min",
                "token_budget", "replace_frame0", "init_seed"},
               "model");
    RegenConfig cfg;
    cfg.k = j.value("k", 4);
    cfg.enc = default_encoder_config(cfg.k, j.value("base_channels", 32));
    if (j.contains("channel_multipliers"))
        cfg.enc.channel_multipliers =
            j["channel_multipliers"].get<std::vector<int>>();
    cfg.enc.blocks_per_stage = j.value("blocks_per_stage", 1);
    cfg.enc.gn_groups = j.value("gn_groups", 8);
    cfg.siren.depth = j.value("siren_depth", 4);
    cfg.siren.hidden_dim = j.value("siren_hidden", 128);
    cfg.siren.omega0 = j.value("omega0", 30.0);
    cfg.siren.modulation = j.value("modulation", std::string("film"));
    cfg.dec.depth = j.value("depth", 8);
    cfg.dec.heads = j.value("heads", 4);
    cfg.dec.d_model = j.value("d_model", 256);
    cfg.dec.patch_size = j.value("patch_size", 8);
    cfg.dec.mlp_ratio = j.value("mlp_ratio", 4.0);
    cfg.sched_kind =
        schedule_kind_from_string(j.value("schedule", std::string("cosine")));
    cfg.sched_steps = j.value("sched_steps", 1000);
    cfg.alpha_min = j.value("alpha_min", 1e-3);
    cfg.token_budget = j.value("token_budget", 16384);
    cfg.replace_frame0 = j.value("replace_frame0", true);
    cfg.init_seed = j.value("init_seed", (uint64_t)0);
    return cfg;
}

nlohmann::ordered_json to_json(const BaselineConfig& cfg) {
    nlohmann::ordered_json j;
    j["k"] = cfg.k;
    j["base_channels"] = cfg.enc.base_channels;
    j["channel_multipliers"] = cfg.enc.channel_multipliers;
    j["blocks_per_stage"] = cfg.enc.blocks_per_stage;
    j["gn_groups"] = cfg.enc.gn_groups;
    j["dec_multipliers"] = cfg.dec.channel_multipliers;
    j["width_mult"] = cfg.dec.width_mult;
    j["init_seed"] = cfg.init_seed;
    return j;
}

BaselineConfig baseline_config_from_json(const nlohmann::json& j) {
    check_keys(j,
               {"k", "base_channels", "channel_multipliers", "blocks_per_stage",
                "gn_groups", "dec_multipliers", "width_mult", "init_seed"},
               "model");
    BaselineConfig cfg;
    cfg.k = j.value("k", 4);
    cfg.enc = default_encoder_config(cfg.k, j.value("base_channels", 32));
    if (j.contains("channel_multipliers"))
        cfg.enc.channel_multipliers =
            j["channel_multipliers"].get<std::vector<int>>();
    cfg.enc.blocks_per_stage = j.value("blocks_per_stage", 1);
    cfg.enc.gn_groups = j.value("gn_groups", 8);
    cfg.dec.k = cfg.k;
    cfg.dec.base_channels = cfg.enc.base_channels;
    cfg.dec.gn_groups = cfg.enc.gn_groups;
    cfg.dec.blocks_per_stage = cfg.enc.blocks_per_stage;
    if (j.contains("dec_multipliers"))
        cfg.dec.channel_multipliers =
            j["dec_multipliers"].get<std::vector<int>>();
    cfg.dec.width_mult = j.value("width_mult", 1.0);
    cfg.init_seed = j.value("init_seed", (uint64_t)0);
    return cfg;
}

nlohmann::ordered_json to_json(const InContextConfig& cfg) {
    nlohmann::ordered_json j;
    j["k"] = cfg.k;
    j["base_channels"] = cfg.enc.base_channels;
    j["channel_multipliers"] = cfg.enc.channel_multipliers;
    j["blocks_per_stage"] = cfg.enc.blocks_per_stage;
    j["gn_groups"] = cfg.enc.gn_groups;
    j["depth"] = cfg.dec.depth;
    j["heads"] = cfg.dec.heads;
    j["d_model"] = cfg.dec.d_model;
    j["patch_size"] = cfg.dec.patch_size;
    j["mlp_ratio"] = cfg.dec.mlp_ratio;
    j["train_frames"] = cfg.train_frames;
    j["train_gh"] = cfg.train_gh;
    j["train_gw"] = cfg.train_gw;
    j["allow_pe_interp"] = cfg.allow_pe_interp;
    j["schedule"] = to_string(cfg.sched_kind);
    j["sched_steps"] = cfg.sched_steps;
    j["alpha_min"] = cfg.alpha_min;
    j["init_seed"] = cfg.init_seed;
    return j;
}

InContextConfig incontext_config_from_json(const nlohmann::json& j) {
    check_keys(j,
               {"k", "base_channels", "channel_multipliers", "blocks_per_stage",
                "gn_groups", "depth", "heads", "d_model", "patch_size",
                "mlp_ratio", "train_frames", "train_gh", "train_gw",
                "allow_pe_interp", "schedule", "sched_steps", "alpha_min",
                "init_seed"},
               "model");
    InContextConfig cfg;
    cfg.k = j.value("k", 4);
    cfg.enc = default_encoder_config(cfg.k, j.value("base_channels", 32));
    if (j.contains("channel_multipliers"))
        cfg.enc.channel_multipliers =
            j["channel_multipliers"].get<std::vector<int>>();
    cfg.enc.blocks_per_stage = j.value("blocks_per_stage", 1);
    cfg.enc.gn_groups = j.value("gn_groups", 8);
    cfg.dec.depth = j.value("depth", 8);
    cfg.dec.heads = j.value("heads", 4);
    cfg.dec.d_model = j.value("d_model", 256);
    cfg.dec.patch_size = j.value("patch_size", 8);
    cfg.dec.mlp_ratio = j.value("mlp_ratio", 4.0);
    cfg.train_frames = j.value("train_frames", cfg.k + 1);
    cfg.train_gh = j.value("train_gh", 8);
    cfg.train_gw = j.value("train_gw", 8);
    cfg.allow_pe_interp = j.value("allow_pe_interp", false);
    cfg.sched_kind =
        schedule_kind_from_string(j.value("schedule", std::string("cosine")));
    cfg.sched_steps = j.value("sched_steps", 1000);
    cfg.alpha_min = j.value("alpha_min", 1e-3);
    cfg.init_seed = j.value("init_seed", (uint64_t)0);
    return cfg;
}

// ------------------------------------------------------------- archive

void save_checkpoint(const std::filesystem::path& path,
                     RegenModel<float>& model, const TrainerSnapshot* snap) {
    write_archive(path, "regen", to_json(model.cfg), model, snap);
}
void save_checkpoint(const std::filesystem::path& path,
                     BaselineModel<float>& model, const TrainerSnapshot* snap) {
    write_archive(path, "baseline", to_json(model.cfg), model, snap);
}
void save_checkpoint(const std::filesystem::path& path,
                     InContextModel<float>& model,
                     const TrainerSnapshot* snap) {
    write_archive(path, "incontext", to_json(model.cfg), model, snap);
}

std::string checkpoint_kind(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw CheckpointError("cannot open checkpoint: " + path.string());
    return read_header(f.get(), path).at("model").get<std::string>();
}

std::unique_ptr<RegenModel<float>> load_regen(
    const std::filesystem::path& path, TrainerSnapshot* snap) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw CheckpointError("cannot open checkpoint: " + path.string());
    const auto hdr = read_header(f.get(), path);
    if (hdr.at("model").get<std::string>() != "regen")
        throw CheckpointError("checkpoint is not a regen model");
    auto model = std::make_unique<RegenModel<float>>(
        regen_config_from_json(hdr.at("config")));
    read_tensors(f.get(), hdr, *model, snap);
    return model;
}

std::unique_ptr<BaselineModel<float>> load_baseline(
    const std::filesystem::path& path, TrainerSnapshot* snap) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw CheckpointError("cannot open checkpoint: " + path.string());
    const auto hdr = read_header(f.get(), path);
    if (hdr.at("model").get<std::string>() != "baseline")
        throw CheckpointError("checkpoint is not a baseline model");
    auto model = std::make_unique<BaselineModel<float>>(
        baseline_config_from_json(hdr.at("config")));
    read_tensors(f.get(), hdr, *model, snap);
    return model;
}

std::unique_ptr<InContextModel<float>> load_incontext(
    const std::filesystem::path& path, TrainerSnapshot* snap) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw CheckpointError("cannot open checkpoint: " + path.string());
    const auto hdr = read_header(f.get(), path);
    if (hdr.at("model").get<std::string>() != "incontext")
        throw CheckpointError("checkpoint is not an in-context model");
    auto model = std::make_unique<InContextModel<float>>(
        incontext_config_from_json(hdr.at("config")));
    read_tensors(f.get(), hdr, *model, snap);
    return model;
}

}  // namespace regen
