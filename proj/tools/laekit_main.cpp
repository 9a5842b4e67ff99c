// laekit: train, apply, and evaluate text-driven latent edit directions
// on a frozen 3D-aware generator.
//
// Subcommands: init, train, edit, sweep, eval, inspect. The config file is
// canonical; flags and --override k=v entries are applied on top and the
// merged snapshot is recorded inside the checkpoint.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "laekit/evalmetrics.hpp"
#include "laekit/image_io.hpp"
#include "laekit/trainer.hpp"

namespace {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2 };

LogLevel log_level() {
    const char* env = std::getenv("LAEKIT_LOG");
    if (!env) return LogLevel::Info;
    std::string v = env;
    if (v == "debug") return LogLevel::Debug;
    if (v == "warn") return LogLevel::Warn;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (log_level() <= LogLevel::Info) std::cerr << "[laekit] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() <= LogLevel::Debug) std::cerr << "[laekit:debug] " << msg << "\n";
}

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json default_config_json() {
    laekit::TrainConfig cfg;
    cfg.attributes = {{"blond", "blond hair"},
                      {"smile", "smiling happy face"},
                      {"age", "old aged face"}};
    return cfg;
}

// Overrides use dotted paths into the config JSON ("lr=0.01",
// "weights.sc=0"). The key must already exist; values parse as JSON with a
// string fallback.
void apply_override(nlohmann::json& config, const std::string& entry) {
    size_t eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + entry);
    std::string key = entry.substr(0, eq);
    std::string value = entry.substr(eq + 1);
    nlohmann::json* node = &config;
    size_t start = 0;
    while (true) {
        size_t dot = key.find('.', start);
        std::string part = key.substr(start, dot - start);
        if (!node->contains(part))
            throw ConfigError("override references unknown config key: " + key);
        if (dot == std::string::npos) {
            nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> backbone;
    std::optional<int> steps;
};

laekit::TrainConfig resolve_config(const CommonFlags& flags) {
    nlohmann::json j = default_config_json();
    if (!flags.config_path.empty()) {
        std::ifstream f(flags.config_path);
        if (!f) throw ConfigError("cannot open config file: " + flags.config_path);
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config does not parse: ") + e.what());
        }
    }
    for (const std::string& o : flags.overrides) apply_override(j, o);
    if (flags.seed) j["seed"] = *flags.seed;
    if (flags.backbone) j["backbone"] = *flags.backbone;
    if (flags.steps) j["steps"] = *flags.steps;
    laekit::TrainConfig cfg;
    try {
        cfg = j.get<laekit::TrainConfig>();
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    // keep the merged snapshot for the checkpoint
    nlohmann::json snapshot = cfg;
    (void)snapshot;
    return cfg;
}

int find_attribute(const laekit::TrainConfig& cfg, const std::string& attr) {
    for (size_t i = 0; i < cfg.attributes.size(); ++i)
        if (cfg.attributes[i].name == attr || cfg.attributes[i].prompt_text == attr)
            return static_cast<int>(i);
    throw ConfigError("attribute not found in checkpoint config: " + attr);
}

std::vector<laekit::RenderedImage> render_sweep(laekit::TrainState& state, int attr_index,
                                                int n_poses) {
    const laekit::ToyBackbone& bk = *state.bundle.toy;
    laekit::ParallaxModel parallax{state.config.parallax_scale};
    laekit::LatentCode w = laekit::sample_w(state);
    laekit::LatentCode edited =
        laekit::apply_edit(w, laekit::attribute_edit(state, w, attr_index));
    laekit::MultiplaneImage mpi = bk.generate(edited, state.alpha);
    std::vector<laekit::RenderedImage> out;
    for (const laekit::CameraPose& pose :
         laekit::pose_grid(state.config.yaw_range, state.config.pitch_range, n_poses))
        out.push_back(laekit::composite_mpi(mpi, pose, parallax));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"text-driven latent attribute editing toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string checkpoint_path, attr, out_path, csv_path;
    float yaw = 0.0f, pitch = 0.0f;
    int samples = 64;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path, "config JSON file");
        cmd->add_option("--override", flags.overrides, "config override key=value")
            ->take_all();
        cmd->add_option("--seed", flags.seed, "master seed");
        cmd->add_option("--backbone", flags.backbone, "backbone kind")
            ->check(CLI::IsMember({"toy", "gmpi", "eg3d", "stylenerf", "cips3d"}));
        cmd->add_option("--steps", flags.steps, "training steps");
    };

    CLI::App* init = app.add_subcommand("init", "write a default config file");
    init->add_option("--out", out_path, "output config path")->required();

    CLI::App* train = app.add_subcommand("train", "train style tokens and mappers");
    add_common(train);
    train->add_option("--out", out_path, "output directory (checkpoint + log)");

    CLI::App* edit = app.add_subcommand("edit", "render one attribute edit at one pose");
    add_common(edit);
    edit->add_option("--checkpoint", checkpoint_path, "checkpoint directory")->required();
    edit->add_option("--attr", attr, "attribute name")->required();
    edit->add_option("--yaw", yaw, "yaw in degrees");
    edit->add_option("--pitch", pitch, "pitch in degrees");
    edit->add_option("--out", out_path, "output PNG path")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "render the 9-pose grid per attribute");
    add_common(sweep);
    sweep->add_option("--checkpoint", checkpoint_path, "checkpoint directory")->required();
    sweep->add_option("--attr", attr, "restrict to one attribute");
    sweep->add_option("--out", out_path, "output directory")->required();

    CLI::App* eval = app.add_subcommand("eval", "compute the toy metric report");
    add_common(eval);
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint directory")->required();
    eval->add_option("--samples", samples, "evaluation samples");
    eval->add_option("--out", out_path, "report JSON path");
    eval->add_option("--csv", csv_path, "per-sample CSV path");

    CLI::App* inspect = app.add_subcommand("inspect", "print a checkpoint manifest");
    inspect->add_option("checkpoint", checkpoint_path, "checkpoint directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (init->parsed()) {
            nlohmann::json j = default_config_json();
            for (const std::string& o : flags.overrides) apply_override(j, o);
            std::ofstream f(out_path);
            if (!f) throw ConfigError("cannot write config to " + out_path);
            f << j.dump(2) << "\n";
            log_info("wrote default config to " + out_path);
            return 0;
        }
        if (train->parsed()) {
            laekit::TrainConfig cfg = resolve_config(flags);
            std::filesystem::path out_dir = out_path.empty() ? "run" : out_path;
            std::filesystem::create_directories(out_dir);
            std::ofstream log(out_dir / "train_log.jsonl");
            if (!log) throw std::runtime_error("cannot open training log for writing");
            log_info("training " + std::to_string(cfg.attributes.size()) + " attributes for " +
                     std::to_string(cfg.steps) + " steps");
            laekit::TrainState state =
                laekit::train_attribute_set(cfg, &log, out_dir / "checkpoint");
            log_info("checkpoint written to " + (out_dir / "checkpoint").string());
            log_debug("final step " + std::to_string(state.step));
            return 0;
        }
        if (edit->parsed()) {
            laekit::TrainState state = laekit::load_train_state(checkpoint_path);
            if (flags.seed) state.rng.seed(*flags.seed);
            int idx = find_attribute(state.config, attr);
            laekit::CameraPose pose{yaw, pitch};
            pose.validate();
            laekit::LatentCode w = laekit::sample_w(state);
            laekit::LatentCode edited =
                laekit::apply_edit(w, laekit::attribute_edit(state, w, idx));
            laekit::MultiplaneImage mpi = state.bundle.toy->generate(edited, state.alpha);
            laekit::RenderedImage img = laekit::composite_mpi(
                mpi, pose, laekit::ParallaxModel{state.config.parallax_scale});
            laekit::write_png(out_path, img.pixels);
            log_info("wrote " + out_path);
            return 0;
        }
        if (sweep->parsed()) {
            laekit::TrainState state = laekit::load_train_state(checkpoint_path);
            if (flags.seed) state.rng.seed(*flags.seed);
            std::filesystem::path out_dir = out_path;
            if (!attr.empty()) {
                int idx = find_attribute(state.config, attr);
                laekit::write_pose_sweep(out_dir, render_sweep(state, idx, 9));
            } else {
                for (size_t i = 0; i < state.config.attributes.size(); ++i)
                    laekit::write_pose_sweep(out_dir / state.config.attributes[i].name,
                                             render_sweep(state, static_cast<int>(i), 9));
            }
            log_info("pose sweep written to " + out_dir.string());
            return 0;
        }
        if (eval->parsed()) {
            laekit::TrainState state = laekit::load_train_state(checkpoint_path);
            if (flags.seed) state.rng.seed(*flags.seed);
            std::optional<std::filesystem::path> csv;
            if (!csv_path.empty()) csv = csv_path;
            laekit::MetricReport report = laekit::evaluate(state, samples, csv);
            nlohmann::json j = laekit::report_json(report);
            if (!out_path.empty()) {
                std::ofstream f(out_path);
                if (!f) throw std::runtime_error("cannot write report to " + out_path);
                f << j.dump(2) << "\n";
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (inspect->parsed()) {
            std::cout << laekit::read_manifest(checkpoint_path).dump(2) << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
