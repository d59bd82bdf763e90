// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

// mvoc command line: gen-data, invert, compose, eval.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvoc/error.hpp"
#include "mvoc/metrics.hpp"
#include "mvoc/pipeline.hpp"
#include "mvoc/synthdata.hpp"
#include "mvoc/vten.hpp"

namespace fs = std::filesystem;
using namespace mvoc;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
}

int gen_data(const std::optional<fs::path>& spec, bool demo, std::uint64_t seed, const fs::path& out) {
    if (demo) {
        write_demo_job(out, seed);
        std::cout << "demo job written to " << (out / "job.json").string() << '\n';
        return 0;
    }
    if (!spec) {
        throw Error(ErrorKind::Config, "gen-data needs --spec or --demo");
    }
    write_scene(out, load_scene(*spec));
    std::cout << "scene written to " << out.string() << '\n';
    return 0;
}

int invert(const fs::path& video_path, const fs::path& config, const fs::path& out) {
    const RunConfig cfg = load_run_config(config);
    const VideoTensor video = load_video(video_path);
    const LatentCache cache = invert_video(video, cfg);
    fs::create_directories(out);
    cache.save(out, 0);
    save_video(out / "x_T.vten", cache.noisiest());
    std::cout << cache.size() << " latents written to " << out.string() << '\n';
    return 0;
}

int compose(const fs::path& job_path, const fs::path& out, bool explain) {
    const CompositionJob job = load_job(job_path);
    const CompositionResult r = run_job(job, out);
    for (const auto& [g, e] : r.warping) {
        std::printf("warping error G=%zu: %.6g\n", g, e);
    }
    for (std::size_t i = 0; i < r.object_psnr.size(); ++i) {
        const auto& p = r.object_psnr[i];
        const auto& c = r.cut_paste_psnr[i];
        std::printf("object %zu PSNR: %s (cut-paste %s)\n", i + 1, p ? std::to_string(*p).c_str() : "n/a",
                    c ? std::to_string(*c).c_str() : "n/a");
    }
    if (explain) {
        std::printf("step    t  F_n F_r A_t A_s  terms\n");
        for (const auto& s : r.injection) {
            std::string terms;
            for (std::size_t i : s.terms) {
                terms += (terms.empty() ? "" : ",") + std::to_string(i);
            }
            std::printf("%4d %4d  %3d %3d %3d %3d  %s\n", s.step, s.t, s.active.feature_in ? 1 : 0,
                        s.active.residual ? 1 : 0, s.active.temporal ? 1 : 0, s.active.spatial ? 1 : 0,
                        terms.c_str());
        }
    }
    return 0;
}

int eval(const fs::path& video_path, const std::optional<fs::path>& flow_dir, std::size_t interval, bool estimate,
         const fs::path& out) {
    const VideoTensor video = load_video(video_path);
    WarpMetricConfig cfg;
    cfg.interval = interval;
    cfg.validate(video.shape().frames);
    SequenceWarpResult r;
    if (estimate) {
        cfg.source = FlowSource::Estimate;
        const EstimatedFlow est = estimate_flow(video, cfg);
        r = sequence_warping_error(video, est.flow, est.valid, cfg);
    } else {
        if (!flow_dir) {
            throw Error(ErrorKind::Config, "eval needs --flow or --estimate");
        }
        const std::string g = std::to_string(interval);
        const FlowField flow = load_flow(*flow_dir / ("flow_g" + g + ".vten"), interval);
        const fs::path vp = *flow_dir / ("valid_g" + g + ".vten");
        const auto& s = video.shape();
        const Mask valid = fs::exists(vp) ? load_mask(vp) : Mask({s.frames - interval, s.height, s.width}, 1.0);
        r = sequence_warping_error(video, flow, valid, cfg);
    }
    write_file(out, warp_report_csv(r));
    std::printf("mean warping error G=%zu: %.6g\n", interval, r.mean);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mvoc: layered video object composition with diffusion guidance"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "render a synthetic scene (or the two-object demo job)");
    std::optional<fs::path> spec;
    fs::path gen_out;
    bool demo = false;
    std::uint64_t seed = 0;
    gen->add_option("--spec", spec, "scene JSON")->check(CLI::ExistingFile);
    gen->add_flag("--demo", demo, "write the self-contained two-object demo job instead");
    gen->add_option("--seed", seed, "demo seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    auto* inv = app.add_subcommand("invert", "DDIM-invert one video");
    fs::path inv_video, inv_config, inv_out;
    inv->add_option("--video", inv_video, "input .vten")->required()->check(CLI::ExistingFile);
    inv->add_option("--config", inv_config, "run JSON")->required()->check(CLI::ExistingFile);
    inv->add_option("--out", inv_out, "output directory")->required();

    auto* comp = app.add_subcommand("compose", "run a composition job");
    fs::path job, comp_out;
    bool explain = false;
    comp->add_option("--job", job, "job JSON")->required()->check(CLI::ExistingFile);
    comp->add_option("--out", comp_out, "output directory")->required();
    comp->add_flag("--explain", explain, "print which injection categories fired at each step");

    auto* ev = app.add_subcommand("eval", "warping error of a video");
    fs::path ev_video, ev_out;
    std::optional<fs::path> flow_dir;
    std::size_t interval = 2;
    bool estimate = false;
    ev->add_option("--video", ev_video, "input .vten")->required()->check(CLI::ExistingFile);
    ev->add_option("--flow", flow_dir, "directory with flow_g<G>.vten and optional valid_g<G>.vten")
        ->check(CLI::ExistingDirectory);
    ev->add_flag("--estimate", estimate, "estimate flow and occlusion by block matching instead");
    ev->add_option("--interval", interval, "frame interval G")->check(CLI::IsMember({2, 4}));
    ev->add_option("--out", ev_out, "report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return gen_data(spec, demo, seed, gen_out);
        if (inv->parsed()) return invert(inv_video, inv_config, inv_out);
        if (comp->parsed()) return compose(job, comp_out, explain);
        return eval(ev_video, flow_dir, interval, estimate, ev_out);
    } catch (const Error& e) {
        std::cerr << "mvoc: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "mvoc: " << e.what() << '\n';
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "mvoc: config: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mvoc: " << e.what() << '\n';
        return 4;
    }
}
