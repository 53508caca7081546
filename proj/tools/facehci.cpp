// facehci command-line front end: batch runs, the live service and the
// synthetic fixture generator.

#include "facehci/config.hpp"
#include "facehci/fixtures.hpp"
#include "facehci/overlay.hpp"
#include "facehci/pipeline.hpp"
#include "facehci/server.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace facehci;

namespace {

PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return PipelineConfig{};
    return parse_config(read_file(path));
}

std::string frame_name(int index, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.%s", index, ext);
    return buf;
}

nlohmann::json truth_json(const fixtures::FaceTruth& t) {
    return {{"bte", point_json(t.bte)},       {"left_eye", point_json(t.left_eye)},
            {"right_eye", point_json(t.right_eye)}, {"nose_tip", point_json(t.nose_tip)},
            {"nostril_y", t.nostril_y},        {"scale", t.scale}};
}

const char* kind_name(fixtures::ScriptedKind k) {
    switch (k) {
        case fixtures::ScriptedKind::Involuntary: return "involuntary";
        case fixtures::ScriptedKind::VoluntaryLeft: return "voluntary-left";
        case fixtures::ScriptedKind::VoluntaryRight: return "voluntary-right";
        case fixtures::ScriptedKind::WhileMoving: return "while-moving";
    }
    return "?";
}

void write_session(const fs::path& dir, const fixtures::Script& script, std::uint64_t seed) {
    fs::create_directories(dir);
    const auto s = fixtures::render_session(script, seed);
    nlohmann::json truth = nlohmann::json::array();
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
        write_pgm(dir / frame_name(static_cast<int>(i), "pgm"), s.frames[i]);
        truth.push_back(truth_json(s.truth[i]));
    }
    nlohmann::json blinks = nlohmann::json::array();
    for (const auto& b : s.blinks)
        blinks.push_back({{"kind", kind_name(b.kind)}, {"first_closed_frame", b.first_closed_frame}, {"closed_frames", b.closed_frames}});
    write_file(dir / "script.json", nlohmann::json{{"seed", seed}, {"blinks", blinks}, {"truth", truth}}.dump(1) + "\n");
}

int cmd_run(const std::string& frames, const std::string& config, const std::string& overlay, const std::string& log,
            bool fixed_clock) {
    const PipelineConfig cfg = load_config(config);
    Session session(cfg, fixed_clock ? fixed_step_clock(1.0 / cfg.frame_rate) : steady_clock_seconds());

    std::ofstream log_file;
    std::ostream* out = &std::cout;
    if (!log.empty()) {
        log_file.open(log, std::ios::binary);
        if (!log_file) throw Error(Errc::Io, "cannot write " + log);
        out = &log_file;
    }
    if (!overlay.empty()) fs::create_directories(overlay);

    const auto summary = run_pipeline(
        frames, session, [&](const EventRecord& e) { *out << e.to_line() << '\n'; },
        overlay.empty() ? FrameSink{}
                        : FrameSink([&](const GrayImage& img, const FrameResult& r) {
                              write_png(fs::path(overlay) / frame_name(r.frame, "png"), render_overlay(img, r.debug));
                          }));
    out->flush();
    std::cerr << "frames " << summary.frames << ", skipped " << summary.skipped << ", events " << summary.events
              << ", clicks " << summary.clicks;
    if (summary.fps) std::cerr << ", fps " << *summary.fps;
    std::cerr << "\n";
    return 0;
}

int cmd_serve(const std::string& bind, const std::string& config) {
    const auto [host, port] = parse_bind(bind);
    Server server(load_config(config));
    const unsigned short bound = server.listen(host, port);
    std::cerr << "listening on ws://" << host << ":" << bound << "\n";
    server.stop_on_signals();
    server.run();
    return 0;
}

int cmd_gen_fixtures(const std::string& out_dir, std::uint64_t seed) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    for (double scale : {1.0, 2.0, 3.0}) {
        const fs::path dir = out / "faces" / ("scale" + std::to_string(static_cast<int>(scale)));
        fs::create_directories(dir);
        nlohmann::json truth = nlohmann::json::object();
        for (int i = 0; i < 30; ++i) {
            const auto r = fixtures::render_face(scale, seed * 1000 + static_cast<std::uint64_t>(scale * 100) + i);
            const std::string name = frame_name(i, "pgm");
            write_pgm(dir / name, r.image);
            truth[name] = truth_json(r.truth);
        }
        write_file(dir / "truth.json", truth.dump(1) + "\n");
    }
    write_session(out / "session_short", fixtures::short_script(), seed);
    write_session(out / "session_blink", fixtures::blink_script(), seed);
    write_file(out / "bte_template.ssrt", encode_template(builtin_bte_template()));
    write_file(out / "config.json", dump_config(PipelineConfig{}));
    std::cerr << "fixtures written to " << out.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Facial-feature pointer and blink-click engine"};
    app.require_subcommand(1);

    std::string frames, config, overlay, log, bind, out;
    bool fixed_clock = false;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "Process a directory of frames and write the event log");
    run->add_option("--frames", frames, "Directory of PGM/PNG frames (lexicographic order)")->required();
    run->add_option("--config", config, "JSON configuration file");
    run->add_option("--overlay", overlay, "Directory for annotated PNG frames");
    run->add_option("--log", log, "Event log path (default: stdout)");
    run->add_flag("--fixed-clock", fixed_clock, "Time frames at the configured frame rate instead of wall time");

    auto* serve = app.add_subcommand("serve", "Run the live WebSocket session service");
    serve->add_option("--bind", bind, "host:port to listen on")->default_val("127.0.0.1:8765");
    serve->add_option("--config", config, "JSON configuration file");

    auto* gen = app.add_subcommand("gen-fixtures", "Write synthetic faces, sessions, a template and a config");
    gen->add_option("--out", out, "Output directory")->required();
    gen->add_option("--seed", seed, "Random seed")->default_val(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(frames, config, overlay, log, fixed_clock);
        if (*serve) return cmd_serve(bind, config);
        if (*gen) return cmd_gen_fixtures(out, seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
