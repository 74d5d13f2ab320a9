#include "finequest/backend_config.hpp"
#include "finequest/conformance.hpp"
#include "finequest/contrastive_selector.hpp"
#include "finequest/distortions.hpp"
#include "finequest/errors.hpp"
#include "finequest/eval.hpp"
#include "finequest/matcher.hpp"
#include "finequest/motion_segmenter.hpp"
#include "finequest/router.hpp"
#include "finequest/ssgraph.hpp"
#include "finequest/util.hpp"
#include "finequest/wire.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fq = finequest;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataset = 2, kBackend = 3 };

int exit_code_for(fq::Errc code) {
    switch (code) {
        case fq::Errc::InvalidArgument:
            return kUsage;
        case fq::Errc::BackendUnavailable:
        case fq::Errc::BackendError:
        case fq::Errc::Timeout:
        case fq::Errc::VocabMismatch:
        case fq::Errc::MissingAffirmativeToken:
        case fq::Errc::UnparseableResponse:
            return kBackend;
        default:
            return kDataset;
    }
}

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string backend_config_path;
    std::string mock_fixtures;
};

fq::router::PipelineConfig pipeline_config(const Globals &g) {
    fq::router::PipelineConfig cfg;
    if (!g.config_path.empty()) {
        json doc;
        try {
            doc = json::parse(fq::util::read_file(g.config_path));
        } catch (const json::parse_error &e) {
            throw fq::Error(fq::Errc::ParseError, g.config_path + ": " + e.what());
        }
        cfg = fq::router::pipeline_config_from_json(doc);
    }
    if (g.seed) cfg.seed = *g.seed;
    return cfg;
}

fq::backends::BuiltBackends backends_for(const Globals &g, std::size_t dim, std::uint64_t seed) {
    auto config = g.backend_config_path.empty() ? fq::backends::default_mock_config(dim)
                                                : fq::backends::load_backend_config(g.backend_config_path);
    if (!g.mock_fixtures.empty()) config.mock_fixtures = g.mock_fixtures;
    fq::backends::apply_env_overrides(config);
    return fq::backends::build_backends(config, dim, seed);
}

std::shared_ptr<const fq::ssgraph::SportsGraph> maybe_graph(const std::string &path) {
    if (path.empty()) return nullptr;
    return std::make_shared<const fq::ssgraph::SportsGraph>(fq::ssgraph::load_graph(path));
}

json read_json(const std::string &path) {
    try {
        return json::parse(fq::util::read_file(path));
    } catch (const json::parse_error &e) {
        throw fq::Error(fq::Errc::ParseError, path + ": " + e.what());
    }
}

std::vector<double> read_vector(const std::string &path) {
    const json doc = read_json(path);
    const json &v = doc.is_object() && doc.contains("embedding") ? doc.at("embedding") : doc;
    if (!v.is_array()) throw fq::Error(fq::Errc::ParseError, path + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto &x : v) {
        if (!x.is_number()) throw fq::Error(fq::Errc::ParseError, path + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

bool ends_with(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void print(const json &doc) { std::cout << doc.dump(2) << "\n"; }

int status_for(const fq::Error &e) {
    switch (exit_code_for(e.code())) {
        case kUsage: return 400;
        case kBackend: return 502;
        default: return e.code() == fq::Errc::ParseError ? 400 : 422;
    }
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Training-free sports video question answering engine"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Pipeline config JSON");
    app.add_option("--seed", g.seed, "Seed overriding the config seed");
    app.add_option("--backend-config", g.backend_config_path, "Backend wiring JSON (default: all mocks)");
    app.add_option("--mock-fixtures", g.mock_fixtures, "Scripted tables for mock backends");

    std::function<int()> action;

    // graph
    auto *graph_cmd = app.add_subcommand("graph", "Inspect a knowledge scene graph");
    graph_cmd->require_subcommand(1);
    std::string graph_path;
    auto *graph_validate = graph_cmd->add_subcommand("validate", "Load and validate a graph file");
    graph_validate->add_option("path", graph_path)->required();
    graph_validate->callback([&] {
        action = [&] {
            const auto graph = fq::ssgraph::load_graph(graph_path);
            std::cout << "ok: " << graph.element_count() << " elements, embedding_dim " << graph.embedding_dim << "\n";
            return kOk;
        };
    });
    auto *graph_stats = graph_cmd->add_subcommand("stats", "Print node and relation counts");
    graph_stats->add_option("path", graph_path)->required();
    graph_stats->callback([&] {
        action = [&] {
            const auto graph = fq::ssgraph::load_graph(graph_path);
            const auto s = fq::ssgraph::compute_stats(graph);
            print({{"format_version", graph.format_version},
                   {"embedding_dim", graph.embedding_dim},
                   {"sports", s.sports},
                   {"events", s.events},
                   {"sets", s.sets},
                   {"elements", s.elements},
                   {"scene_frames", s.scene_frames},
                   {"triplets", s.triplets},
                   {"coref_edges", s.coref_edges},
                   {"relation_sentences", s.relation_sentences}});
            return kOk;
        };
    });

    // segment
    auto *segment_cmd = app.add_subcommand("segment", "Propose sub-action segments for a video or motion signal");
    std::string segment_input;
    std::optional<std::size_t> win_size;
    std::optional<double> z_min;
    std::optional<double> z_max;
    std::optional<std::size_t> clip_min;
    std::optional<std::size_t> clip_max;
    std::optional<std::string> estimator;
    segment_cmd->add_option("input", segment_input, "Video reference or motion-signal .json")->required();
    segment_cmd->add_option("--win-size", win_size);
    segment_cmd->add_option("--z-min", z_min);
    segment_cmd->add_option("--z-max", z_max);
    segment_cmd->add_option("--clip-min", clip_min);
    segment_cmd->add_option("--clip-max", clip_max);
    segment_cmd->add_option("--estimator", estimator, "frame_diff or backend_flow");
    segment_cmd->callback([&] {
        action = [&] {
            auto cfg = pipeline_config(g);
            if (win_size) cfg.segmenter.win_size = *win_size;
            if (z_min) cfg.segmenter.z_min = *z_min;
            if (z_max) cfg.segmenter.z_max = *z_max;
            if (clip_min) cfg.segmenter.clip_len_min = *clip_min;
            if (clip_max) cfg.segmenter.clip_len_max = *clip_max;
            if (estimator) cfg.estimator = fq::segmenter::parse_estimator(*estimator);
            cfg.segmenter.validate();
            std::vector<fq::segmenter::SegmentProposal> proposals;
            if (ends_with(segment_input, ".json")) {
                proposals = fq::segmenter::segment(fq::segmenter::motion_signal_from_json(read_json(segment_input)), cfg.segmenter);
            } else {
                const auto video = fq::load_video(segment_input);
                std::shared_ptr<const fq::backends::FlowEstimator> flow;
                if (cfg.estimator == fq::segmenter::MotionEstimator::BackendFlow) {
                    flow = backends_for(g, 8, cfg.seed).set.flow;
                }
                proposals = fq::segmenter::segment_video(video, cfg.segmenter, cfg.estimator, flow.get());
            }
            print(fq::segmenter::to_json(proposals));
            return kOk;
        };
    });

    // distort
    auto *distort_cmd = app.add_subcommand("distort", "Write a distorted copy of a clip");
    std::string distort_input;
    std::string distort_out;
    std::string kind = "spatial";
    double sigma = 0.1;
    double strength = 0.5;
    std::uint64_t distort_seed = 0;
    std::optional<std::string> variant;
    distort_cmd->add_option("clip", distort_input, "Video reference")->required();
    distort_cmd->add_option("--kind", kind, "spatial, temporal or spatiotemporal");
    distort_cmd->add_option("--sigma", sigma);
    distort_cmd->add_option("--strength", strength);
    distort_cmd->add_option("--seed", distort_seed);
    distort_cmd->add_option("--variant", variant, "Ablation variant, e.g. blur or reverse");
    distort_cmd->add_option("--out", distort_out, "Output .fqclip path");
    distort_cmd->callback([&] {
        action = [&] {
            const auto clip = fq::load_video(distort_input);
            fq::distortions::DistortionSpec spec{fq::distortions::parse_kind(kind), sigma, strength, distort_seed};
            if (variant) {
                if (spec.kind == fq::distortions::DistortionKind::Spatial) {
                    spec.spatial_variant = fq::distortions::parse_spatial_variant(*variant);
                } else {
                    spec.temporal_variant = fq::distortions::parse_temporal_variant(*variant);
                }
            }
            spec.validate();
            const auto out = fq::distortions::distort(clip, spec);
            json summary = {{"kind", fq::distortions::to_string(spec.kind)},
                            {"frames", out.frame_count()},
                            {"content_hash", out.content_hash()}};
            if (spec.kind != fq::distortions::DistortionKind::Spatial &&
                spec.temporal_variant == fq::distortions::TemporalVariant::TemporalWarp) {
                const auto seed = spec.kind == fq::distortions::DistortionKind::Temporal
                                      ? spec.seed
                                      : fq::distortions::warp_subseed(spec.seed);
                summary["index_map"] = fq::distortions::temporal_warp_map(clip.frame_count(), strength, seed);
            }
            if (!distort_out.empty()) {
                fq::save_clip_file(out, distort_out);
                summary["written"] = distort_out;
            }
            print(summary);
            return kOk;
        };
    });

    // select
    auto *select_cmd = app.add_subcommand("select", "Score clips against a question and pick key clips");
    std::string manifest_path;
    std::string select_question;
    std::optional<std::size_t> n1;
    std::optional<double> alpha_s;
    std::optional<double> alpha_t;
    std::optional<double> alpha_st;
    select_cmd->add_option("manifest", manifest_path,
                           "JSON {video, proposals?:[{start_frame,end_frame}]} or {clips:[refs]}")
        ->required();
    select_cmd->add_option("--question", select_question)->required();
    select_cmd->add_option("--n1", n1);
    select_cmd->add_option("--alpha-s", alpha_s);
    select_cmd->add_option("--alpha-t", alpha_t);
    select_cmd->add_option("--alpha-st", alpha_st);
    select_cmd->callback([&] {
        action = [&] {
            auto cfg = pipeline_config(g);
            if (alpha_s) cfg.weights.alpha_s = *alpha_s;
            if (alpha_t) cfg.weights.alpha_t = *alpha_t;
            if (alpha_st) cfg.weights.alpha_st = *alpha_st;
            cfg.weights.validate();
            const json manifest = read_json(manifest_path);
            std::vector<fq::ClipTensor> clips;
            std::vector<fq::FrameInterval> intervals;
            double duration = 0.0;
            try {
                if (manifest.contains("clips")) {
                    for (const auto &ref : manifest.at("clips")) {
                        clips.push_back(fq::load_video(ref.get<std::string>()));
                        duration += clips.back().duration_seconds();
                    }
                } else {
                    const auto video = fq::load_video(manifest.at("video").get<std::string>());
                    duration = video.duration_seconds();
                    if (manifest.contains("proposals")) {
                        for (const auto &p : manifest.at("proposals")) {
                            intervals.push_back({p.at("start_frame").get<std::size_t>(), p.at("end_frame").get<std::size_t>()});
                        }
                    } else {
                        intervals = fq::segmenter::segment_video(video, cfg.segmenter, cfg.estimator);
                    }
                    for (const auto &iv : intervals) clips.push_back(video.slice(iv));
                }
            } catch (const json::exception &e) {
                throw fq::Error(fq::Errc::ParseError, manifest_path + ": " + e.what());
            }
            const std::size_t count = n1 ? *n1 : (cfg.n1 > 0 ? cfg.n1 : fq::selector::bucketed_n(duration));
            const auto built = backends_for(g, 8, cfg.seed);
            auto specs = fq::distortions::default_distortion_set(cfg.seed, cfg.noise_sigma, cfg.warp_strength);
            const auto sel = fq::selector::select_key_clips(clips, select_question, cfg.weights, specs,
                                                            built.set.require_scorer(), count, cfg.workers);
            json scores = json::array();
            for (const auto &s : sel.scores) scores.push_back({{"clip", s.clip_index}, {"score", s.score}});
            json runs = json::array();
            for (const auto &r : sel.runs) {
                json run = {{"first_clip", r.first_clip}, {"end_clip", r.end_clip}};
                if (!intervals.empty()) {
                    run["start_frame"] = intervals[r.first_clip].start;
                    run["end_frame"] = intervals[r.end_clip - 1].end;
                }
                runs.push_back(run);
            }
            print({{"n1", count}, {"scores", scores}, {"selected", sel.selected}, {"runs", runs}});
            return kOk;
        };
    });

    // match
    auto *match_cmd = app.add_subcommand("match", "Match clip and caption embeddings against a graph");
    std::string match_graph;
    std::string caption_emb;
    std::string clip_emb;
    std::string caption_text;
    std::optional<std::size_t> n2;
    std::optional<std::size_t> top_k;
    std::optional<std::string> sport;
    bool with_prompt = false;
    match_cmd->add_option("graph", match_graph)->required();
    match_cmd->add_option("--caption-emb", caption_emb, "JSON array file")->required();
    match_cmd->add_option("--clip-emb", clip_emb, "JSON array file")->required();
    match_cmd->add_option("--caption-text", caption_text);
    match_cmd->add_option("--n2", n2);
    match_cmd->add_option("--top-k", top_k);
    match_cmd->add_option("--sport", sport);
    match_cmd->add_flag("--prompt", with_prompt, "Also print the enriched reasoning prompt");
    match_cmd->callback([&] {
        action = [&] {
            auto cfg = pipeline_config(g);
            if (top_k) cfg.match.top_k = *top_k;
            if (sport) cfg.match.sport = fq::ssgraph::parse_sport_code(*sport);
            const auto graph = fq::ssgraph::load_graph(match_graph);
            const fq::matcher::EmbeddedClip item{{}, read_vector(clip_emb), caption_text, read_vector(caption_emb)};
            const std::size_t count = n2 ? *n2 : (cfg.n2 > 0 ? cfg.n2 : 10);
            const auto results = fq::matcher::match(item, graph, count, cfg.match);
            json out = {{"matches", fq::matcher::to_json(results)}};
            if (with_prompt) out["prompt"] = fq::matcher::enrich_prompt(cfg.reasoning_prompt, results);
            print(out);
            return kOk;
        };
    });

    // answer
    auto *answer_cmd = app.add_subcommand("answer", "Answer one question about a video");
    std::string answer_video;
    std::string question;
    std::vector<std::string> options;
    std::string answer_graph;
    std::optional<std::string> force_mode;
    answer_cmd->add_option("video", answer_video)->required();
    answer_cmd->add_option("--question", question)->required();
    answer_cmd->add_option("--option", options, "Answer option (repeat four times)");
    answer_cmd->add_option("--graph", answer_graph);
    answer_cmd->add_option("--force-mode", force_mode, "reactive or deliberative");
    answer_cmd->callback([&] {
        action = [&] {
            auto cfg = pipeline_config(g);
            if (force_mode) cfg.force_mode = fq::router::parse_force_mode(*force_mode);
            const auto graph = maybe_graph(answer_graph);
            const auto built = backends_for(g, graph ? graph->embedding_dim : 8, cfg.seed);
            const fq::router::Engine engine(cfg, built.set, graph);
            print(fq::router::to_json(engine.answer(answer_video, question, options)));
            return kOk;
        };
    });

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "Score a multiple-choice dataset");
    std::string dataset;
    std::string eval_graph;
    std::size_t workers = 1;
    std::string report_json;
    std::string report_text;
    eval_cmd->add_option("dataset", dataset, "JSON Lines file")->required();
    eval_cmd->add_option("--graph", eval_graph);
    eval_cmd->add_option("--workers", workers);
    eval_cmd->add_option("--report-json", report_json);
    eval_cmd->add_option("--report-text", report_text);
    eval_cmd->callback([&] {
        action = [&] {
            const auto cfg = pipeline_config(g);
            const auto items = fq::eval::load_dataset(dataset);
            const auto graph = maybe_graph(eval_graph);
            const auto built = backends_for(g, graph ? graph->embedding_dim : 8, cfg.seed);
            const fq::router::Engine engine(cfg, built.set, graph);
            const auto report = fq::eval::evaluate(items, engine, workers);
            const std::string text = fq::eval::to_text(report);
            if (!report_json.empty()) fq::util::write_file(report_json, fq::eval::to_json(report).dump(2) + "\n");
            if (!report_text.empty()) fq::util::write_file(report_text, text);
            std::cout << text;
            return kOk;
        };
    });

    // serve
    auto *serve_cmd = app.add_subcommand("serve", "Serve POST /answer over HTTP");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string serve_graph;
    bool expose_backends = false;
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);
    serve_cmd->add_option("--graph", serve_graph);
    serve_cmd->add_flag("--expose-backends", expose_backends, "Also serve the backend wire protocol");
    serve_cmd->callback([&] {
        action = [&] {
            const auto cfg = pipeline_config(g);
            const auto graph = maybe_graph(serve_graph);
            const auto built = backends_for(g, graph ? graph->embedding_dim : 8, cfg.seed);
            const auto engine = std::make_shared<const fq::router::Engine>(cfg, built.set, graph);
            httplib::Server server;
            if (expose_backends) {
                fq::wire::mount_backend_routes(server, built.set);
            } else {
                server.Get("/health", [&built](const httplib::Request &, httplib::Response &res) {
                    res.set_content(fq::wire::health_document(built.set).dump(), "application/json");
                });
            }
            server.Post("/answer", [engine](const httplib::Request &req, httplib::Response &res) {
                json reply;
                try {
                    const json body = json::parse(req.body);
                    const auto opts = body.value("options", std::vector<std::string>{});
                    reply = fq::router::to_json(engine->answer(body.at("video_ref").get<std::string>(),
                                                               body.at("question").get<std::string>(), opts));
                } catch (const json::exception &e) {
                    res.status = 400;
                    reply = {{"error", std::string("bad request: ") + e.what()}};
                } catch (const fq::router::StageError &e) {
                    res.status = status_for(e);
                    json trace = json::array();
                    for (const auto &r : e.trace()) trace.push_back({{"stage", r.stage}, {"detail", r.detail}});
                    reply = {{"error", e.what()}, {"code", fq::to_string(e.code())}, {"stage", e.stage()}, {"trace", trace}};
                } catch (const fq::Error &e) {
                    res.status = status_for(e);
                    reply = {{"error", e.what()}, {"code", fq::to_string(e.code())}};
                }
                res.set_content(reply.dump(), "application/json");
            });
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!server.listen(host, port)) throw fq::Error(fq::Errc::IoError, "cannot listen on " + host + ":" + std::to_string(port));
            return kOk;
        };
    });

    // conformance
    auto *conf_cmd = app.add_subcommand("conformance", "Run the wire conformance vectors");
    std::string vectors_path;
    std::string endpoint;
    std::string record_path;
    int timeout_ms = 30000;
    conf_cmd->add_option("vectors", vectors_path)->required();
    conf_cmd->add_option("--endpoint", endpoint, "Adapter URL (default: in-process mocks)");
    conf_cmd->add_option("--timeout-ms", timeout_ms);
    conf_cmd->add_option("--record", record_path, "Write request/response exchanges as JSON");
    conf_cmd->callback([&] {
        action = [&] {
            const json vectors = read_json(vectors_path);
            httplib::Server server;
            std::thread thread;
            std::string url = endpoint;
            std::optional<fq::backends::BuiltBackends> built;
            if (url.empty()) {
                built = backends_for(g, 8, g.seed.value_or(0));
                fq::wire::mount_backend_routes(server, built->set);
                const int bound = server.bind_to_any_port("127.0.0.1");
                if (bound <= 0) throw fq::Error(fq::Errc::IoError, "cannot bind a local port");
                thread = std::thread([&server] { server.listen_after_bind(); });
                server.wait_until_ready();
                url = "http://127.0.0.1:" + std::to_string(bound);
            }
            std::vector<fq::conformance::VectorResult> results;
            try {
                results = fq::conformance::run(vectors, fq::conformance::http_transport({url, timeout_ms}));
            } catch (...) {
                if (thread.joinable()) {
                    server.stop();
                    thread.join();
                }
                throw;
            }
            if (thread.joinable()) {
                server.stop();
                thread.join();
            }
            bool ok = true;
            json exchanges = json::array();
            for (const auto &r : results) {
                const char *tag = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
                std::cout << tag << " " << r.name;
                if (!r.message.empty()) std::cout << ": " << r.message;
                std::cout << "\n";
                ok = ok && r.passed;
                if (!r.skipped) {
                    exchanges.push_back({{"name", r.name}, {"path", r.path}, {"status", r.status},
                                         {"request", r.request}, {"response", r.response}});
                }
            }
            if (!record_path.empty()) fq::util::write_file(record_path, exchanges.dump(2) + "\n");
            return ok ? kOk : kBackend;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kUsage;
    }

    try {
        return action ? action() : kUsage;
    } catch (const fq::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataset;
    }
}
