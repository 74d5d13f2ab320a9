// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.
#include "finequest/contrastive_selector.hpp"
#include "finequest/distortions.hpp"
#include "finequest/eval.hpp"
#include "finequest/matcher.hpp"
#include "finequest/mock_backends.hpp"
#include "finequest/motion_segmenter.hpp"
#include "finequest/router.hpp"
#include "finequest/ssgraph.hpp"
#include "test_support.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace finequest;

namespace {

using Outcome = std::optional<std::string>;  // nullopt on success, otherwise the reason

backends::LogitVector lv(std::vector<double> v) { return {"acceptance-vocab", std::move(v)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> oracle_softmax(const std::vector<double> &x) {
    double m = x[0];
    for (double v : x) m = std::max(m, v);
    std::vector<double> out(x.size());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) z += out[i] = std::exp(x[i] - m);
    for (auto &v : out) v /= z;
    return out;
}

Outcome contrastive_arithmetic() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> orig{2, 0}, spa{1, 0}, tem{0, 1}, st{.5, .5};
    const auto got = selector::contrastive_logits(lv(orig), lv(spa), lv(tem), lv(st), {0.5, 0.3, 0.2});
    const std::vector<double> want{3.4, -0.4};
    for (std::size_t i = 0; i < 2; ++i) {
        if (std::fabs(got.values[i] - want[i]) > 1e-12) return "logit " + std::to_string(i) + " = " + std::to_string(got.values[i]);
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> o(5), a(5), b(5), c(5);
        for (std::size_t i = 0; i < 5; ++i) o[i] = u(rng), a[i] = u(rng), b[i] = u(rng), c[i] = u(rng);
        const auto p = selector::contrastive_distribution(lv(o), lv(a), lv(b), lv(c), {0.0, 0.0, 0.0});
        const auto q = oracle_softmax(o);
        for (std::size_t i = 0; i < 5; ++i) {
            if (std::fabs(p[i] - q[i]) > 1e-12) return "alpha=0 differs from softmax at trial " + std::to_string(trial);
        }
    }
    const double t = seconds_since(t0);
    if (t >= 1.0) return "took " + std::to_string(t) + " s";
    return std::nullopt;
}

Outcome distribution_validity() {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> len(2, 64);
    std::uniform_real_distribution<double> logit(-10.0, 10.0);
    std::uniform_real_distribution<double> weight(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = len(rng);
        std::vector<double> o(n), a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) o[i] = logit(rng), a[i] = logit(rng), b[i] = logit(rng), c[i] = logit(rng);
        const selector::ContrastiveWeights w{weight(rng), weight(rng), weight(rng)};
        const auto p = selector::contrastive_distribution(lv(o), lv(a), lv(b), lv(c), w);
        double sum = 0.0;
        for (double v : p) {
            if (!(v > 0.0)) return "non-positive entry at trial " + std::to_string(trial);
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-9) return "sum " + std::to_string(sum) + " at trial " + std::to_string(trial);
    }
    return std::nullopt;
}

struct RandomSegCase {
    std::vector<double> signal;
    segmenter::SegmenterConfig cfg;
};

RandomSegCase random_seg_case(std::mt19937_64 &rng) {
    std::uniform_int_distribution<std::size_t> len(50, 500);
    std::uniform_int_distribution<std::size_t> win(3, 40);
    std::uniform_real_distribution<double> zmin(0.0, 1.0);
    std::uniform_real_distribution<double> zspan(0.0, 2.0);
    std::uniform_int_distribution<std::size_t> lmin(1, 12);
    std::uniform_int_distribution<std::size_t> lspan(0, 30);
    RandomSegCase c;
    c.signal = fqtest::random_signal(rng, len(rng));
    c.cfg.win_size = win(rng);
    c.cfg.z_min = zmin(rng);
    c.cfg.z_max = c.cfg.z_min + zspan(rng);
    c.cfg.clip_len_min = lmin(rng);
    c.cfg.clip_len_max = c.cfg.clip_len_min + lspan(rng);
    return c;
}

std::vector<std::size_t> reference_boundaries(const RandomSegCase &c) {
    const fqtest::ReferenceSegmenter ref{c.cfg.win_size, c.cfg.z_min, c.cfg.z_max, static_cast<double>(c.cfg.clip_len_min),
                                         static_cast<double>(c.cfg.clip_len_max)};
    return ref.boundaries(c.signal);
}

Outcome segmenter_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto c = random_seg_case(rng);
        const auto want = reference_boundaries(c);
        const auto proposals = segmenter::segment({c.signal, 25.0}, c.cfg);
        std::vector<std::size_t> got;
        for (std::size_t i = 1; i < proposals.size(); ++i) got.push_back(proposals[i].start);
        if (got != want) {
            return "trial " + std::to_string(trial) + ": " + std::to_string(got.size()) + " boundaries vs " +
                   std::to_string(want.size()) + " in the reference";
        }
    }
    const double t = seconds_since(t0);
    if (t >= 10.0) return "took " + std::to_string(t) + " s";
    return std::nullopt;
}

Outcome segmenter_invariants() {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_seg_case(rng);
        const auto p = segmenter::segment({c.signal, 25.0}, c.cfg);
        const std::size_t frames = c.signal.size() + 1;
        if (p.empty() || p.front().start != 0 || p.back().end != frames) return "span not covered, trial " + std::to_string(trial);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i].length() == 0) return "empty proposal, trial " + std::to_string(trial);
            if (i > 0 && p[i].start != p[i - 1].end) return "gap or overlap, trial " + std::to_string(trial);
            if (i + 1 < p.size() && p[i].length() < c.cfg.clip_len_min) {
                return "proposal shorter than clip_len_min, trial " + std::to_string(trial);
            }
        }
    }
    for (double level : {0.0, 0.3, 1.0, 250.0}) {
        for (std::size_t len : {50, 137, 500}) {
            const std::vector<double> flat(len, level);
            const auto p = segmenter::segment({flat, 25.0}, {8, 0.5, 2.0, 4, 16});
            if (p.size() != 1 || p[0] != FrameInterval{0, len + 1}) {
                return "constant " + std::to_string(level) + " of length " + std::to_string(len) + " split";
            }
        }
    }
    return std::nullopt;
}

Outcome warp_monotone_and_identities() {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> len(2, 300);
    std::uniform_real_distribution<double> strength(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto map = distortions::temporal_warp_map(len(rng), strength(rng), seed);
        for (std::size_t j = 1; j < map.size(); ++j) {
            if (map[j] < map[j - 1]) return "decreasing map at seed " + std::to_string(seed);
        }
    }
    for (std::uint64_t seed : {0ULL, 7ULL, 123456789ULL}) {
        const auto clip = make_synthetic_clip({"noise", 24, 5, 7, 3, 25.0, 20, 10, seed});
        distortions::DistortionSpec warp;
        warp.kind = distortions::DistortionKind::Temporal;
        warp.warp_strength = 0.0;
        warp.seed = seed;
        if (encode_clip(distortions::distort(clip, warp)) != encode_clip(clip)) return "zero-strength warp changed bytes";
        distortions::DistortionSpec noise;
        noise.kind = distortions::DistortionKind::Spatial;
        noise.noise_sigma = 0.0;
        noise.seed = seed;
        if (encode_clip(distortions::distort(clip, noise)) != encode_clip(clip)) return "zero-sigma noise changed bytes";
    }
    return std::nullopt;
}

matcher::EmbeddedClip random_item(std::mt19937_64 &rng, std::size_t dim) {
    matcher::EmbeddedClip item;
    item.clip_ref = {0, 10};
    item.embedding = fqtest::random_unit_free_vector(rng, dim);
    item.caption_text = "caption";
    item.caption_embedding = fqtest::random_unit_free_vector(rng, dim);
    return item;
}

Outcome matcher_oracle() {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> kpick(1, 6);
    std::uniform_int_distribution<std::size_t> npick(1, 10);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = fqtest::random_graph(rng, 20, 8);
        const auto item = random_item(rng, 8);
        const std::size_t k = kpick(rng);
        const std::size_t n2 = npick(rng);
        matcher::MatchOptions opts;
        opts.top_k = k;
        const auto got = matcher::match(item, g, n2, opts);
        const auto want = fqtest::brute_force_match(item.embedding, item.caption_embedding, g, k, n2);
        if (got.size() != want.size()) return "length differs at trial " + std::to_string(trial);
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i].node_id != want[i].node_id) return "order differs at trial " + std::to_string(trial);
            if (std::fabs(got[i].combined - want[i].combined) > 1e-12) return "score differs at trial " + std::to_string(trial);
        }
        for (const auto *e : g.elements()) {
            if (e->relation_sentences.empty()) continue;
            ssgraph::ElementNode swapped = *e;
            for (auto &r : swapped.relation_sentences) std::swap(r.positive_embedding, r.negative_embedding);
            const double a = matcher::relational_score(item, *e);
            const double b = matcher::relational_score(item, swapped);
            if (std::fabs(a + b) > 1e-12) return "v2r not antisymmetric for " + e->node_id;
        }
    }
    return std::nullopt;
}

void scale_all(ssgraph::SportsGraph &g, matcher::EmbeddedClip &item, double c) {
    auto scale = [c](std::vector<double> &v) {
        for (auto &x : v) x *= c;
    };
    for (auto &s : g.sports) {
        for (auto &ev : s.events) {
            for (auto &set : ev.sets) {
                for (auto &e : set.elements) {
                    scale(e.description_embedding);
                    scale(e.instance_embedding);
                    for (auto &r : e.relation_sentences) {
                        scale(r.positive_embedding);
                        scale(r.negative_embedding);
                    }
                }
            }
        }
    }
    scale(item.embedding);
    scale(item.caption_embedding);
}

std::vector<std::string> ids(const std::vector<matcher::MatchResult> &rs) {
    std::vector<std::string> out;
    for (const auto &r : rs) out.push_back(r.node_id);
    return out;
}

Outcome ranking_scale_invariance() {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto g = fqtest::random_graph(rng, 20, 8);
        const auto item = random_item(rng, 8);
        matcher::MatchOptions opts;
        opts.top_k = 4;
        const auto base = ids(matcher::match(item, g, 20, opts));
        const auto base_instance = ids(matcher::instance_match(item, g, opts));
        for (double c : {0.1, 3.0, 100.0}) {
            auto g2 = g;
            auto item2 = item;
            scale_all(g2, item2, c);
            if (ids(matcher::match(item2, g2, 20, opts)) != base) {
                return "match ranking changed at scale " + std::to_string(c) + ", trial " + std::to_string(trial);
            }
            if (ids(matcher::instance_match(item2, g2, opts)) != base_instance) {
                return "instance ranking changed at scale " + std::to_string(c) + ", trial " + std::to_string(trial);
            }
        }
    }
    return std::nullopt;
}

const std::vector<std::string> kFullTrace{"classify", "segment", "select", "caption", "embed", "match", "reason"};

std::vector<eval::QaItem> router_items() {
    std::vector<eval::QaItem> items;
    for (int i = 0; i < 20; ++i) {
        const bool hard = i % 2 == 1;
        eval::QaItem item;
        item.id = "item" + std::to_string(i);
        item.video_ref = "synthetic:phases?frames=90&height=6&width=6&seed=" + std::to_string(i);
        item.question = hard ? "How many sub-sets are performed in clip " + std::to_string(i) + "?"
                             : "Which apparatus is shown in clip " + std::to_string(i) + "?";
        item.options = {"option one", "option two", "option three", "option four"};
        item.gold = static_cast<char>('A' + (i * 3 % 4));
        item.difficulty = hard ? eval::Difficulty::Hard : eval::Difficulty::Easy;
        item.subset = hard ? eval::Subset::Set : eval::Subset::Event;
        items.push_back(item);
    }
    return items;
}

void script(backends::mock::MockBackends &mocks, const std::vector<eval::QaItem> &items) {
    using backends::mock::MockAgent;
    for (const auto &item : items) {
        const bool hard = item.difficulty == eval::Difficulty::Hard;
        mocks.agent->script(item.question,
                            hard ? MockAgent::assessment_json(true, "", "needs temporal reasoning")
                                 : MockAgent::assessment_json(false, std::string(1, item.gold), "visible"));
        if (hard) mocks.reasoner->script_question(item.question, std::string("Answer: ") + item.gold);
    }
}

router::PipelineConfig router_config() {
    router::PipelineConfig cfg;
    cfg.segmenter = {10, 0.5, 2.0, 5, 10};
    cfg.n1 = 2;
    cfg.n2 = 2;
    cfg.seed = 11;
    return cfg;
}

Outcome router_exactly_once() {
    const auto graph = std::make_shared<const ssgraph::SportsGraph>(ssgraph::load_graph(fqtest::fixture("graph_small.json")));
    const auto items = router_items();
    backends::mock::MockBackends mocks(8, 11);
    script(mocks, items);
    const router::Engine engine(router_config(), mocks.set(), graph);
    for (const auto &item : items) {
        mocks.reset_calls();
        const auto r = engine.answer(item.video_ref, item.question, item.options);
        std::vector<std::string> stages;
        for (const auto &rec : r.trace) stages.push_back(rec.stage);
        if (item.difficulty == eval::Difficulty::Easy) {
            if (r.mode != router::Mode::Reactive) return item.id + " left the reactive path";
            if (mocks.deliberative_calls() != 0) return item.id + " made deliberative backend calls";
            if (stages != std::vector<std::string>{"classify"}) return item.id + " ran extra stages";
        } else {
            if (r.mode != router::Mode::Deliberative) return item.id + " stayed reactive";
            if (stages != kFullTrace) return item.id + " trace is not one full pass";
            if (mocks.reasoner->calls() != 1) return item.id + " called the reasoner " + std::to_string(mocks.reasoner->calls()) + " times";
        }
        if (mocks.agent->calls() != 1) return item.id + " called the agent more than once";
    }

    auto run_eval = [&] {
        backends::mock::MockBackends fresh(8, 11);
        script(fresh, items);
        const router::Engine e(router_config(), fresh.set(), graph);
        const auto report = eval::evaluate(items, e, 4);
        return std::make_pair(report, eval::to_json(report).dump(2) + "\n" + eval::to_text(report));
    };
    const auto [first, first_bytes] = run_eval();
    const auto [second, second_bytes] = run_eval();
    if (first.overall.total != 20 || first.overall.correct != 20) {
        return "accuracy " + std::to_string(first.overall.correct) + "/" + std::to_string(first.overall.total);
    }
    if (first_bytes != second_bytes) return "reports differ between seeded runs";
    return std::nullopt;
}

Outcome n_buckets() {
    if (selector::bucketed_n(30.0) != 10) return "30 s gave " + std::to_string(selector::bucketed_n(30.0));
    if (selector::bucketed_n(45.0) != 20) return "45 s gave " + std::to_string(selector::bucketed_n(45.0));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(0.01, 600.0);
    std::vector<double> durations{0.5, 1.0, 29.999, 30.000001, 59.0, 60.0, 61.0, 90.0, 120.5, 3600.0};
    for (int i = 0; i < 500; ++i) durations.push_back(d(rng));
    for (double dur : durations) {
        const auto want = static_cast<std::size_t>(10 * std::ceil(dur / 30.0));
        if (selector::bucketed_n(dur) != want) {
            std::ostringstream os;
            os << dur << " s gave " << selector::bucketed_n(dur) << ", expected " << want;
            return os.str();
        }
    }
    return std::nullopt;
}

Outcome graph_round_trip() {
    std::mt19937_64 rng(10);
    const std::string path = fqtest::temp_path("acceptance_graph.json");
    for (int trial = 0; trial < 50; ++trial) {
        const auto g = fqtest::random_graph(rng, 20, 8);
        ssgraph::save_graph(g, path);
        const auto back = ssgraph::load_graph(path);
        if (!(back == g)) return "graph " + std::to_string(trial) + " changed on round trip";
        for (std::size_t i = 0; i < g.elements().size(); ++i) {
            const auto *a = g.elements()[i];
            const auto *b = back.elements()[i];
            for (std::size_t j = 0; j < a->description_embedding.size(); ++j) {
                if (std::bit_cast<std::uint64_t>(a->description_embedding[j]) !=
                    std::bit_cast<std::uint64_t>(b->description_embedding[j])) {
                    return "embedding bits differ in graph " + std::to_string(trial);
                }
            }
        }
    }
    return std::nullopt;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"contrastive_logits fixture and alpha=0 reduction", contrastive_arithmetic},
        {"contrastive distribution validity (1000 draws)", distribution_validity},
        {"segmenter equals reference simulation (200 signals)", segmenter_oracle},
        {"segmenter tiling, minimum length, constant signal", segmenter_invariants},
        {"temporal warp monotone, zero-strength and zero-sigma identity", warp_monotone_and_identities},
        {"matcher equals brute force, v2r antisymmetry", matcher_oracle},
        {"ranking invariant to embedding scale", ranking_scale_invariance},
        {"router exactly-once and reproducible eval", router_exactly_once},
        {"bucketed_n duration buckets", n_buckets},
        {"graph save/load round trip (50 graphs)", graph_round_trip},
    };
    int failures = 0;
    for (const auto &[name, check] : criteria) {
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception &e) {
            outcome = std::string("threw: ") + e.what();
        }
        if (outcome) {
            ++failures;
            std::cout << "FAIL " << name << ": " << *outcome << "\n";
        } else {
            std::cout << "PASS " << name << "\n";
        }
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
