// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mvoc/error.hpp"
#include "mvoc/parallel.hpp"
#include "mvoc/vten.hpp"

namespace mvoc {

using nlohmann::json;

namespace {

constexpr int kSuper = 4;
constexpr int kTextureWaves = 4;

double channel_of(const std::vector<double>& color, std::size_t c) {
    return color.size() == 1 ? color[0] : color[c];
}

struct Wave {
    double ky, kx, phase, amp;
};

// Background and object membership evaluated at continuous points.
class SceneField {
public:
    explicit SceneField(const SceneSpec& spec) : spec_(spec) {
        std::mt19937_64 gen(spec.seed);
        std::uniform_real_distribution<double> freq(0.15, 0.6);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            auto& ws = waves_.emplace_back();
            for (int k = 0; k < kTextureWaves; ++k) {
                const double ky = freq(gen);
                const double kx = freq(gen);
                ws.push_back({ky, kx, phase(gen), 0.06});
            }
        }
        order_.resize(spec.objects.size());
        for (std::size_t i = 0; i < order_.size(); ++i) {
            order_[i] = i;
        }
        // nearest first
        std::sort(order_.begin(), order_.end(),
                  [&](std::size_t a, std::size_t b) { return spec.objects[a].layer > spec.objects[b].layer; });
    }

    double background(std::size_t c, double f, double y, double x) const {
        const auto& bg = spec_.background;
        const double sy = y - bg.drift.y * f;
        const double sx = x - bg.drift.x * f;
        const double base = channel_of(bg.color, c);
        switch (bg.kind) {
            case BackgroundKind::Solid: return base;
            case BackgroundKind::Gradient: {
                const double span = static_cast<double>(spec_.height + spec_.width - 2);
                const double u = span > 0.0 ? (sy + sx) / span : 0.0;
                return base + (channel_of(bg.color2, c) - base) * u;
            }
            case BackgroundKind::Texture: {
                double v = base;
                for (const auto& w : waves_[c]) {
                    v += w.amp * std::sin(w.ky * sy + w.kx * sx + w.phase);
                }
                return v;
            }
        }
        return base;
    }

    /// Index of the nearest object covering the point, or -1 for background.
    long top(double f, double y, double x) const {
        for (std::size_t i : order_) {
            if (inside(spec_.objects[i], f, y, x)) {
                return static_cast<long>(i);
            }
        }
        return -1;
    }

    /// Calls fn(surface, y, x) for each of the kSuper^2 subsamples of pixel (i, j).
    template <class Fn>
    void subsamples(double f, std::size_t i, std::size_t j, Fn&& fn) const {
        for (int a = 0; a < kSuper; ++a) {
            for (int b = 0; b < kSuper; ++b) {
                const double y = static_cast<double>(i) + (a + 0.5) / kSuper - 0.5;
                const double x = static_cast<double>(j) + (b + 0.5) / kSuper - 0.5;
                fn(top(f, y, x), y, x);
            }
        }
    }

    /// Object owning pixel (i, j): largest visible coverage, at least half,
    /// ties to the nearer layer. -1 when none. `cover` is scratch.
    long owner(double f, std::size_t i, std::size_t j, std::vector<double>& cover) const {
        std::fill(cover.begin(), cover.end(), 0.0);
        subsamples(f, i, j, [&](long s, double, double) {
            if (s >= 0) {
                cover[static_cast<std::size_t>(s)] += 1.0;
            }
        });
        long best = -1;
        for (std::size_t k : order_) {
            if (2.0 * cover[k] >= kSuper * kSuper && (best < 0 || cover[k] > cover[static_cast<std::size_t>(best)])) {
                best = static_cast<long>(k);
            }
        }
        return best;
    }

    GridPoint displacement(long surface, double f, double g) const {
        if (surface < 0) {
            return {spec_.background.drift.y * g, spec_.background.drift.x * g};
        }
        const auto& tr = spec_.objects[static_cast<std::size_t>(surface)].trajectory;
        const GridPoint a = tr.center(f);
        const GridPoint b = tr.center(f + g);
        return {b.y - a.y, b.x - a.x};
    }

    static bool inside(const ObjectSpec& o, double f, double y, double x) {
        const GridPoint c = o.trajectory.center(f);
        const double dy = y - c.y;
        const double dx = x - c.x;
        const double r = o.size;
        switch (o.shape) {
            case ObjectShape::Disc: return dy * dy + dx * dx <= r * r;
            case ObjectShape::Square: return std::abs(dy) <= r && std::abs(dx) <= r;
            case ObjectShape::Triangle: {
                // apex up, circumradius r
                const double h = std::sqrt(3.0) / 2.0 * r;
                const GridPoint v0{-r, 0.0};
                const GridPoint v1{r / 2.0, -h};
                const GridPoint v2{r / 2.0, h};
                auto edge = [&](const GridPoint& a, const GridPoint& b) {
                    return (b.x - a.x) * (dy - a.y) - (b.y - a.y) * (dx - a.x);
                };
                const double e0 = edge(v0, v1);
                const double e1 = edge(v1, v2);
                const double e2 = edge(v2, v0);
                return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
            }
        }
        return false;
    }

private:
    const SceneSpec& spec_;
    std::vector<std::vector<Wave>> waves_;
    std::vector<std::size_t> order_;
};

GridPoint point_of(const json& j, const char* key) {
    if (!j.contains(key)) {
        return {};
    }
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) {
        throw Error(ErrorKind::Config, std::string(key) + " must be [y, x]");
    }
    return {a[0].get<double>(), a[1].get<double>()};
}

json point_json(const GridPoint& p) { return json::array({p.y, p.x}); }

std::vector<double> color_of(const json& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    if (v.is_number()) {
        return {v.get<double>()};
    }
    return v.get<std::vector<double>>();
}

template <class E>
E enum_of(const json& j, const char* key, E fallback, std::initializer_list<std::pair<const char*, E>> names) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto s = j.at(key).get<std::string>();
    for (const auto& [n, e] : names) {
        if (s == n) {
            return e;
        }
    }
    throw Error(ErrorKind::Config, "unknown " + std::string(key) + " '" + s + "'");
}

const char* shape_name(ObjectShape s) {
    switch (s) {
        case ObjectShape::Disc: return "disc";
        case ObjectShape::Square: return "square";
        case ObjectShape::Triangle: return "triangle";
    }
    return "disc";
}

const char* background_name(BackgroundKind k) {
    switch (k) {
        case BackgroundKind::Solid: return "solid";
        case BackgroundKind::Gradient: return "gradient";
        case BackgroundKind::Texture: return "texture";
    }
    return "solid";
}

}  // namespace

GridPoint Trajectory::center(double frame) const noexcept {
    if (kind == Kind::Linear) {
        return {start.y + velocity.y * frame, start.x + velocity.x * frame};
    }
    const double s = std::sin(2.0 * std::numbers::pi * frame / period + phase);
    return {start.y + amplitude.y * s, start.x + amplitude.x * s};
}

void SceneSpec::validate() const {
    if (frames == 0 || channels == 0 || height == 0 || width == 0) {
        throw Error(ErrorKind::Spec, "scene dims must be positive");
    }
    auto check_color = [&](const std::vector<double>& c, const char* what) {
        if (c.size() != 1 && c.size() != channels) {
            throw Error(ErrorKind::Spec, std::string(what) + " needs 1 or " + std::to_string(channels) + " values");
        }
        for (double v : c) {
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::Spec, std::string(what) + " is not finite");
            }
        }
    };
    check_color(background.color, "background color");
    check_color(background.color2, "background color2");
    std::set<int> layers;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& o = objects[i];
        const std::string name = "object " + std::to_string(i);
        check_color(o.color, name.c_str());
        if (!(o.size > 0.0)) {
            throw Error(ErrorKind::Spec, name + " size must be positive");
        }
        if (o.trajectory.kind == Trajectory::Kind::Sinusoidal && !(o.trajectory.period > 0.0)) {
            throw Error(ErrorKind::Spec, name + " period must be positive");
        }
        if (!layers.insert(o.layer).second) {
            throw Error(ErrorKind::Spec, name + " repeats layer " + std::to_string(o.layer));
        }
        for (std::size_t f = 0; f < frames; ++f) {
            const GridPoint c = o.trajectory.center(static_cast<double>(f));
            if (!(c.y >= 0.0 && c.x >= 0.0 && c.y <= static_cast<double>(height - 1) &&
                  c.x <= static_cast<double>(width - 1))) {
                throw Error(ErrorKind::Spec, name + " center leaves the canvas at frame " + std::to_string(f));
            }
        }
    }
}

SceneSpec scene_from_json(const std::string& text) {
    SceneSpec s;
    try {
        const json j = json::parse(text);
        s.frames = j.value("frames", s.frames);
        s.channels = j.value("channels", s.channels);
        s.height = j.value("height", s.height);
        s.width = j.value("width", s.width);
        s.seed = j.value("seed", s.seed);
        if (j.contains("background")) {
            const auto& b = j.at("background");
            s.background.kind = enum_of(b, "kind", BackgroundKind::Solid,
                                        {{"solid", BackgroundKind::Solid},
                                         {"gradient", BackgroundKind::Gradient},
                                         {"texture", BackgroundKind::Texture}});
            s.background.color = color_of(b, "color", s.background.color);
            s.background.color2 = color_of(b, "color2", s.background.color2);
            s.background.drift = point_of(b, "drift");
        }
        for (const auto& o : j.value("objects", json::array())) {
            ObjectSpec os;
            os.shape = enum_of(o, "shape", ObjectShape::Disc,
                               {{"disc", ObjectShape::Disc}, {"square", ObjectShape::Square},
                                {"triangle", ObjectShape::Triangle}});
            os.size = o.value("size", os.size);
            os.color = color_of(o, "color", os.color);
            os.layer = o.value("layer", os.layer);
            if (o.contains("trajectory")) {
                const auto& t = o.at("trajectory");
                os.trajectory.kind = enum_of(t, "kind", Trajectory::Kind::Linear,
                                             {{"linear", Trajectory::Kind::Linear},
                                              {"sinusoidal", Trajectory::Kind::Sinusoidal}});
                os.trajectory.start = point_of(t, "start");
                os.trajectory.velocity = point_of(t, "velocity");
                os.trajectory.amplitude = point_of(t, "amplitude");
                os.trajectory.period = t.value("period", os.trajectory.period);
                os.trajectory.phase = t.value("phase", os.trajectory.phase);
            }
            s.objects.push_back(std::move(os));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("scene json: ") + e.what());
    }
    s.validate();
    return s;
}

std::string scene_to_json(const SceneSpec& s) {
    nlohmann::ordered_json j;
    j["frames"] = s.frames;
    j["channels"] = s.channels;
    j["height"] = s.height;
    j["width"] = s.width;
    j["seed"] = s.seed;
    j["background"] = {{"kind", background_name(s.background.kind)},
                       {"color", s.background.color},
                       {"color2", s.background.color2},
                       {"drift", point_json(s.background.drift)}};
    j["objects"] = nlohmann::ordered_json::array();
    for (const auto& o : s.objects) {
        nlohmann::ordered_json t;
        const bool lin = o.trajectory.kind == Trajectory::Kind::Linear;
        t["kind"] = lin ? "linear" : "sinusoidal";
        t["start"] = point_json(o.trajectory.start);
        if (lin) {
            t["velocity"] = point_json(o.trajectory.velocity);
        } else {
            t["amplitude"] = point_json(o.trajectory.amplitude);
            t["period"] = o.trajectory.period;
            t["phase"] = o.trajectory.phase;
        }
        j["objects"].push_back(
            {{"shape", shape_name(o.shape)}, {"size", o.size}, {"color", o.color}, {"layer", o.layer}, {"trajectory", t}});
    }
    return j.dump(2);
}

SceneSpec load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot read scene " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str());
}

RenderedScene render_scene(const SceneSpec& spec) {
    spec.validate();
    const SceneField field(spec);
    const std::size_t F = spec.frames;
    const std::size_t C = spec.channels;
    const std::size_t H = spec.height;
    const std::size_t W = spec.width;
    RenderedScene out{VideoTensor({F, C, H, W}), std::vector<Mask>(spec.objects.size(), Mask({F, H, W}))};
    const double inv = 1.0 / (kSuper * kSuper);
    parallel_for(F, [&](std::size_t f) {
        const auto fd = static_cast<double>(f);
        std::vector<double> cover(spec.objects.size());
        std::vector<double> acc(C);
        for (std::size_t i = 0; i < H; ++i) {
            for (std::size_t j = 0; j < W; ++j) {
                std::fill(acc.begin(), acc.end(), 0.0);
                field.subsamples(fd, i, j, [&](long s, double y, double x) {
                    for (std::size_t c = 0; c < C; ++c) {
                        acc[c] += s >= 0 ? channel_of(spec.objects[static_cast<std::size_t>(s)].color, c)
                                         : field.background(c, fd, y, x);
                    }
                });
                for (std::size_t c = 0; c < C; ++c) {
                    out.video.at(f, c, i, j) = static_cast<double>(static_cast<float>(acc[c] * inv));
                }
                const long o = field.owner(fd, i, j, cover);
                if (o >= 0) {
                    out.masks[static_cast<std::size_t>(o)].at(f, i, j) = 1.0;
                }
            }
        }
    });
    return out;
}

SceneFlow ground_truth_flow(const SceneSpec& spec, std::size_t interval) {
    spec.validate();
    if (interval < 1 || interval >= spec.frames) {
        throw Error(ErrorKind::Parameter, "flow interval must be in [1, frames)");
    }
    const SceneField field(spec);
    const std::size_t P = spec.frames - interval;
    const std::size_t H = spec.height;
    const std::size_t W = spec.width;
    const auto g = static_cast<double>(interval);
    VideoTensor global({P, 2, H, W});
    std::vector<VideoTensor> per(spec.objects.size(), VideoTensor({P, 2, H, W}));
    Mask valid({P, H, W});
    parallel_for(P, [&](std::size_t t) {
        const auto fd = static_cast<double>(t);
        std::vector<double> cover(spec.objects.size());
        for (std::size_t i = 0; i < H; ++i) {
            for (std::size_t j = 0; j < W; ++j) {
                const auto y = static_cast<double>(i);
                const auto x = static_cast<double>(j);
                const long s = field.top(fd, y, x);
                const GridPoint d = field.displacement(s, fd, g);
                global.at(t, 0, i, j) = d.y;
                global.at(t, 1, i, j) = d.x;
                const long o = field.owner(fd, i, j, cover);
                if (o >= 0) {
                    const GridPoint od = field.displacement(o, fd, g);
                    per[static_cast<std::size_t>(o)].at(t, 0, i, j) = od.y;
                    per[static_cast<std::size_t>(o)].at(t, 1, i, j) = od.x;
                }
                const double qy = y + d.y;
                const double qx = x + d.x;
                const bool in = qy >= 0.0 && qx >= 0.0 && qy <= static_cast<double>(H - 1) &&
                                qx <= static_cast<double>(W - 1);
                if (in && field.top(fd + g, qy, qx) == s) {
                    valid.at(t, i, j) = 1.0;
                }
            }
        }
    });
    SceneFlow out{FlowField(quantize_f32(global), interval), {}, std::move(valid)};
    for (auto& p : per) {
        out.objects.emplace_back(quantize_f32(p), interval);
    }
    return out;
}

Dataset build_dataset(std::span<const SceneSpec> specs, std::span<const std::vector<std::string>> labels) {
    if (specs.size() != labels.size()) {
        throw Error(ErrorKind::Arity, "build_dataset: one label set per spec");
    }
    Dataset d;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        d.add(render_scene(specs[k]).video, std::set<std::string>(labels[k].begin(), labels[k].end()));
    }
    return d;
}

namespace {

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_netpbm(const std::filesystem::path& path, bool color, std::size_t h, std::size_t w,
                  const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out << (color ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorKind::Io, "short write to " + path.string());
    }
}

}  // namespace

void write_frame_preview(const std::filesystem::path& path, const VideoTensor& video, std::size_t frame) {
    const auto& s = video.shape();
    if (frame >= s.frames) {
        throw Error(ErrorKind::Range, "preview frame out of range");
    }
    const bool color = s.channels >= 3;
    const std::size_t nc = color ? 3 : 1;
    std::vector<unsigned char> bytes;
    bytes.reserve(s.plane() * nc);
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            for (std::size_t c = 0; c < nc; ++c) {
                bytes.push_back(to_byte(video.at(frame, c, i, j)));
            }
        }
    }
    write_netpbm(path, color, s.height, s.width, bytes);
}

void write_mask_preview(const std::filesystem::path& path, const Mask& mask, std::size_t frame) {
    const auto& s = mask.shape();
    if (frame >= s.frames) {
        throw Error(ErrorKind::Range, "preview frame out of range");
    }
    std::vector<unsigned char> bytes;
    bytes.reserve(s.plane());
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            bytes.push_back(to_byte(mask.at(frame, i, j)));
        }
    }
    write_netpbm(path, false, s.height, s.width, bytes);
}

void write_scene(const std::filesystem::path& dir, const SceneSpec& spec) {
    const RenderedScene r = render_scene(spec);
    std::error_code ec;
    std::filesystem::create_directories(dir / "previews", ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
    }
    save_video(dir / "video.vten", r.video);
    for (std::size_t k = 0; k < r.masks.size(); ++k) {
        save_mask(dir / ("mask_" + std::to_string(k) + ".vten"), r.masks[k]);
    }
    for (std::size_t g : {2u, 4u}) {
        if (g < spec.frames) {
            const SceneFlow fl = ground_truth_flow(spec, g);
            save_flow(dir / ("flow_g" + std::to_string(g) + ".vten"), fl.global);
            save_mask(dir / ("valid_g" + std::to_string(g) + ".vten"), fl.valid);
        }
    }
    {
        std::ofstream out(dir / "scene.json");
        out << scene_to_json(spec) << '\n';
        if (!out) {
            throw Error(ErrorKind::Io, "cannot write scene.json");
        }
    }
    for (std::size_t f = 0; f < spec.frames; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.%s", f, spec.channels >= 3 ? "ppm" : "pgm");
        write_frame_preview(dir / "previews" / name, r.video, f);
    }
}

}  // namespace mvoc
