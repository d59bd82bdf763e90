// Copyright (c) 2026 The mvoc authors
// SPDX-License-Identifier: Apache-2.0

#include "mvoc/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "mvoc/affine.hpp"
#include "mvoc/error.hpp"
#include "mvoc/parallel.hpp"

namespace mvoc {

void WarpMetricConfig::validate(std::size_t frames) const {
    if (interval < 1 || interval >= frames) {
        throw Error(ErrorKind::Parameter, "interval " + std::to_string(interval) + " needs 1 <= G < " +
                                              std::to_string(frames) + " frames");
    }
    if (!(match_residual >= 0.0)) {
        throw Error(ErrorKind::Parameter, "match residual bound must be non-negative");
    }
    if (!(occlusion_threshold > 0.0)) {
        throw Error(ErrorKind::Parameter, "occlusion threshold must be positive");
    }
}

VideoTensor frame_slice(const VideoTensor& video, std::size_t f) {
    const auto& s = video.shape();
    if (f >= s.frames) {
        throw Error(ErrorKind::Range, "frame " + std::to_string(f) + " outside video " + s.str());
    }
    const auto src = video.frame(f);
    return VideoTensor({1, s.channels, s.height, s.width}, std::vector<double>(src.begin(), src.end()));
}

VideoTensor flow_slice(const FlowField& flow, std::size_t p) { return frame_slice(flow.field(), p); }

namespace {

void require_single(const VideoTensor& t, std::size_t channels, const char* what) {
    if (t.shape().frames != 1 || (channels != 0 && t.shape().channels != channels)) {
        throw Error(ErrorKind::Shape, std::string(what) + " must be a single frame, got " + t.shape().str());
    }
}

void require_flow_matches(const VideoTensor& frame, const VideoTensor& flow) {
    require_single(frame, 0, "frame");
    require_single(flow, 2, "flow");
    if (flow.shape().height != frame.shape().height || flow.shape().width != frame.shape().width) {
        throw Error(ErrorKind::Shape, "flow " + flow.shape().str() + " does not match frame " + frame.shape().str());
    }
}

}  // namespace

WarpedFrame warp_frame(const VideoTensor& frame, const VideoTensor& flow) {
    require_flow_matches(frame, flow);
    const auto& s = frame.shape();
    WarpedFrame out{VideoTensor(s), Mask({1, s.height, s.width}, 1.0)};
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            const double y = static_cast<double>(i) + flow.at(0, 0, i, j);
            const double x = static_cast<double>(j) + flow.at(0, 1, i, j);
            bool inside = true;
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double* plane = frame.data().data() + frame.index(0, c, 0, 0);
                inside = sample_bilinear(plane, s.height, s.width, y, x, out.image.at(0, c, i, j)) && inside;
            }
            if (!inside) {
                out.in_bounds.at(0, i, j) = 0.0;
            }
        }
    }
    return out;
}

double warping_error(const VideoTensor& v_t, const VideoTensor& v_tg, const VideoTensor& flow, const Mask& mask) {
    require_single(v_t, 0, "v_t");
    require_same_shape(v_t, v_tg, "warping_error");
    const auto& s = v_t.shape();
    if (mask.shape() != Shape3{1, s.height, s.width}) {
        throw Error(ErrorKind::Shape, "mask " + mask.shape().str() + " does not match frame " + s.str());
    }
    const WarpedFrame w = warp_frame(v_tg, flow);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            const double m = mask.at(0, i, j) * w.in_bounds.at(0, i, j);
            if (m == 0.0) {
                continue;
            }
            double sq = 0.0;
            for (std::size_t c = 0; c < s.channels; ++c) {
                const double d = v_t.at(0, c, i, j) - w.image.at(0, c, i, j);
                sq += d * d;
            }
            num += m * sq;
            den += m;
        }
    }
    if (den <= 0.0) {
        throw Error(ErrorKind::UndefinedMetric, "warping error undefined: every pixel is occluded");
    }
    return num / den;
}

SequenceWarpResult sequence_warping_error(const VideoTensor& video, const FlowField& flows, const Mask& masks,
                                          const WarpMetricConfig& cfg) {
    const auto& s = video.shape();
    cfg.validate(s.frames);
    const std::size_t pairs = s.frames - cfg.interval;
    if (flows.interval() != cfg.interval || flows.pairs() != pairs || flows.height() != s.height ||
        flows.width() != s.width) {
        throw Error(ErrorKind::Shape, "flow field does not cover the " + std::to_string(pairs) + " pairs at G=" +
                                          std::to_string(cfg.interval));
    }
    if (masks.shape() != Shape3{pairs, s.height, s.width}) {
        throw Error(ErrorKind::Shape, "occlusion masks " + masks.shape().str() + " do not cover the pairs");
    }
    SequenceWarpResult r;
    r.per_pair.resize(pairs);
    parallel_for(pairs, [&](std::size_t t) {
        Mask m({1, s.height, s.width});
        const auto src = masks.data().subspan(t * s.height * s.width, s.height * s.width);
        std::copy(src.begin(), src.end(), m.data().begin());
        r.per_pair[t] =
            warping_error(frame_slice(video, t), frame_slice(video, t + cfg.interval), flow_slice(flows, t), m);
    });
    double sum = 0.0;
    for (double e : r.per_pair) {
        sum += e;
    }
    r.mean = sum / static_cast<double>(pairs);
    return r;
}

VideoTensor block_match_flow(const VideoTensor& from, const VideoTensor& to, int radius, VideoTensor* residual) {
    require_single(from, 0, "from");
    require_same_shape(from, to, "block_match_flow");
    if (radius < 0) {
        throw Error(ErrorKind::Parameter, "search radius must be non-negative");
    }
    const auto& s = from.shape();
    const auto H = static_cast<long>(s.height);
    const auto W = static_cast<long>(s.width);
    auto in = [&](long i, long j) { return i >= 0 && j >= 0 && i < H && j < W; };
    auto px = [&](const VideoTensor& v, std::size_t c, long i, long j) {
        return v.at(0, c, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };
    VideoTensor flow({1, 2, s.height, s.width});
    if (residual != nullptr) {
        *residual = VideoTensor({1, 1, s.height, s.width});
    }
    for (long i = 0; i < H; ++i) {
        for (long j = 0; j < W; ++j) {
            double best = std::numeric_limits<double>::infinity();
            long by = 0;
            long bx = 0;
            long bmag = 0;
            for (long dy = -radius; dy <= radius; ++dy) {
                for (long dx = -radius; dx <= radius; ++dx) {
                    if (i + dy < 0 || i + dy >= H || j + dx < 0 || j + dx >= W) {
                        continue;
                    }
                    // mean over the patch pixels present in both frames
                    double ssd = 0.0;
                    int n = 0;
                    for (long a = -1; a <= 1; ++a) {
                        for (long b = -1; b <= 1; ++b) {
                            if (!in(i + a, j + b) || !in(i + a + dy, j + b + dx)) {
                                continue;
                            }
                            ++n;
                            for (std::size_t c = 0; c < s.channels; ++c) {
                                const double d = px(from, c, i + a, j + b) - px(to, c, i + a + dy, j + b + dx);
                                ssd += d * d;
                            }
                        }
                    }
                    ssd /= n;
                    const long mag = dy * dy + dx * dx;
                    if (ssd < best - 1e-12 || (std::abs(ssd - best) <= 1e-12 && mag < bmag)) {
                        best = ssd;
                        by = dy;
                        bx = dx;
                        bmag = mag;
                    }
                }
            }
            flow.at(0, 0, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = static_cast<double>(by);
            flow.at(0, 1, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = static_cast<double>(bx);
            if (residual != nullptr) {
                residual->at(0, 0, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = best;
            }
        }
    }
    return flow;
}

Mask forward_backward_valid(const VideoTensor& fw, const VideoTensor& bw, double threshold) {
    require_single(fw, 2, "forward flow");
    require_same_shape(fw, bw, "forward_backward_valid");
    const auto& s = fw.shape();
    Mask valid({1, s.height, s.width});
    const double* bwy = bw.data().data() + bw.index(0, 0, 0, 0);
    const double* bwx = bw.data().data() + bw.index(0, 1, 0, 0);
    for (std::size_t i = 0; i < s.height; ++i) {
        for (std::size_t j = 0; j < s.width; ++j) {
            const double fy = fw.at(0, 0, i, j);
            const double fx = fw.at(0, 1, i, j);
            double ry = 0.0;
            double rx = 0.0;
            const double y = static_cast<double>(i) + fy;
            const double x = static_cast<double>(j) + fx;
            if (!sample_bilinear(bwy, s.height, s.width, y, x, ry) || !sample_bilinear(bwx, s.height, s.width, y, x, rx)) {
                continue;
            }
            if (std::hypot(fy + ry, fx + rx) <= threshold) {
                valid.at(0, i, j) = 1.0;
            }
        }
    }
    return valid;
}

EstimatedFlow estimate_flow(const VideoTensor& video, const WarpMetricConfig& cfg, int radius) {
    const auto& s = video.shape();
    cfg.validate(s.frames);
    const std::size_t pairs = s.frames - cfg.interval;
    VideoTensor field({pairs, 2, s.height, s.width});
    Mask valid({pairs, s.height, s.width});
    parallel_for(pairs, [&](std::size_t t) {
        const VideoTensor a = frame_slice(video, t);
        const VideoTensor b = frame_slice(video, t + cfg.interval);
        VideoTensor res;
        const VideoTensor fw = block_match_flow(a, b, radius, &res);
        const VideoTensor bw = block_match_flow(b, a, radius);
        Mask m = forward_backward_valid(fw, bw, cfg.occlusion_threshold);
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (res.data()[k] > cfg.match_residual) {
                m.data()[k] = 0.0;
            }
        }
        std::copy(fw.data().begin(), fw.data().end(), field.frame(t).begin());
        std::copy(m.data().begin(), m.data().end(), valid.data().begin() + static_cast<long>(t * s.height * s.width));
    });
    return {FlowField(std::move(field), cfg.interval), std::move(valid)};
}

std::string warp_report_csv(const SequenceWarpResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "t,error\n";
    for (std::size_t t = 0; t < r.per_pair.size(); ++t) {
        os << (t + 1) << ',' << r.per_pair[t] << '\n';
    }
    os << "mean," << r.mean << '\n';
    return os.str();
}

}  // namespace mvoc
