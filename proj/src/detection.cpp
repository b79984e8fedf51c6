#include "xsal/detection.hpp"

#include <algorithm>
#include <cmath>

#include "xsal/error.hpp"

namespace xsal {

bool BBox::valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) && x2 > x1 && y2 > y1;
}

double iou(const BBox& a, const BBox& b) {
    const double iw = std::min<double>(a.x2, b.x2) - std::max<double>(a.x1, b.x1);
    const double ih = std::min<double>(a.y2, b.y2) - std::max<double>(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double area_a = (static_cast<double>(a.x2) - a.x1) * (static_cast<double>(a.y2) - a.y1);
    const double area_b = (static_cast<double>(b.x2) - b.x1) * (static_cast<double>(b.y2) - b.y1);
    return std::clamp(inter / (area_a + area_b - inter), 0.0, 1.0);
}

std::size_t select_top_box_index(std::span<const Detection> dets) {
    if (dets.empty()) throw Error(ErrorCode::no_detections, "detector returned no detections");
    std::size_t best = 0;
    for (std::size_t i = 1; i < dets.size(); ++i)
        if (dets[i].score > dets[best].score) best = i;
    return best;
}

Detection select_top_box(std::span<const Detection> dets) { return dets[select_top_box_index(dets)]; }

std::optional<std::size_t> match_box_index(std::span<const Detection> dets, const Detection& target,
                                           const MatchOptions& opts) {
    if (opts.score_min < 0.0 || opts.score_min > 1.0 || opts.iou_min < 0.0 || opts.iou_min > 1.0)
        throw Error(ErrorCode::invalid_parameter, "match thresholds must lie in [0,1]");
    std::optional<std::size_t> best;
    double best_iou = -1.0;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const auto& d = dets[i];
        if (opts.same_class && d.class_id != target.class_id) continue;
        if (d.score < opts.score_min) continue;
        const double o = iou(d.box, target.box);
        if (o < opts.iou_min) continue;
        if (!best || o > best_iou || (o == best_iou && d.score > dets[*best].score)) {
            best = i;
            best_iou = o;
        }
    }
    return best;
}

std::optional<Detection> match_box(std::span<const Detection> dets, const Detection& target,
                                   const MatchOptions& opts) {
    if (auto i = match_box_index(dets, target, opts)) return dets[*i];
    return std::nullopt;
}

nlohmann::json to_json(const Detection& d) {
    return {{"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}}, {"class_id", d.class_id}, {"score", d.score}};
}

Detection detection_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("box") || !j.contains("class_id") || !j.contains("score"))
        throw Error(ErrorCode::protocol_error, "detection needs box, class_id and score");
    const auto& b = j.at("box");
    if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](auto& v) { return v.is_number(); }))
        throw Error(ErrorCode::protocol_error, "box must be an array of four numbers");
    if (!j.at("class_id").is_number_integer() || !j.at("score").is_number())
        throw Error(ErrorCode::protocol_error, "class_id must be an integer and score a number");
    Detection d;
    d.box = {b[0].get<float>(), b[1].get<float>(), b[2].get<float>(), b[3].get<float>()};
    d.class_id = j.at("class_id").get<int>();
    const double score = j.at("score").get<double>();
    if (!(score >= 0.0 && score <= 1.0))
        throw Error(ErrorCode::out_of_range, "detection score " + std::to_string(score) + " outside [0,1]");
    d.score = static_cast<float>(score);
    if (!d.box.valid()) throw Error(ErrorCode::protocol_error, "degenerate or non-finite box");
    return d;
}

}  // namespace xsal
