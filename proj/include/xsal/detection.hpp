#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace xsal {

// Corner-form box in input-image pixels.
struct BBox {
    float x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    float width() const { return x2 - x1; }
    float height() const { return y2 - y1; }
    float area() const { return width() * height(); }
    bool valid() const;

    friend bool operator==(const BBox&, const BBox&) = default;
};

struct Detection {
    BBox box;
    int class_id = 0;
    float score = 0.0f;

    friend bool operator==(const Detection&, const Detection&) = default;
};

double iou(const BBox& a, const BBox& b);

// Highest score wins; ties go to the lowest index. Throws no-detections on empty input.
std::size_t select_top_box_index(std::span<const Detection> dets);
Detection select_top_box(std::span<const Detection> dets);

struct MatchOptions {
    double score_min = 0.05;
    double iou_min = 0.5;
    // Only consider candidates of the target's class.
    bool same_class = true;
};

// Re-identifies `target` among `dets`: candidates need score >= score_min and
// IoU >= iou_min; highest IoU wins, then higher score, then lower index.
std::optional<std::size_t> match_box_index(std::span<const Detection> dets, const Detection& target,
                                           const MatchOptions& opts = {});
std::optional<Detection> match_box(std::span<const Detection> dets, const Detection& target,
                                   const MatchOptions& opts = {});

// {"box":[x1,y1,x2,y2],"class_id":int,"score":float}
nlohmann::json to_json(const Detection& d);
// Validates geometry and score range; bad input raises protocol-error / out-of-range.
Detection detection_from_json(const nlohmann::json& j);

}  // namespace xsal
