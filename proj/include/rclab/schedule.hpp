#pragma once

#include <string>
#include <vector>

namespace rclab {

enum class FrameType { I, P, B };

const char* frame_type_name(FrameType t);

// One slot of a lookahead window. Window positions are display order; refs
// point at other window positions. `pending` is false only for the anchor of
// a mini-GOP whose picture was already encoded in the previous window.
struct ScheduledFrame {
    int display_index = 0;
    FrameType type = FrameType::B;
    int layer = 3; // 0=I, 1=P, 2=referenced B, 3=non-reference B
    std::vector<int> refs;
    bool pending = true;
};

struct GopSchedule {
    std::vector<ScheduledFrame> frames; // window display order, anchor first
    std::vector<int> encode_order;      // window positions of pending frames
};

// Builds the window covering [anchor .. anchor+pb_len]: the anchor (an I to
// be encoded when anchor_pending_i, otherwise the already-coded previous
// anchor), a trailing P, and a dyadic B hierarchy between them. Layer-3 Bs
// are the leaves nobody references.
GopSchedule build_gop_schedule(int anchor_display, int pb_len, bool anchor_pending_i);

} // namespace rclab
