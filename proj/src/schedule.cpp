#include "rclab/schedule.hpp"

#include <stdexcept>

namespace rclab {

const char* frame_type_name(FrameType t) {
    switch (t) {
    case FrameType::I: return "I";
    case FrameType::P: return "P";
    case FrameType::B: return "B";
    }
    return "?";
}

namespace {

void split_span(GopSchedule& gop, int lo, int hi) {
    if (hi - lo < 2)
        return;
    const int mid = (lo + hi) / 2;
    ScheduledFrame& f = gop.frames[mid];
    f.type = FrameType::B;
    f.layer = (mid - lo <= 1 && hi - mid <= 1) ? 3 : 2;
    f.refs = {lo, hi};
    gop.encode_order.push_back(mid);
    split_span(gop, lo, mid);
    split_span(gop, mid, hi);
}

} // namespace

GopSchedule build_gop_schedule(int anchor_display, int pb_len, bool anchor_pending_i) {
    if (pb_len < 0)
        throw std::invalid_argument("pb_len must be non-negative");
    if (pb_len == 0 && !anchor_pending_i)
        throw std::invalid_argument("empty window");

    GopSchedule gop;
    gop.frames.resize(pb_len + 1);
    for (int i = 0; i <= pb_len; ++i)
        gop.frames[i].display_index = anchor_display + i;

    ScheduledFrame& anchor = gop.frames[0];
    anchor.layer = anchor_pending_i ? 0 : 1;
    anchor.type = anchor_pending_i ? FrameType::I : FrameType::P;
    anchor.pending = anchor_pending_i;
    if (anchor_pending_i)
        gop.encode_order.push_back(0);

    if (pb_len > 0) {
        ScheduledFrame& p = gop.frames[pb_len];
        p.type = FrameType::P;
        p.layer = 1;
        p.refs = {0};
        gop.encode_order.push_back(pb_len);
        split_span(gop, 0, pb_len);
    }
    return gop;
}

} // namespace rclab
