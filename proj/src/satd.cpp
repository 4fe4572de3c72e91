#include "rclab/satd.hpp"

#include <cstdlib>

namespace rclab {

int64_t satd_8x8(const uint8_t* a, int a_stride, const uint8_t* b, int b_stride) {
    int diff[8][8];
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j)
            diff[i][j] = static_cast<int>(a[j]) - static_cast<int>(b[j]);
        a += a_stride;
        b += b_stride;
    }

    // Horizontal 8-point butterflies.
    for (int i = 0; i < 8; ++i) {
        int t0 = diff[i][0] + diff[i][4];
        int t4 = diff[i][0] - diff[i][4];
        int t1 = diff[i][1] + diff[i][5];
        int t5 = diff[i][1] - diff[i][5];
        int t2 = diff[i][2] + diff[i][6];
        int t6 = diff[i][2] - diff[i][6];
        int t3 = diff[i][3] + diff[i][7];
        int t7 = diff[i][3] - diff[i][7];
        int s0 = t0 + t2;
        int s2 = t0 - t2;
        int s1 = t1 + t3;
        int s3 = t1 - t3;
        int s4 = t4 + t6;
        int s6 = t4 - t6;
        int s5 = t5 + t7;
        int s7 = t5 - t7;
        diff[i][0] = s0 + s1;
        diff[i][1] = s0 - s1;
        diff[i][2] = s2 + s3;
        diff[i][3] = s2 - s3;
        diff[i][4] = s4 + s5;
        diff[i][5] = s4 - s5;
        diff[i][6] = s6 + s7;
        diff[i][7] = s6 - s7;
    }

    // Vertical pass and accumulation.
    int64_t sum = 0;
    for (int i = 0; i < 8; ++i) {
        int t0 = diff[0][i] + diff[4][i];
        int t4 = diff[0][i] - diff[4][i];
        int t1 = diff[1][i] + diff[5][i];
        int t5 = diff[1][i] - diff[5][i];
        int t2 = diff[2][i] + diff[6][i];
        int t6 = diff[2][i] - diff[6][i];
        int t3 = diff[3][i] + diff[7][i];
        int t7 = diff[3][i] - diff[7][i];
        int s0 = t0 + t2;
        int s2 = t0 - t2;
        int s1 = t1 + t3;
        int s3 = t1 - t3;
        int s4 = t4 + t6;
        int s6 = t4 - t6;
        int s5 = t5 + t7;
        int s7 = t5 - t7;
        sum += std::abs(s0 + s1);
        sum += std::abs(s0 - s1);
        sum += std::abs(s2 + s3);
        sum += std::abs(s2 - s3);
        sum += std::abs(s4 + s5);
        sum += std::abs(s4 - s5);
        sum += std::abs(s6 + s7);
        sum += std::abs(s6 - s7);
    }
    return sum >> 2;
}

int64_t satd_8x8_const(const uint8_t* a, int a_stride, uint8_t value) {
    uint8_t flat[64];
    for (int i = 0; i < 64; ++i)
        flat[i] = value;
    return satd_8x8(a, a_stride, flat, 8);
}

} // namespace rclab
