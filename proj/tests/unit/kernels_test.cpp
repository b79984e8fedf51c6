#include <gtest/gtest.h>

#include <omp.h>

#include "test_support.hpp"
#include "xsal/kernels.hpp"
#include "xsal/tensor.hpp"

using namespace xsal;
namespace k = xsal::kernels;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
    const auto img = test::random_image(static_cast<int>(n), 1, seed, 1);
    return {img.data().begin(), img.data().end()};
}

class KernelThreads : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override {
        saved_ = omp_get_max_threads();
        omp_set_num_threads(GetParam());
    }
    void TearDown() override { omp_set_num_threads(saved_); }

private:
    int saved_ = 1;
};

}  // namespace

TEST_P(KernelThreads, ResizeMatchesSerial) {
    const auto src = random_values(37 * 23, 1);
    std::vector<float> a(101 * 64), b(101 * 64);
    k::resize_bilinear(src, 37, 23, a, 101, 64);
    k::serial::resize_bilinear(src, 37, 23, b, 101, 64);
    EXPECT_EQ(a, b);
}

TEST_P(KernelThreads, BlurMatchesSerial) {
    const auto src = random_values(64 * 48, 2);
    const auto taps = gaussian_kernel(5.0, 11);
    std::vector<float> a(src.size()), b(src.size());
    k::blur_separable(src, 64, 48, taps, a);
    k::serial::blur_separable(src, 64, 48, taps, b);
    EXPECT_EQ(a, b);
}

TEST_P(KernelThreads, ConvMatchesSerial) {
    k::ConvShape s{3, 40, 36, 6, 5, 2, 2};
    const auto in = random_values(3 * 40 * 36, 3);
    auto w = random_values(6 * 3 * 25, 4);
    for (auto& v : w) v -= 0.5f;
    const auto bias = random_values(6, 5);
    std::vector<float> a(6 * s.out_height() * s.out_width()), b(a.size());
    k::conv2d_relu(s, in, w, bias, a);
    k::serial::conv2d_relu(s, in, w, bias, b);
    EXPECT_EQ(a, b);
}

TEST_P(KernelThreads, WeightedAccumulateMatchesSerial) {
    std::vector<std::vector<float>> masks;
    std::vector<const float*> ptrs;
    for (int i = 0; i < 17; ++i) masks.push_back(random_values(50 * 30, 10 + i));
    for (auto& m : masks) ptrs.push_back(m.data());
    const auto wf = random_values(17, 99);
    const std::vector<double> weights(wf.begin(), wf.end());
    std::vector<double> a(50 * 30, 0.25), b(50 * 30, 0.25);
    k::weighted_accumulate(a, ptrs, weights);
    k::serial::weighted_accumulate(b, ptrs, weights);
    EXPECT_EQ(a, b);
}

INSTANTIATE_TEST_SUITE_P(ThreadCounts, KernelThreads, ::testing::Values(1, 2, 3, 8));

TEST(Conv, ReplicatePaddingAndReluByHand) {
    // 1 channel 3x3 input, 3x3 kernel of ones, stride 1, pad 1: every output is
    // the sum of the replicate-padded neighbourhood.
    k::ConvShape s{1, 3, 3, 1, 3, 1, 1};
    const std::vector<float> in{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<float> w(9, 1.0f);
    std::vector<float> out(9);
    k::serial::conv2d_relu(s, in, w, std::vector<float>{0.0f}, out);
    // Top-left: rows {1,1,2},{1,1,2},{4,4,5}
    EXPECT_FLOAT_EQ(out[0], 1 + 1 + 2 + 1 + 1 + 2 + 4 + 4 + 5);
    EXPECT_FLOAT_EQ(out[4], 45.0f);
    std::vector<float> neg(9);
    k::serial::conv2d_relu(s, in, w, std::vector<float>{-1000.0f}, neg);
    for (float v : neg) EXPECT_EQ(v, 0.0f);
}
