#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <png.h>

#include "test_support.hpp"
#include "xsal/error.hpp"
#include "xsal/f32t.hpp"
#include "xsal/pipeline.hpp"

using namespace xsal;
using namespace xsal::test;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = XSAL_FIXTURE_DIR;

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("xsal_pipeline_" + std::to_string(counter_++))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

// Writes a PNG through libpng directly, for formats the library never emits.
void write_raw_png(const fs::path& path, int w, int h, int color, int depth, const std::vector<unsigned char>& rows,
                   bool palette = false) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    ASSERT_NE(fp, nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    if (palette) {
        png_color pal[2] = {{0, 0, 0}, {255, 255, 255}};
        png_set_PLTE(png, info, pal, 2);
    }
    png_write_info(png, info);
    const std::size_t stride = rows.size() / h;
    for (int y = 0; y < h; ++y) png_write_row(png, rows.data() + y * stride);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Image quantised_image(int w, int h, int channels, std::uint64_t seed) {
    auto img = random_image(w, h, seed, channels);
    for (auto& v : img.data()) v = std::round(v * 255.0f) / 255.0f;
    return img;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Png, GrayWhiteBecomesThreeChannelsOfOne) {
    TempDir dir;
    write_png(dir.path() / "g.png", Image(4, 3, 1, 1.0f));
    const auto img = load_image(dir.path() / "g.png", 4, 3);
    ASSERT_EQ(img.channels(), 3);
    for (float v : img.data()) EXPECT_EQ(v, 1.0f);
}

TEST(Png, SixteenBitGrayIsScaledToUnitRange) {
    TempDir dir;
    std::vector<unsigned char> rows{0xFF, 0xFF, 0x80, 0x00, 0x00, 0x00, 0x00, 0x01};
    write_raw_png(dir.path() / "g16.png", 2, 2, PNG_COLOR_TYPE_GRAY, 16, rows);
    const auto img = read_png(dir.path() / "g16.png");
    ASSERT_EQ(img.channels(), 1);
    EXPECT_FLOAT_EQ(img.at(0, 0, 0), 1.0f);
    EXPECT_FLOAT_EQ(img.at(0, 1, 0), 0x8000 / 65535.0f);
    EXPECT_FLOAT_EQ(img.at(0, 0, 1), 0.0f);
    EXPECT_FLOAT_EQ(img.at(0, 1, 1), 1 / 65535.0f);
}

TEST(Png, RgbRoundTripAndIdentityResize) {
    TempDir dir;
    const auto img = quantised_image(512, 512, 3, 1);
    write_png(dir.path() / "rgb.png", img);
    EXPECT_EQ(read_png(dir.path() / "rgb.png"), img);
    EXPECT_EQ(load_image(dir.path() / "rgb.png"), img);
}

TEST(Png, ResizeDelegatesToBilinear) {
    TempDir dir;
    const auto img = quantised_image(640, 480, 3, 2);
    write_png(dir.path() / "wide.png", img);
    const auto loaded = load_image(dir.path() / "wide.png");
    EXPECT_EQ(loaded.width(), 512);
    EXPECT_EQ(loaded.height(), 512);
    for (int c = 0; c < 3; ++c) {
        const std::vector<double> plane(img.plane(c).begin(), img.plane(c).end());
        const auto oracle = oracle_resize(plane, 640, 480, 512, 512);
        const auto got = loaded.plane(c);
        for (std::size_t i = 0; i < oracle.size(); i += 97) ASSERT_NEAR(got[i], oracle[i], 1e-6);
    }
    for (float v : loaded.data()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
    }
}

TEST(Png, UnsupportedAndMissingFiles) {
    TempDir dir;
    write_raw_png(dir.path() / "pal.png", 2, 1, PNG_COLOR_TYPE_PALETTE, 8, {0, 1}, true);
    write_raw_png(dir.path() / "rgba.png", 1, 1, PNG_COLOR_TYPE_RGB_ALPHA, 8, {1, 2, 3, 4});
    for (const char* name : {"pal.png", "rgba.png"}) {
        try {
            read_png(dir.path() / name);
            ADD_FAILURE() << name;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::format_error) << name;
        }
    }
    std::ofstream(dir.path() / "junk.png") << "definitely not a png";
    EXPECT_THROW(read_png(dir.path() / "junk.png"), Error);
    try {
        read_png(dir.path() / "missing.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io_error);
    }
}

TEST(Png, EncodingIsDeterministic) {
    const auto img = quantised_image(20, 10, 3, 3);
    EXPECT_EQ(encode_png(img), encode_png(img));
}

TEST(Dataset, SidecarAnnotationsAndSpectrum) {
    TempDir dir;
    write_png(dir.path() / "a.png", Image(40, 30, 1, 0.5f));
    std::ofstream(dir.path() / "a.json")
        << R"({"spectrum":"NIR","objects":[{"box":[1,2,30,29],"class":"person"}]})";
    write_png(dir.path() / "b.png", Image(40, 30, 3, 0.5f));
    const auto a = load_entry(dir.path() / "a.png");
    EXPECT_EQ(a.spectrum, Spectrum::NIR);
    ASSERT_EQ(a.annotations.size(), 1u);
    EXPECT_EQ(a.annotations[0].class_name, "person");
    EXPECT_EQ(a.annotations[0].box, (BBox{1, 2, 30, 29}));
    EXPECT_EQ(load_entry(dir.path() / "b.png", Spectrum::FIR).spectrum, Spectrum::FIR);
    EXPECT_EQ(scan_directory(dir.path()).size(), 2u);

    std::ofstream(dir.path() / "a.json") << R"({"objects":[{"box":[1,2,41,29],"class":"person"}]})";
    EXPECT_THROW(load_entry(dir.path() / "a.png"), Error);
    std::ofstream(dir.path() / "a.json") << R"({"spectrum":"UV","objects":[]})";
    EXPECT_THROW(load_entry(dir.path() / "a.png"), Error);
}

TEST(Dataset, SplitIsASeededPartition) {
    std::vector<DatasetEntry> entries;
    for (int i = 0; i < 10; ++i) entries.push_back({fs::path("img" + std::to_string(i) + ".png"), Spectrum::RGB, {}});
    const auto a = split_dataset(entries, 7);
    EXPECT_EQ(a.test.size(), 2u);
    EXPECT_EQ(a.train.size(), 8u);
    const auto b = split_dataset(entries, 7);
    for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].image_path, b.test[i].image_path);
    for (std::uint64_t seed = 0; seed < 20; ++seed)
        for (std::size_t n : {5u, 9u, 23u}) {
            std::vector<DatasetEntry> es(entries.begin(), entries.begin() + std::min<std::size_t>(n, 10));
            for (std::size_t i = es.size(); i < n; ++i) es.push_back({fs::path("x" + std::to_string(i)), {}, {}});
            const auto s = split_dataset(es, seed);
            std::set<fs::path> seen;
            for (const auto* part : {&s.test, &s.train})
                for (const auto& e : *part) ASSERT_TRUE(seen.insert(e.image_path).second);
            ASSERT_EQ(seen.size(), n);
            ASSERT_EQ(s.test.size(), static_cast<std::size_t>(std::lround(n * 0.2)));
        }
    entries.resize(4);
    try {
        split_dataset(entries, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_parameter);
    }
}

TEST(Overlay, ColourTableFormula) {
    const auto& t = color_table();
    for (int i = 0; i < 256; ++i) {
        const double x = i / 255.0;
        auto f = [](double v) { return std::clamp(v, 0.0, 1.0); };
        ASSERT_NEAR(t[i][0], f(1.5 - std::abs(4 * x - 3)), 1e-6);
        ASSERT_NEAR(t[i][1], f(1.5 - std::abs(4 * x - 2)), 1e-6);
        ASSERT_NEAR(t[i][2], f(1.5 - std::abs(4 * x - 1)), 1e-6);
    }
}

TEST(Overlay, ZeroSaliencyTintsWithFirstEntry) {
    const auto img = random_image(12, 12, 4);
    const BBox box{2, 2, 8, 8};
    const auto out = render_overlay(img, Tensor2D(12, 12), box);
    const auto& c0 = color_table()[0];
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) {
            const bool outline = x >= 2 && x < 8 && y >= 2 && y < 8 && (x < 4 || x >= 6 || y < 4 || y >= 6);
            for (int c = 0; c < 3; ++c) {
                const float expected = outline ? (c == 1 ? 1.0f : 0.0f) : 0.5f * img.at(c, x, y) + 0.5f * c0[c];
                ASSERT_EQ(out.at(c, x, y), expected) << x << "," << y;
            }
        }
}

TEST(Overlay, DeltaSaliencyIsHottestThere) {
    const auto img = constant_image(10, 10, 0.2f);
    Tensor2D s(10, 10);
    s.at(7, 1) = 3.0f;
    const auto out = render_overlay(img, s, BBox{0, 0, 1, 1});
    const auto& hot = color_table()[255];
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(c, 7, 1), 0.5f * 0.2f + 0.5f * hot[c]);
}

TEST(Overlay, MatchesGoldenPng) {
    const auto img = load_image(kFixtures / "overlay_input.png", 64, 64);
    Tensor2D s(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) s.at(x, y) = static_cast<float>(std::exp(-((x - 40) * (x - 40) + (y - 20) * (y - 20)) / 200.0));
    const auto png = encode_png(render_overlay(img, s, BBox{30, 10, 50, 30}));
    const auto golden = kFixtures / "overlay_golden.png";
    if (std::getenv("XSAL_REGENERATE_GOLDEN")) {
        std::ofstream(golden, std::ios::binary) << png;
        GTEST_SKIP() << "golden regenerated";
    }
    EXPECT_EQ(png, slurp(golden));
}

TEST(Methods, NamesAndConfigJsonRoundTrip) {
    for (auto m : {Method::gradcam, Method::gradcam_norelu, Method::rise, Method::sidu})
        EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_EQ(display_name(Method::gradcam), "Grad-CAM");
    EXPECT_EQ(display_name(Method::rise), "RISE");
    EXPECT_EQ(display_name(Method::sidu), "SIDU");
    EXPECT_THROW(parse_method("lime"), Error);

    RiseConfig r;
    r.n_masks = 123;
    r.seed = 9;
    r.normalization = RiseNormalization::empirical;
    const auto r2 = rise_config_from_json(to_json(r));
    EXPECT_EQ(r2.n_masks, 123);
    EXPECT_EQ(r2.seed, 9u);
    EXPECT_EQ(r2.normalization, RiseNormalization::empirical);
    SiduConfig s;
    s.sigma = 0.5;
    s.binarize = false;
    EXPECT_EQ(sidu_config_from_json(to_json(s)).sigma, 0.5);
    EXPECT_FALSE(sidu_config_from_json(to_json(s)).binarize);
    GradCamConfig g;
    g.relu_placement = ReluPlacement::after_sum;
    EXPECT_EQ(gradcam_config_from_json(to_json(g)).relu_placement, ReluPlacement::after_sum);
    MetricConfig mc;
    mc.steps = 17;
    mc.insertion_base = InsertionBase::fill;
    EXPECT_EQ(metric_config_from_json(to_json(mc)).steps, 17);
    EXPECT_EQ(metric_config_from_json(to_json(mc)).insertion_base, InsertionBase::fill);
}

TEST(Methods, NoReluVariantMatchesOracle) {
    MicroDetConfig cfg{32, 32, 8, 2};
    auto adapter = make_micro_adapter(cfg, seeded_random_weights(cfg, 1));
    const auto img = random_image(32, 32, 1);
    const auto target = select_top_box(adapter.detect(img));
    const auto s = run_method(Method::gradcam_norelu, adapter, img, target, {});
    const auto oracle =
        oracle_gradcam(adapter.features(img), adapter.grad_features(img, target), OracleRelu::none, 32, 32);
    for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_NEAR(s[i], oracle[i], 1e-6);
}

TEST(Adapters, SpecParsing) {
    EXPECT_EQ(make_adapter("micro:brightness", 32, 32)->input_shape(), (InputShape{3, 32, 32}));
    EXPECT_EQ(make_adapter("micro:brightness:6:-2", 16, 16)->capabilities(), (Capabilities{true, true, true}));
    EXPECT_EQ(make_adapter("micro:random:5", 16, 16)->describe(), make_adapter("micro:random:5", 16, 16)->describe());
    EXPECT_EQ(make_adapter("constant:0.25", 8, 8)->detect(Image(8, 8, 3))[0].score, 0.25f);
    EXPECT_THROW(make_adapter("nonsense", 8, 8), Error);
    EXPECT_THROW(make_adapter("constant:2", 8, 8), Error);
    EXPECT_THROW(make_adapter("micro:random", 8, 8), Error);
}

TEST(Manifest, DigestsAndRoundTrip) {
    EXPECT_EQ(digest_hex(""), "cbf29ce484222325");
    EXPECT_EQ(digest_hex("a"), "af63dc4c8601ec8c");
    EXPECT_EQ(digest_hex("foobar"), "85944171f73967e8");

    TempDir dir;
    RunManifest m;
    m.method = "rise";
    m.config = to_json(RiseConfig{});
    m.seed = 42;
    m.adapter_spec = "micro:brightness";
    m.adapter_description = "micro brightness";
    m.input_path = dir.path() / "x.png";
    m.input_digest = "0123";
    m.input_size = 64;
    m.target = {{1, 2, 17, 18}, 0, 0.75f};
    m.outputs = {{"saliency", "x.f32t"}};
    m.timings = {{"explain_s", 0.5}};
    m.write(dir.path() / "m.json");
    const auto r = RunManifest::read(dir.path() / "m.json");
    EXPECT_EQ(r.to_json(), m.to_json());
    EXPECT_EQ(r.target, m.target);
}

TEST(Summary, MeanStdFormatting) {
    const std::vector<double> v{0.1, 0.2, 0.3};
    EXPECT_NEAR(mean_of(v), 0.2, 1e-12);
    EXPECT_NEAR(stddev_of(v), 0.1, 1e-12);
    EXPECT_EQ(format_mean_std(v), "0.20±0.10");
    const std::vector<double> one{0.5};
    EXPECT_EQ(stddev_of(one), 0.0);
    EXPECT_EQ(format_mean_std(one), "0.50±0.00");
}
