// Bridge server around in-process adapters: the micro-detector, a fixed-reply
// fixture, or deliberately faulty variants used by the protocol tests.

#include <atomic>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>
#include <vector>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"
#include "xsal/micro_detector.hpp"

namespace {

using namespace xsal;

class FixtureAdapter final : public DetectorAdapter {
public:
    FixtureAdapter(InputShape shape, std::vector<Detection> dets) : shape_(shape), dets_(std::move(dets)) {}
    Capabilities capabilities() const override { return {}; }
    InputShape input_shape() const override { return shape_; }
    std::string describe() const override { return "fixture"; }
    std::vector<Detection> detect(const Image&) override { return dets_; }

private:
    InputShape shape_;
    std::vector<Detection> dets_;
};

// Returns gradients with one map fewer than the features.
class MismatchedGradAdapter final : public DetectorAdapter {
public:
    explicit MismatchedGradAdapter(MicroAdapter inner) : inner_(std::move(inner)) {}
    Capabilities capabilities() const override { return inner_.capabilities(); }
    InputShape input_shape() const override { return inner_.input_shape(); }
    std::string describe() const override { return "micro-bad-grad"; }
    std::vector<Detection> detect(const Image& i) override { return inner_.detect(i); }
    FeatureStack features(const Image& i) override { return inner_.features(i); }
    GradientStack grad_features(const Image& i, const Detection& d) override {
        auto maps = inner_.grad_features(i, d).maps();
        if (maps.size() > 1) maps.pop_back();
        else maps.push_back(maps.back());
        return GradientStack(std::move(maps));
    }

private:
    MicroAdapter inner_;
};

// Each accepted connection gets its own handler thread and protocol state.
// A shutdown request on any connection stops the listener.
int serve_tcp(DetectorAdapter& adapter, const bridge::ServerOptions& opts, int port) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    socklen_t len = sizeof addr;
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listener, 16) != 0 ||
        ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        std::cerr << "cannot listen on port " << port << "\n";
        return 1;
    }
    std::cout << "listening on " << ntohs(addr.sin_port) << std::endl;

    std::atomic<bool> stop{false};
    std::vector<std::thread> handlers;
    while (!stop) {
        const int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) break;
        handlers.emplace_back([&adapter, &opts, &stop, listener, fd] {
            bridge::BridgeServer server(adapter, opts);
            bridge::FdTransport t(fd, fd);
            server.serve(t);
            if (server.shutdown_requested() && !stop.exchange(true)) ::shutdown(listener, SHUT_RDWR);
        });
    }
    for (auto& h : handlers) h.join();
    ::close(listener);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bridge protocol server wrapping in-process detectors"};
    std::string preset = "brightness";
    std::uint64_t seed = 0;
    int width = 64;
    int height = 64;
    std::string weights_dir;
    std::string echo_file;
    bool no_features = false;
    bool no_grad = false;
    bool bad_grad = false;
    int version = bridge::kProtocolVersion;
    int port = -1;
    std::string name = "xsal-bridge-server";
    app.add_option("--preset", preset, "brightness | random")->check(CLI::IsMember({"brightness", "random"}));
    app.add_option("--seed", seed, "Seed for the random preset");
    app.add_option("--width", width);
    app.add_option("--height", height);
    app.add_option("--weights", weights_dir, "Load micro-detector weights from a directory");
    app.add_option("--echo", echo_file, "Serve a fixed detection list from a JSON fixture");
    app.add_flag("--no-features", no_features, "Advertise detect only");
    app.add_flag("--no-grad", no_grad, "Do not advertise grad_features");
    app.add_flag("--bad-grad-shape", bad_grad, "Reply to grad with a mis-shaped stack");
    app.add_option("--protocol-version", version);
    app.add_option("--tcp", port, "Listen on 127.0.0.1:PORT instead of stdio (0 picks a free port)");
    app.add_option("--name", name);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::unique_ptr<DetectorAdapter> adapter;
        if (!echo_file.empty()) {
            std::ifstream in(echo_file);
            nlohmann::json j;
            in >> j;
            std::vector<Detection> dets;
            for (const auto& d : j.at("detections")) dets.push_back(detection_from_json(d));
            const auto& shape = j.at("input");
            adapter = std::make_unique<FixtureAdapter>(InputShape{shape[0], shape[1], shape[2]}, std::move(dets));
        } else {
            std::unique_ptr<MicroDetector> det;
            if (!weights_dir.empty()) {
                det = std::make_unique<MicroDetector>(MicroDetector::load(weights_dir));
            } else {
                MicroDetConfig cfg;
                cfg.width = width;
                cfg.height = height;
                det = std::make_unique<MicroDetector>(
                    cfg, preset == "random" ? seeded_random_weights(cfg, seed) : brightness_weights(cfg, 8.0, -4.0));
            }
            MicroAdapter micro(*det, "micro");
            if (bad_grad) adapter = std::make_unique<MismatchedGradAdapter>(std::move(micro));
            else adapter = std::make_unique<MicroAdapter>(std::move(micro));
        }
        bridge::ServerOptions opts;
        opts.version = version;
        opts.name = name;
        auto caps = adapter->capabilities();
        if (no_features) caps.features = caps.grad_features = false;
        if (no_grad) caps.grad_features = false;
        opts.advertise = caps;
        if (port >= 0) return serve_tcp(*adapter, opts, port);
        bridge::BridgeServer server(*adapter, opts);
        std::ios::sync_with_stdio(false);
        server.serve(std::cin, std::cout);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "xsal-bridge-server: " << e.what() << "\n";
        return 1;
    }
}
