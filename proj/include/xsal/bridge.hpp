#pragma once

// Line-delimited JSON protocol that lets an external process serve the
// DetectorAdapter contract. One request, one reply, strictly sequential per
// connection. Float payloads travel as base64 of little-endian IEEE-754 floats:
//   {"shape":[C,H,W],"data":"..."}
//
//   -> {"op":"hello","version":1}
//   <- {"ok":true,"version":1,"capabilities":["detect",...],"input":[C,H,W],"name":"..."}
//   -> {"op":"detect","image":{...}}
//   <- {"ok":true,"detections":[{"box":[x1,y1,x2,y2],"class_id":0,"score":0.9},...]}
//   -> {"op":"features","image":{...}}
//   <- {"ok":true,"features":{"shape":[N,h,w],"data":"..."}}
//   -> {"op":"grad","image":{...},"target":i}     i indexes the last detect reply
//   <- {"ok":true,"grads":{"shape":[N,h,w],"data":"..."}}
//   -> {"op":"shutdown"}
//   <- {"ok":true}
// Failures: {"ok":false,"error":"message"}.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsal/adapter.hpp"

namespace xsal::bridge {

inline constexpr int kProtocolVersion = 1;

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

nlohmann::json encode_image(const Image& image);
Image decode_image(const nlohmann::json& j);
nlohmann::json encode_stack(const MapStack& stack);
MapStack decode_stack(const nlohmann::json& j);

std::vector<std::string> capability_names(const Capabilities& caps);
Capabilities parse_capabilities(const nlohmann::json& names);

class LineTransport {
public:
    virtual ~LineTransport() = default;
    virtual void write_line(const std::string& line) = 0;
    // std::nullopt on end of stream.
    virtual std::optional<std::string> read_line() = 0;
};

// Reads and writes newline-terminated records on raw file descriptors.
class FdTransport : public LineTransport {
public:
    FdTransport(int read_fd, int write_fd, bool owns = true);
    ~FdTransport() override;
    FdTransport(const FdTransport&) = delete;
    FdTransport& operator=(const FdTransport&) = delete;

    void write_line(const std::string& line) override;
    std::optional<std::string> read_line() override;

protected:
    void close_fds();

private:
    int read_fd_;
    int write_fd_;
    bool owns_;
    std::string buffer_;
};

// Spawns `/bin/sh -c command` and talks over its stdin/stdout.
class ChildProcessTransport final : public FdTransport {
public:
    static std::unique_ptr<ChildProcessTransport> spawn(const std::string& command);
    ~ChildProcessTransport() override;

private:
    ChildProcessTransport(int read_fd, int write_fd, int pid);
    int pid_;
};

std::unique_ptr<FdTransport> connect_tcp(const std::string& host, int port);

struct HelloInfo {
    int version = 0;
    Capabilities capabilities;
    InputShape input;
    std::string name;
};

class BridgeClient {
public:
    explicit BridgeClient(std::unique_ptr<LineTransport> transport);

    HelloInfo handshake(int version = kProtocolVersion);
    std::vector<Detection> detect(const Image& image);
    FeatureStack features(const Image& image);
    GradientStack grad(const Image& image, std::size_t target_index);
    void shutdown();

    const std::optional<HelloInfo>& hello() const noexcept { return hello_; }
    std::size_t requests_sent() const noexcept { return requests_; }

    // Raw exchange, used by the conformance checker.
    nlohmann::json call(const nlohmann::json& request);

private:
    nlohmann::json call_ok(const nlohmann::json& request);
    void require_handshake() const;

    std::unique_ptr<LineTransport> transport_;
    std::optional<HelloInfo> hello_;
    std::optional<std::array<std::size_t, 3>> feature_shape_;  // N, h, w of the last features reply
    std::size_t requests_ = 0;
};

// DetectorAdapter over one or more connections to the same server. With a
// single connection it reports concurrent() == false; with a pool every call
// checks out its own connection.
class BridgeAdapter final : public DetectorAdapter {
public:
    explicit BridgeAdapter(std::vector<std::unique_ptr<BridgeClient>> pool);

    static std::unique_ptr<BridgeAdapter> spawn(const std::string& command, int connections = 1);
    static std::unique_ptr<BridgeAdapter> tcp(const std::string& host, int port, int connections = 1);

    Capabilities capabilities() const override { return hello_.capabilities; }
    InputShape input_shape() const override { return hello_.input; }
    bool concurrent() const override { return pool_.size() > 1; }
    std::string describe() const override;

    std::vector<Detection> detect(const Image& image) override;
    FeatureStack features(const Image& image) override;
    GradientStack grad_features(const Image& image, const Detection& det) override;

    std::size_t requests_sent() const;

private:
    class Lease;
    BridgeClient& acquire();
    void release(BridgeClient& client);

    std::vector<std::unique_ptr<BridgeClient>> pool_;
    std::vector<BridgeClient*> idle_;
    std::mutex mutex_;
    std::condition_variable idle_cv_;
    HelloInfo hello_;
    std::optional<std::array<std::size_t, 3>> feature_shape_;
};

struct ServerOptions {
    int version = kProtocolVersion;
    std::string name = "xsal-bridge-server";
    // Capabilities advertised; defaults to the adapter's own.
    std::optional<Capabilities> advertise;
};

// Request handler for any in-process adapter.
class BridgeServer {
public:
    BridgeServer(DetectorAdapter& adapter, ServerOptions opts = {});

    // One reply line per request line.
    std::string handle(const std::string& line);
    bool shutdown_requested() const noexcept { return shutdown_; }

    void serve(std::istream& in, std::ostream& out);
    void serve(LineTransport& transport);

private:
    nlohmann::json dispatch(const nlohmann::json& req);
    const std::vector<Detection>& detections_for(const Image& image);

    DetectorAdapter& adapter_;
    ServerOptions opts_;
    Capabilities caps_;
    bool greeted_ = false;
    bool shutdown_ = false;
    std::optional<Image> last_image_;
    std::vector<Detection> last_dets_;
};

}  // namespace xsal::bridge

namespace xsal::bridge {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

using Connector = std::function<std::unique_ptr<LineTransport>()>;

// Protocol conformance suite run against fresh connections from `connect`:
// handshake, version refusal, pre-handshake refusal, detect schema and
// repeatability, features/grad shapes when advertised, error replies for bad
// target index, unknown op, malformed JSON and wrong image shape, shutdown.
std::vector<CheckResult> check_conformance(const Connector& connect);

}  // namespace xsal::bridge
