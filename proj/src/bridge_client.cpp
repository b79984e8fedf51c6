#include <algorithm>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"

namespace xsal::bridge {

BridgeClient::BridgeClient(std::unique_ptr<LineTransport> transport) : transport_(std::move(transport)) {}

nlohmann::json BridgeClient::call(const nlohmann::json& request) {
    transport_->write_line(request.dump());
    ++requests_;
    const auto line = transport_->read_line();
    if (!line) throw Error(ErrorCode::connection_lost, "bridge server closed the connection");
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(*line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::protocol_error, std::string("reply is not JSON: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("ok") || !reply.at("ok").is_boolean())
        throw Error(ErrorCode::protocol_error, "reply lacks a boolean 'ok' field");
    return reply;
}

nlohmann::json BridgeClient::call_ok(const nlohmann::json& request) {
    auto reply = call(request);
    if (!reply.at("ok").get<bool>()) {
        const auto msg = reply.contains("error") && reply.at("error").is_string() ? reply.at("error").get<std::string>()
                                                                                 : std::string("unspecified error");
        throw Error(ErrorCode::adapter_error, msg);
    }
    return reply;
}

void BridgeClient::require_handshake() const {
    if (!hello_) throw Error(ErrorCode::protocol_error, "handshake must complete before other requests");
}

HelloInfo BridgeClient::handshake(int version) {
    const auto reply = call({{"op", "hello"}, {"version", version}});
    if (!reply.at("ok").get<bool>()) {
        const auto msg = reply.value("error", std::string("handshake refused"));
        throw Error(ErrorCode::incompatible_peer, msg);
    }
    if (!reply.contains("version") || !reply.at("version").is_number_integer())
        throw Error(ErrorCode::protocol_error, "hello reply lacks a version");
    HelloInfo info;
    info.version = reply.at("version").get<int>();
    if (info.version != version)
        throw Error(ErrorCode::incompatible_peer, "server speaks protocol version " + std::to_string(info.version) +
                                                      ", client requested " + std::to_string(version));
    if (!reply.contains("capabilities")) throw Error(ErrorCode::protocol_error, "hello reply lacks capabilities");
    info.capabilities = parse_capabilities(reply.at("capabilities"));
    const auto& input = reply.value("input", nlohmann::json());
    if (!input.is_array() || input.size() != 3 ||
        !std::all_of(input.begin(), input.end(), [](auto& v) { return v.is_number_integer() && v.template get<int>() > 0; }))
        throw Error(ErrorCode::protocol_error, "hello reply input must be [C,H,W]");
    info.input = {input[0].get<int>(), input[1].get<int>(), input[2].get<int>()};
    info.name = reply.value("name", std::string());
    hello_ = info;
    return info;
}

std::vector<Detection> BridgeClient::detect(const Image& image) {
    require_handshake();
    const auto reply = call_ok({{"op", "detect"}, {"image", encode_image(image)}});
    if (!reply.contains("detections") || !reply.at("detections").is_array())
        throw Error(ErrorCode::protocol_error, "detect reply lacks a detections array");
    std::vector<Detection> dets;
    for (const auto& d : reply.at("detections")) dets.push_back(detection_from_json(d));
    return dets;
}

FeatureStack BridgeClient::features(const Image& image) {
    require_handshake();
    if (!hello_->capabilities.features)
        throw Error(ErrorCode::capability_missing, "server does not advertise features");
    const auto reply = call_ok({{"op", "features"}, {"image", encode_image(image)}});
    if (!reply.contains("features")) throw Error(ErrorCode::protocol_error, "features reply lacks a tensor");
    auto stack = decode_stack(reply.at("features"));
    feature_shape_ = std::array<std::size_t, 3>{stack.count(), static_cast<std::size_t>(stack.height()),
                                                static_cast<std::size_t>(stack.width())};
    return stack;
}

GradientStack BridgeClient::grad(const Image& image, std::size_t target_index) {
    require_handshake();
    if (!hello_->capabilities.grad_features)
        throw Error(ErrorCode::capability_missing, "server does not advertise grad_features");
    const auto reply = call_ok({{"op", "grad"}, {"image", encode_image(image)}, {"target", target_index}});
    if (!reply.contains("grads")) throw Error(ErrorCode::protocol_error, "grad reply lacks a tensor");
    auto stack = decode_stack(reply.at("grads"));
    if (feature_shape_) {
        const std::array<std::size_t, 3> shape{stack.count(), static_cast<std::size_t>(stack.height()),
                                               static_cast<std::size_t>(stack.width())};
        if (shape != *feature_shape_)
            throw Error(ErrorCode::protocol_error, "gradient shape does not match the feature shape");
    }
    return stack;
}

void BridgeClient::shutdown() {
    if (!hello_) return;
    call({{"op", "shutdown"}});
}

// ---------------------------------------------------------------------------

class BridgeAdapter::Lease {
public:
    explicit Lease(BridgeAdapter& owner) : owner_(owner), client_(owner.acquire()) {}
    ~Lease() { owner_.release(client_); }
    BridgeClient* operator->() { return &client_; }
    BridgeClient& get() { return client_; }

private:
    BridgeAdapter& owner_;
    BridgeClient& client_;
};

BridgeAdapter::BridgeAdapter(std::vector<std::unique_ptr<BridgeClient>> pool) : pool_(std::move(pool)) {
    if (pool_.empty()) throw Error(ErrorCode::invalid_parameter, "bridge pool needs at least one connection");
    for (auto& c : pool_) {
        const auto info = c->hello() ? *c->hello() : c->handshake();
        if (&c == &pool_.front()) {
            hello_ = info;
        } else if (info.input != hello_.input || info.capabilities != hello_.capabilities) {
            throw Error(ErrorCode::protocol_error, "pooled bridge connections disagree on their handshake");
        }
        idle_.push_back(c.get());
    }
}

std::unique_ptr<BridgeAdapter> BridgeAdapter::spawn(const std::string& command, int connections) {
    std::vector<std::unique_ptr<BridgeClient>> pool;
    for (int i = 0; i < std::max(connections, 1); ++i)
        pool.push_back(std::make_unique<BridgeClient>(ChildProcessTransport::spawn(command)));
    return std::make_unique<BridgeAdapter>(std::move(pool));
}

std::unique_ptr<BridgeAdapter> BridgeAdapter::tcp(const std::string& host, int port, int connections) {
    std::vector<std::unique_ptr<BridgeClient>> pool;
    for (int i = 0; i < std::max(connections, 1); ++i)
        pool.push_back(std::make_unique<BridgeClient>(connect_tcp(host, port)));
    return std::make_unique<BridgeAdapter>(std::move(pool));
}

std::string BridgeAdapter::describe() const {
    return "bridge:" + (hello_.name.empty() ? std::string("unnamed") : hello_.name);
}

BridgeClient& BridgeAdapter::acquire() {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [&] { return !idle_.empty(); });
    BridgeClient* c = idle_.back();
    idle_.pop_back();
    return *c;
}

void BridgeAdapter::release(BridgeClient& client) {
    {
        std::lock_guard lock(mutex_);
        idle_.push_back(&client);
    }
    idle_cv_.notify_one();
}

std::size_t BridgeAdapter::requests_sent() const {
    std::size_t n = 0;
    for (const auto& c : pool_) n += c->requests_sent();
    return n;
}

std::vector<Detection> BridgeAdapter::detect(const Image& image) {
    check_input(*this, image);
    Lease lease(*this);
    return lease->detect(image);
}

FeatureStack BridgeAdapter::features(const Image& image) {
    require_capability(*this, &Capabilities::features, "features");
    check_input(*this, image);
    Lease lease(*this);
    auto stack = lease->features(image);
    std::lock_guard lock(mutex_);
    feature_shape_ = std::array<std::size_t, 3>{stack.count(), static_cast<std::size_t>(stack.height()),
                                                static_cast<std::size_t>(stack.width())};
    return stack;
}

GradientStack BridgeAdapter::grad_features(const Image& image, const Detection& det) {
    require_capability(*this, &Capabilities::grad_features, "grad_features");
    check_input(*this, image);
    Lease lease(*this);
    // The grad target indexes the server's last detect reply, so both go over this connection.
    const auto dets = lease->detect(image);
    std::optional<std::size_t> index;
    for (std::size_t i = 0; i < dets.size() && !index; ++i)
        if (dets[i] == det) index = i;
    if (!index) index = match_box_index(dets, det);
    if (!index) throw Error(ErrorCode::no_match, "detection not present in the server's reply");
    auto grads = lease->grad(image, *index);
    std::optional<std::array<std::size_t, 3>> expected;
    {
        std::lock_guard lock(mutex_);
        expected = feature_shape_;
    }
    if (!expected) {
        const auto f = lease->features(image);
        expected = std::array<std::size_t, 3>{f.count(), static_cast<std::size_t>(f.height()),
                                              static_cast<std::size_t>(f.width())};
    }
    const std::array<std::size_t, 3> shape{grads.count(), static_cast<std::size_t>(grads.height()),
                                           static_cast<std::size_t>(grads.width())};
    if (shape != *expected) throw Error(ErrorCode::protocol_error, "gradient shape does not match the feature shape");
    return grads;
}

}  // namespace xsal::bridge
