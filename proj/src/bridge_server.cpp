#include <istream>
#include <ostream>

#include "xsal/bridge.hpp"
#include "xsal/error.hpp"

namespace xsal::bridge {

BridgeServer::BridgeServer(DetectorAdapter& adapter, ServerOptions opts)
    : adapter_(adapter), opts_(std::move(opts)), caps_(opts_.advertise.value_or(adapter.capabilities())) {}

std::string BridgeServer::handle(const std::string& line) {
    nlohmann::json reply;
    try {
        nlohmann::json req;
        try {
            req = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw Error(ErrorCode::protocol_error, "request is not valid JSON");
        }
        reply = dispatch(req);
    } catch (const Error& e) {
        reply = {{"ok", false}, {"error", e.what()}};
    } catch (const std::exception& e) {
        reply = {{"ok", false}, {"error", std::string("adapter-error: ") + e.what()}};
    }
    return reply.dump();
}

const std::vector<Detection>& BridgeServer::detections_for(const Image& image) {
    if (!last_image_ || !(*last_image_ == image)) {
        last_dets_ = adapter_.detect(image);
        last_image_ = image;
    }
    return last_dets_;
}

nlohmann::json BridgeServer::dispatch(const nlohmann::json& req) {
    if (!req.is_object() || !req.contains("op") || !req.at("op").is_string())
        throw Error(ErrorCode::protocol_error, "request needs a string 'op'");
    const auto op = req.at("op").get<std::string>();

    if (op == "hello") {
        const int requested = req.value("version", 0);
        if (requested != opts_.version) {
            return {{"ok", false},
                    {"version", opts_.version},
                    {"error", "incompatible-peer: server speaks version " + std::to_string(opts_.version)}};
        }
        greeted_ = true;
        const auto in = adapter_.input_shape();
        return {{"ok", true},
                {"version", opts_.version},
                {"capabilities", capability_names(caps_)},
                {"input", {in.channels, in.height, in.width}},
                {"name", opts_.name}};
    }
    if (!greeted_) throw Error(ErrorCode::protocol_error, "handshake required before '" + op + "'");
    if (op == "shutdown") {
        shutdown_ = true;
        return {{"ok", true}};
    }
    if (op != "detect" && op != "features" && op != "grad")
        throw Error(ErrorCode::protocol_error, "unknown op '" + op + "'");
    if (!req.contains("image")) throw Error(ErrorCode::protocol_error, "'" + op + "' needs an image");
    const Image image = decode_image(req.at("image"));
    check_input(adapter_, image);

    if (op == "detect") {
        nlohmann::json dets = nlohmann::json::array();
        for (const auto& d : detections_for(image)) dets.push_back(to_json(d));
        return {{"ok", true}, {"detections", std::move(dets)}};
    }
    if (op == "features") {
        if (!caps_.features) throw Error(ErrorCode::capability_missing, "features not offered");
        return {{"ok", true}, {"features", encode_stack(adapter_.features(image))}};
    }
    if (op == "grad") {
        if (!caps_.grad_features) throw Error(ErrorCode::capability_missing, "grad_features not offered");
        if (!req.contains("target") || !req.at("target").is_number_integer())
            throw Error(ErrorCode::protocol_error, "grad needs an integer 'target'");
        const auto& dets = detections_for(image);
        const auto index = req.at("target").get<long long>();
        if (index < 0 || static_cast<std::size_t>(index) >= dets.size())
            throw Error(ErrorCode::adapter_error, "unknown target index " + std::to_string(index));
        return {{"ok", true}, {"grads", encode_stack(adapter_.grad_features(image, dets[index]))}};
    }
    return {};
}

void BridgeServer::serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (!shutdown_ && std::getline(in, line)) {
        if (line.empty()) continue;
        out << handle(line) << '\n' << std::flush;
    }
}

void BridgeServer::serve(LineTransport& transport) {
    while (!shutdown_) {
        auto line = transport.read_line();
        if (!line) break;
        if (line->empty()) continue;
        transport.write_line(handle(*line));
    }
}

}  // namespace xsal::bridge
