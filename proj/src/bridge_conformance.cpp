#include "xsal/bridge.hpp"
#include "xsal/error.hpp"

namespace xsal::bridge {

namespace {

Image probe_image(const InputShape& s, float level) {
    Image img(s.width, s.height, s.channels);
    for (int c = 0; c < s.channels; ++c)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                img.at(c, x, y) = level * static_cast<float>((x + y + c) % 7) / 6.0f;
    return img;
}

bool refused(const nlohmann::json& reply) {
    return reply.is_object() && reply.contains("ok") && reply.at("ok") == false && reply.contains("error") &&
           reply.at("error").is_string();
}

}  // namespace

std::vector<CheckResult> check_conformance(const Connector& connect) {
    std::vector<CheckResult> results;
    auto run = [&](const std::string& name, auto&& body) {
        CheckResult r{name, false, ""};
        try {
            r.detail = body();
            r.passed = true;
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        results.push_back(std::move(r));
    };
    auto expect = [](bool cond, const std::string& what) {
        if (!cond) throw Error(ErrorCode::protocol_error, what);
    };

    run("pre-handshake request refused", [&] {
        BridgeClient c(connect());
        const auto reply = c.call({{"op", "detect"}, {"image", encode_image(Image(4, 4, 3))}});
        expect(refused(reply), "server answered a request before the handshake");
        return std::string("refused");
    });

    run("version 2 hello refused", [&] {
        BridgeClient c(connect());
        try {
            c.handshake(kProtocolVersion + 1);
        } catch (const Error& e) {
            expect(e.code() == ErrorCode::incompatible_peer, "wrong error kind: " + std::string(e.what()));
            return std::string("incompatible-peer");
        }
        throw Error(ErrorCode::protocol_error, "server accepted an unknown protocol version");
    });

    BridgeClient client(connect());
    HelloInfo hello;
    run("hello", [&] {
        hello = client.handshake();
        return "capabilities=" + nlohmann::json(capability_names(hello.capabilities)).dump() + " input=[" +
               std::to_string(hello.input.channels) + "," + std::to_string(hello.input.height) + "," +
               std::to_string(hello.input.width) + "]";
    });
    if (!client.hello()) return results;

    const Image image = probe_image(hello.input, 0.8f);
    std::vector<Detection> dets;
    run("detect schema", [&] {
        dets = client.detect(image);
        return std::to_string(dets.size()) + " detections, scores in [0,1]";
    });
    run("detect repeatable", [&] {
        const auto again = client.detect(image);
        expect(again == dets, "identical requests produced different detections");
        return std::string("identical");
    });

    std::optional<MapStack> features;
    if (hello.capabilities.features) {
        run("features shape", [&] {
            features = client.features(image);
            return "[" + std::to_string(features->count()) + "," + std::to_string(features->height()) + "," +
                   std::to_string(features->width()) + "]";
        });
    }
    if (hello.capabilities.grad_features && !dets.empty()) {
        run("grad shape matches features", [&] {
            client.detect(image);
            const auto grads = client.grad(image, 0);
            expect(features.has_value() && grads.same_shape(*features), "grad shape differs from features");
            return std::string("match");
        });
        run("grad unknown target refused", [&] {
            const auto reply = client.call({{"op", "grad"}, {"image", encode_image(image)}, {"target", dets.size() + 1000}});
            expect(refused(reply), "server accepted an out-of-range target index");
            return std::string("refused");
        });
    }
    run("unknown op refused", [&] {
        expect(refused(client.call({{"op", "no-such-op"}})), "unknown op was not refused");
        return std::string("refused");
    });
    run("wrong image shape refused", [&] {
        const InputShape bad{hello.input.channels, hello.input.height + 4, hello.input.width + 4};
        expect(refused(client.call({{"op", "detect"}, {"image", encode_image(probe_image(bad, 0.5f))}})),
               "mis-sized image was accepted");
        return std::string("refused");
    });
    run("malformed JSON refused", [&] {
        // BridgeClient only sends valid JSON, so talk to the transport directly.
        auto t = connect();
        t->write_line("{\"op\":\"hello\",\"version\":1}");
        expect(t->read_line().has_value(), "no hello reply");
        t->write_line("{not json");
        const auto line = t->read_line();
        expect(line.has_value(), "connection dropped on malformed JSON");
        expect(refused(nlohmann::json::parse(*line)), "malformed JSON was not refused");
        return std::string("refused");
    });
    run("shutdown", [&] {
        const auto reply = client.call({{"op", "shutdown"}});
        expect(reply.at("ok") == true, "shutdown not acknowledged");
        return std::string("acknowledged");
    });
    return results;
}

}  // namespace xsal::bridge
