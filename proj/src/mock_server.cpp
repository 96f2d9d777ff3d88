#include <httplib.h>

#include "mmsc/mock_server.hpp"

#include <chrono>
#include <thread>

#include <json.hpp>

#include "mmsc/error.hpp"
#include "mmsc/hash.hpp"

namespace mmsc {

namespace {

// The wire carries the instruction text but not the prompt id; recover it
// by looking for each template's method text.
PromptId detect_prompt(const std::string& instruction) {
    for (PromptId id : kAllPrompts) {
        const PromptTemplate& tmpl = prompt_template(id);
        if (instruction.find(tmpl.method_text) != std::string::npos) return id;
    }
    return PromptId::Direct;
}

} // namespace

struct MockServer::Impl {
    MockBackend::Script script;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::string host;
};

MockServer::MockServer(MockBackend::Script script) : impl_(std::make_unique<Impl>()) {
    impl_->script = std::move(script);
}

MockServer::~MockServer() {
    stop();
}

int MockServer::start(const std::string& host, int port) {
    Impl& impl = *impl_;
    impl.host = host;

    impl.server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    impl.server.Post("/v1/chat/completions", [&impl](const httplib::Request& req,
                                                     httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            res.status = 400;
            res.set_content(R"({"error":"request body is not JSON"})", "application/json");
            return;
        }
        const std::string user = body.value("user", "");
        std::string instruction;
        if (body.contains("messages") && body["messages"].is_array() && !body["messages"].empty()) {
            const auto& content = body["messages"][0]["content"];
            if (content.is_string()) {
                instruction = content.get<std::string>();
            } else if (content.is_array()) {
                for (const auto& part : content) {
                    if (part.is_object() && part.value("type", "") == "text") {
                        instruction = part.value("text", "");
                        break;
                    }
                }
            }
        }

        const PromptId prompt = detect_prompt(instruction);
        const std::string prompt_name(to_string(prompt));
        std::string text;
        bool scripted = false;
        for (const std::string& key : {user + "/" + prompt_name, user, std::string("default")}) {
            auto it = impl.script.find(key);
            if (it != impl.script.end()) {
                text = it->second;
                scripted = true;
                break;
            }
        }
        if (!scripted) {
            text = MockBackend::synthesize(user + "|" + prompt_name + "|" +
                                               stable_hash_hex(req.body),
                                           prompt);
        }

        nlohmann::ordered_json reply;
        reply["id"] = "mock-" + stable_hash_hex(req.body).substr(0, 8);
        reply["object"] = "chat.completion";
        reply["model"] = body.value("model", "mock");
        reply["choices"] = nlohmann::ordered_json::array(
            {{{"index", 0},
              {"message", {{"role", "assistant"}, {"content", text}}},
              {"finish_reason", "stop"}}});
        res.set_content(reply.dump(), "application/json");
    });

    if (port == 0) {
        impl.port = impl.server.bind_to_any_port(host);
        if (impl.port <= 0) raise(ErrorCode::IoError, "could not bind mock server");
    } else {
        if (!impl.server.bind_to_port(host, port)) {
            raise(ErrorCode::IoError, "could not bind mock server to port " + std::to_string(port));
        }
        impl.port = port;
    }
    impl.thread = std::thread([&impl] { impl.server.listen_after_bind(); });
    while (!impl.server.is_running()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return impl.port;
}

void MockServer::stop() {
    if (!impl_) return;
    if (impl_->server.is_running()) impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int MockServer::port() const {
    return impl_->port;
}

std::string MockServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

} // namespace mmsc
