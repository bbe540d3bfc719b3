#pragma once

#include "inrshape/generation.hpp"
#include "inrshape/mesh.hpp"
#include "inrshape/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>

namespace inrshape {

struct ServiceOptions {
    std::size_t default_resolution = 48;
    std::size_t max_resolution = 256;
    std::size_t max_payload_bytes = 16u << 20;
    double clamp_sigma = 3.0;
    Precision precision = Precision::Float32;
};

struct Response {
    int status = 200;
    std::string body;
};

/// Indexed triangle list as JSON. Faces past the byte cap are dropped (and
/// unreferenced vertices with them) and `truncated` is set.
nlohmann::json mesh_payload(const TriMesh& mesh, std::size_t max_bytes);

/// Transport-independent request handler over one frozen checkpoint.
/// Thread-safe; per-session state is serialized per session.
class Service {
public:
    explicit Service(ServiceOptions options = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Installs a model; replaces any previous one and clears sessions.
    void set_model(ShapeModel model, std::string checkpoint_id = "memory");
    void load(const std::filesystem::path& checkpoint);
    /// Loads on a background thread; requests answer 503 until it finishes.
    void load_async(const std::filesystem::path& checkpoint);
    void wait_loaded();
    bool ready() const;

    Response handle(std::string_view method, std::string_view path, std::string_view body);

private:
    struct Loaded {
        ShapeModel model;
        LatentSampler sampler;
        std::string id;
    };
    struct Session {
        std::mutex mutex;
        std::string checkpoint_id;
        std::optional<LatentCode> base;
        nlohmann::json last_features;
        std::size_t last_resolution = 0;
        std::string cached_body;
    };

    std::shared_ptr<const Loaded> loaded() const;
    Response shapes(const Loaded& m) const;
    Response reconstruct(const Loaded& m, const nlohmann::json& body) const;
    Response generate(const Loaded& m, const nlohmann::json& body) const;
    Response edit(const Loaded& m, const nlohmann::json& body);
    std::string edit_body(const Loaded& m, const LatentCode& base, const nlohmann::json& features,
                          std::size_t resolution) const;
    std::size_t resolution(const nlohmann::json& body) const;
    SynthesisOptions synthesis(std::size_t resolution) const;

    ServiceOptions options_;
    mutable std::shared_mutex model_mutex_;
    std::shared_ptr<const Loaded> loaded_;
    std::optional<std::string> load_error_;
    std::thread loader_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Blocking HTTP front end for a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service, std::size_t max_body_bytes = 1u << 20);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds `host:port` (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace inrshape
