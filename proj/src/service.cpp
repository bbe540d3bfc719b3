#include "inrshape/service.hpp"

#include "inrshape/errors.hpp"
#include "inrshape/features.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace inrshape {

namespace {

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

Response error_response(int status, std::string_view code, const std::string& message) {
    nlohmann::json j = {{"error", {{"code", code}, {"message", message}}}};
    return {status, j.dump()};
}

HttpError from_error(const Error& e) {
    switch (e.code()) {
        case ErrorCode::NotFound: return {404, "unknown_shape", e.what()};
        case ErrorCode::UnsupportedModel: return {409, "unconditioned_model", e.what()};
        case ErrorCode::Parameter:
        case ErrorCode::Config:
        case ErrorCode::Shape: return {400, "invalid_request", e.what()};
        case ErrorCode::Numerical: return {422, "numerical_error", e.what()};
        default: return {500, "internal_error", e.what()};
    }
}

std::string fingerprint(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

TriMesh face_prefix(const TriMesh& mesh, std::size_t faces) {
    TriMesh out;
    std::vector<std::int64_t> remap(mesh.vertices.size(), -1);
    for (std::size_t f = 0; f < faces; ++f) {
        Face tri{};
        for (int c = 0; c < 3; ++c) {
            const auto v = mesh.faces[f][c];
            if (remap[v] < 0) {
                remap[v] = std::int64_t(out.vertices.size());
                out.vertices.push_back(mesh.vertices[v]);
            }
            tri[c] = std::uint32_t(remap[v]);
        }
        out.faces.push_back(tri);
    }
    return out;
}

nlohmann::json payload_json(const TriMesh& mesh, bool truncated, std::size_t total_faces) {
    std::vector<double> positions;
    positions.reserve(mesh.vertices.size() * 3);
    for (const auto& v : mesh.vertices) positions.insert(positions.end(), {v.x(), v.y(), v.z()});
    std::vector<std::uint32_t> indices;
    indices.reserve(mesh.faces.size() * 3);
    for (const auto& f : mesh.faces) indices.insert(indices.end(), {f[0], f[1], f[2]});
    return {{"positions", positions},
            {"indices", indices},
            {"vertex_count", mesh.vertices.size()},
            {"face_count", mesh.faces.size()},
            {"total_face_count", total_faces},
            {"truncated", truncated}};
}

Feature feature_key(const std::string& key) {
    const auto f = parse_feature(key);
    if (!f) fail(ErrorCode::Parameter, "unknown feature '" + key + "'");
    return *f;
}

std::size_t fixed_slot_or_fail(const ShapeModel& model, Feature f) {
    const int slot = model.fixed_slot(f);
    if (slot < 0) fail(ErrorCode::Parameter, std::string("feature '") + std::string(feature_name(f)) +
                                                 "' is not conditioned in this model");
    return std::size_t(slot);
}

nlohmann::json optional_features(const std::optional<FeatureVector>& f) {
    return f ? f->to_json() : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json mesh_payload(const TriMesh& mesh, std::size_t max_bytes) {
    nlohmann::json full = payload_json(mesh, false, mesh.faces.size());
    if (full.dump().size() <= max_bytes) return full;
    std::size_t lo = 0, hi = mesh.faces.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (payload_json(face_prefix(mesh, mid), true, mesh.faces.size()).dump().size() <= max_bytes)
            lo = mid;
        else
            hi = mid - 1;
    }
    return payload_json(face_prefix(mesh, lo), true, mesh.faces.size());
}

Service::Service(ServiceOptions options) : options_(options) {}

Service::~Service() {
    if (loader_.joinable()) loader_.join();
}

void Service::set_model(ShapeModel model, std::string checkpoint_id) {
    model.validate();
    auto loaded = std::make_shared<Loaded>();
    loaded->sampler = fit_sampler(model);
    loaded->model = std::move(model);
    loaded->id = std::move(checkpoint_id);
    {
        std::unique_lock lock(model_mutex_);
        loaded_ = std::move(loaded);
        load_error_.reset();
    }
    std::lock_guard lock(sessions_mutex_);
    sessions_.clear();
}

void Service::load(const std::filesystem::path& checkpoint) {
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + checkpoint.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    set_model(decode_checkpoint(bytes), fingerprint(bytes));
}

void Service::load_async(const std::filesystem::path& checkpoint) {
    if (loader_.joinable()) loader_.join();
    {
        std::unique_lock lock(model_mutex_);
        loaded_.reset();
        load_error_.reset();
    }
    loader_ = std::thread([this, checkpoint] {
        try {
            load(checkpoint);
        } catch (const std::exception& e) {
            std::unique_lock lock(model_mutex_);
            load_error_ = e.what();
        }
    });
}

void Service::wait_loaded() {
    if (loader_.joinable()) loader_.join();
}

bool Service::ready() const { return loaded() != nullptr; }

std::shared_ptr<const Service::Loaded> Service::loaded() const {
    std::shared_lock lock(model_mutex_);
    return loaded_;
}

std::size_t Service::resolution(const nlohmann::json& body) const {
    if (!body.contains("resolution") || body["resolution"].is_null()) return options_.default_resolution;
    if (!body["resolution"].is_number_integer()) fail(ErrorCode::Parameter, "resolution must be an integer");
    const auto r = body["resolution"].get<std::int64_t>();
    if (r < 8 || std::size_t(r) > options_.max_resolution)
        fail(ErrorCode::Parameter, "resolution must lie in [8, " + std::to_string(options_.max_resolution) + "]");
    return std::size_t(r);
}

SynthesisOptions Service::synthesis(std::size_t resolution) const {
    SynthesisOptions s;
    s.resolution = resolution;
    s.precision = options_.precision;
    return s;
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body) {
    const bool get = method == "GET";
    const bool post = method == "POST";
    if (path == "/health") {
        if (!get) return error_response(405, "method_not_allowed", "use GET");
        const auto m = loaded();
        std::string state = m ? "ready" : "loading";
        {
            std::shared_lock lock(model_mutex_);
            if (load_error_) state = "failed";
        }
        nlohmann::json j = {{"status", state}};
        if (m) j["checkpoint"] = m->id;
        return {m ? 200 : 503, j.dump()};
    }
    const bool known = path == "/shapes" || path == "/reconstruct" || path == "/generate" || path == "/edit";
    if (!known) return error_response(404, "unknown_route", "no endpoint " + std::string(path));
    if (path == "/shapes" ? !get : !post)
        return error_response(405, "method_not_allowed", "use " + std::string(path == "/shapes" ? "GET" : "POST"));

    const auto m = loaded();
    if (!m) {
        std::shared_lock lock(model_mutex_);
        if (load_error_) return error_response(500, "load_failed", *load_error_);
        return error_response(503, "loading", "checkpoint is still loading");
    }
    try {
        if (path == "/shapes") return shapes(*m);
        nlohmann::json request;
        try {
            request = nlohmann::json::parse(body.empty() ? std::string_view("{}") : body);
        } catch (const nlohmann::json::parse_error& e) {
            return error_response(400, "malformed_body", e.what());
        }
        if (!request.is_object()) return error_response(400, "malformed_body", "body must be a JSON object");
        if (path == "/reconstruct") return reconstruct(*m, request);
        if (path == "/generate") return generate(*m, request);
        return edit(*m, request);
    } catch (const Error& e) {
        const HttpError h = from_error(e);
        return error_response(h.status, h.code, h.message);
    } catch (const nlohmann::json::exception& e) {
        return error_response(400, "malformed_body", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal_error", e.what());
    }
}

Response Service::shapes(const Loaded& m) const {
    const ShapeModel& model = m.model;
    nlohmann::json fixed = nlohmann::json::array();
    nlohmann::json bounds = nlohmann::json::object();
    for (Feature f : model.config.fixed_features) {
        fixed.push_back(feature_name(f));
        bounds[std::string(feature_name(f))] = {model.transform.to_raw(f, -options_.clamp_sigma),
                                                model.transform.to_raw(f, options_.clamp_sigma)};
    }
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < model.latents.size(); ++i) {
        list.push_back({{"id", i},
                        {"name", i < model.shape_names.size() ? model.shape_names[i] : std::string()},
                        {"features", model.training_features[i].to_json()}});
    }
    const nlohmann::json j = {{"checkpoint", m.id},
                              {"fixed_features", fixed},
                              {"latent_dim", model.config.latent_dim},
                              {"clamp_sigma", options_.clamp_sigma},
                              {"bounds", bounds},
                              {"default_resolution", options_.default_resolution},
                              {"shapes", list}};
    return {200, j.dump()};
}

Response Service::reconstruct(const Loaded& m, const nlohmann::json& body) const {
    if (!body.contains("shape_id") || !body["shape_id"].is_number_integer())
        fail(ErrorCode::Parameter, "shape_id must be an integer");
    const auto id = body["shape_id"].get<std::int64_t>();
    if (id < 0 || std::size_t(id) >= m.model.latents.size())
        fail(ErrorCode::NotFound, "unknown shape id " + std::to_string(id));
    const std::size_t res = resolution(body);
    const LatentCode& code = m.model.latents[std::size_t(id)];
    const Synthesis s = synthesize(m.model, code, synthesis(res));
    nlohmann::json j = {{"shape_id", id},
                        {"resolution", res},
                        {"code", code.to_json()},
                        {"empty", s.empty},
                        {"mesh", mesh_payload(s.mesh, options_.max_payload_bytes)}};
    if (m.model.conditioned()) j["conditioned"] = decode_fixed(m.model, code).to_json();
    return {200, j.dump()};
}

Response Service::generate(const Loaded& m, const nlohmann::json& body) const {
    std::uint64_t seed = 0;
    if (body.contains("seed") && !body["seed"].is_null()) {
        if (!body["seed"].is_number_unsigned()) fail(ErrorCode::Parameter, "seed must be a non-negative integer");
        seed = body["seed"].get<std::uint64_t>();
    }
    FeatureOverrides overrides;
    bool clamped = false;
    if (body.contains("overrides") && !body["overrides"].is_null()) {
        if (!body["overrides"].is_object()) fail(ErrorCode::Parameter, "overrides must be an object");
        for (const auto& [key, value] : body["overrides"].items()) {
            if (value.is_null()) continue;
            if (!value.is_number()) fail(ErrorCode::Parameter, "override '" + key + "' must be a number");
            const Feature f = feature_key(key);
            if (!m.model.conditioned())
                fail(ErrorCode::UnsupportedModel, "feature overrides need a conditioned model");
            fixed_slot_or_fail(m.model, f);
            double raw = value.get<double>();
            if (options_.clamp_sigma > 0.0) {
                const double z = m.model.transform.to_z(f, raw);
                if (std::abs(z) > options_.clamp_sigma) {
                    raw = m.model.transform.to_raw(f, std::clamp(z, -options_.clamp_sigma, options_.clamp_sigma));
                    clamped = true;
                }
            }
            overrides.set(f, raw);
        }
    }
    CohortOptions opts;
    opts.synthesis = synthesis(resolution(body));
    auto member = std::move(generate_cohort(m.model, m.sampler, 1, seed, overrides, opts).front());
    nlohmann::json j = {{"seed", seed},
                        {"resolution", opts.synthesis.resolution},
                        {"code", member.code.to_json()},
                        {"conditioned", optional_features(member.conditioned)},
                        {"extrapolated", member.extrapolated},
                        {"clamped", clamped},
                        {"measured", optional_features(member.measured)},
                        {"empty", member.synthesis.empty},
                        {"mesh", mesh_payload(member.synthesis.mesh, options_.max_payload_bytes)}};
    return {200, j.dump()};
}

std::string Service::edit_body(const Loaded& m, const LatentCode& base, const nlohmann::json& features,
                               std::size_t res) const {
    const FeatureVector current = decode_fixed(m.model, base);
    FeatureDeltas deltas{};
    for (const auto& [key, value] : features.items()) {
        if (value.is_null()) continue;
        if (!value.is_number()) fail(ErrorCode::Parameter, "feature '" + key + "' must be a number");
        const Feature f = feature_key(key);
        fixed_slot_or_fail(m.model, f);
        deltas[std::size_t(int(f))] = value.get<double>() - current.get(f);
    }
    EditOptions opts;
    opts.synthesis = synthesis(res);
    opts.clamp_sigma = options_.clamp_sigma;
    const std::vector<FeatureDeltas> steps{deltas};
    const EditStep step = std::move(edit_shape(m.model, base, steps, opts).front());
    const nlohmann::json j = {{"resolution", res},
                              {"code", step.code.to_json()},
                              {"conditioned", step.conditioned.to_json()},
                              {"clamped", step.clamped},
                              {"measured", optional_features(step.measured)},
                              {"empty", step.synthesis.empty},
                              {"mesh", mesh_payload(step.synthesis.mesh, options_.max_payload_bytes)}};
    return j.dump();
}

Response Service::edit(const Loaded& m, const nlohmann::json& body) {
    if (!m.model.conditioned()) fail(ErrorCode::UnsupportedModel, "editing needs a model with fixed features");
    std::optional<LatentCode> base;
    if (body.contains("base") && !body["base"].is_null()) {
        const auto& b = body["base"];
        if (b.is_number_integer()) {
            const auto id = b.get<std::int64_t>();
            if (id < 0 || std::size_t(id) >= m.model.latents.size())
                fail(ErrorCode::NotFound, "unknown shape id " + std::to_string(id));
            base = m.model.latents[std::size_t(id)];
        } else if (b.is_object()) {
            base = LatentCode::from_json(b);
            if (base->fixed.size() != m.model.fixed_dim() || base->trainable.size() != m.model.config.latent_dim)
                fail(ErrorCode::Shape, "base code has width " + std::to_string(base->size()) + ", model expects " +
                                           std::to_string(m.model.code_width()));
        } else {
            fail(ErrorCode::Parameter, "base must be a shape id or a latent code");
        }
    }
    nlohmann::json features = nlohmann::json::object();
    if (body.contains("features") && !body["features"].is_null()) {
        if (!body["features"].is_object()) fail(ErrorCode::Parameter, "features must be an object");
        features = body["features"];
    }
    const std::size_t res = resolution(body);

    if (!body.contains("session") || body["session"].is_null()) {
        if (!base) fail(ErrorCode::Parameter, "base is required without a session");
        return {200, edit_body(m, *base, features, res)};
    }
    if (!body["session"].is_string() || body["session"].get<std::string>().empty())
        fail(ErrorCode::Parameter, "session must be a non-empty string");
    std::shared_ptr<Session> session;
    {
        std::lock_guard lock(sessions_mutex_);
        auto& slot = sessions_[body["session"].get<std::string>()];
        if (!slot) slot = std::make_shared<Session>();
        session = slot;
    }
    std::lock_guard lock(session->mutex);
    if (session->checkpoint_id != m.id) {
        session->checkpoint_id = m.id;
        session->base.reset();
        session->cached_body.clear();
    }
    if (!base) {
        if (!session->base) fail(ErrorCode::Parameter, "session has no base yet");
        base = session->base;
    }
    if (session->base && *session->base == *base && session->last_features == features &&
        session->last_resolution == res && !session->cached_body.empty())
        return {200, session->cached_body};
    session->base = base;
    session->last_features = features;
    session->last_resolution = res;
    session->cached_body.clear();
    session->cached_body = edit_body(m, *base, features, res);
    return {200, session->cached_body};
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service, std::size_t max_body_bytes) : impl_(std::make_unique<Impl>()) {
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, "application/json");
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Put(".*", handler);
    impl_->server.Delete(".*", handler);
    impl_->server.set_payload_max_length(max_body_bytes);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) fail(ErrorCode::Io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() {
    if (!impl_->server.listen_after_bind()) fail(ErrorCode::Io, "HTTP server stopped with an error");
}

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace inrshape
