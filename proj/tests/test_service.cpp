#include "inrshape/errors.hpp"
#include "inrshape/service.hpp"

#include "fixtures.hpp"

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <thread>

using namespace inrshape;

namespace {

nlohmann::json body_of(const Response& r) { return nlohmann::json::parse(r.body); }

std::string error_code(const Response& r) { return body_of(r)["error"]["code"].get<std::string>(); }

}  // namespace

TEST_CASE("service endpoints") {
    Service service;
    const Response early = service.handle("GET", "/shapes", "");
    CHECK(early.status == 503);
    CHECK(error_code(early) == "loading");
    CHECK(service.handle("GET", "/health", "").status == 503);

    const ShapeModel model = fixture::octahedron_model({Feature::Volume, Feature::Symmetry}, 6);
    service.set_model(model, "octa");
    CHECK(service.ready());

    const auto shapes = body_of(service.handle("GET", "/shapes", ""));
    CHECK(shapes["checkpoint"] == "octa");
    REQUIRE(shapes["shapes"].size() == 6);
    CHECK(shapes["shapes"][2]["id"] == 2);
    CHECK(shapes["shapes"][2]["features"]["volume"] == model.training_features[2].volume);
    const auto bounds = shapes["bounds"]["volume"];
    CHECK(bounds[0].get<double>() == doctest::Approx(model.transform.to_raw(Feature::Volume, -3.0)));
    CHECK(shapes["fixed_features"] == nlohmann::json({"volume", "symmetry"}));

    const Response recon = service.handle("POST", "/reconstruct", R"({"shape_id": 2})");
    REQUIRE(recon.status == 200);
    const auto rj = body_of(recon);
    CHECK(rj["resolution"] == 48);
    CHECK_FALSE(rj["empty"].get<bool>());
    const auto& mesh = rj["mesh"];
    CHECK(mesh["positions"].size() == 3 * mesh["vertex_count"].get<std::size_t>());
    CHECK(mesh["indices"].size() == 3 * mesh["face_count"].get<std::size_t>());
    CHECK_FALSE(mesh["truncated"].get<bool>());

    const auto identity = body_of(service.handle("POST", "/edit", R"({"base": 2, "features": {}})"));
    CHECK(identity["mesh"] == rj["mesh"]);
    CHECK_FALSE(identity["clamped"].get<bool>());
    const auto by_code = body_of(service.handle(
        "POST", "/edit", nlohmann::json{{"base", model.latents[2].to_json()}}.dump()));
    CHECK(by_code["mesh"] == rj["mesh"]);

    const double start = model.training_features[2].volume;
    const auto bigger = body_of(service.handle(
        "POST", "/edit", nlohmann::json{{"base", 2}, {"features", {{"volume", start + 0.01}}}}.dump()));
    CHECK(bigger["conditioned"]["volume"].get<double>() == doctest::Approx(start + 0.01).epsilon(1e-9));
    CHECK(bigger["measured"]["volume"].get<double>() > identity["measured"]["volume"].get<double>());
    const auto huge = body_of(service.handle("POST", "/edit", R"({"base": 2, "features": {"volume": 50.0}})"));
    CHECK(huge["clamped"].get<bool>());
    CHECK(huge["code"]["fixed"][0].get<double>() == doctest::Approx(3.0));

    const std::string gen = R"({"seed": 11, "overrides": {"volume": 0.04}})";
    const Response g1 = service.handle("POST", "/generate", gen);
    const Response g2 = service.handle("POST", "/generate", gen);
    REQUIRE(g1.status == 200);
    CHECK(g1.body == g2.body);
    CHECK(body_of(g1)["conditioned"]["volume"] == 0.04);
    CHECK(service.handle("POST", "/generate", R"({"seed": 12})").body != g1.body);
    CHECK(body_of(service.handle("POST", "/generate", R"({"overrides": {"volume": 99}})"))["clamped"].get<bool>());

    CHECK(service.handle("POST", "/reconstruct", R"({"shape_id": 99})").status == 404);
    CHECK(error_code(service.handle("POST", "/reconstruct", R"({"shape_id": 99})")) == "unknown_shape");
    CHECK(service.handle("POST", "/edit", R"({"base": 99})").status == 404);
    CHECK(error_code(service.handle("POST", "/reconstruct", "{not json")) == "malformed_body");
    CHECK(service.handle("POST", "/reconstruct", "[1, 2]").status == 400);
    CHECK(service.handle("POST", "/reconstruct", R"({"shape_id": "two"})").status == 400);
    CHECK(service.handle("POST", "/reconstruct", R"({"shape_id": 1, "resolution": 4})").status == 400);
    CHECK(service.handle("POST", "/edit", R"({"base": 1, "features": {"isthmus": 0.1}})").status == 400);
    CHECK(service.handle("POST", "/edit", R"({"base": 1, "features": {"colour": 0.1}})").status == 400);
    CHECK(service.handle("POST", "/edit", R"({"base": {"fixed": [0], "trainable": [0]}})").status == 400);
    CHECK(service.handle("POST", "/edit", R"({"features": {}})").status == 400);
    CHECK(error_code(service.handle("GET", "/nowhere", "")) == "unknown_route");
    CHECK(service.handle("GET", "/edit", "").status == 405);

    Service restarted;
    restarted.set_model(model, "octa");
    CHECK(restarted.handle("POST", "/generate", gen).body == g1.body);
    CHECK(restarted.handle("POST", "/reconstruct", R"({"shape_id": 2})").body == recon.body);

    Service plain;
    plain.set_model(fixture::octahedron_model({}), "plain");
    const Response refused = plain.handle("POST", "/edit", R"({"base": 0})");
    CHECK(refused.status == 409);
    CHECK(error_code(refused) == "unconditioned_model");
    CHECK(plain.handle("POST", "/generate", R"({"overrides": {"volume": 0.1}})").status == 409);
    CHECK(plain.handle("POST", "/generate", R"({"seed": 1})").status == 200);
}

TEST_CASE("service sessions") {
    Service service;
    const ShapeModel model = fixture::octahedron_model({Feature::Volume}, 5);
    service.set_model(model, "octa");
    CHECK(service.handle("POST", "/edit", R"({"session": "s1"})").status == 400);
    const Response first = service.handle("POST", "/edit", R"({"session": "s1", "base": 3})");
    REQUIRE(first.status == 200);
    const Response again = service.handle("POST", "/edit", R"({"session": "s1"})");
    CHECK(again.body == first.body);
    const double v = model.training_features[3].volume;
    const Response moved = service.handle(
        "POST", "/edit", nlohmann::json{{"session", "s1"}, {"features", {{"volume", v + 0.005}}}}.dump());
    CHECK(moved.body != first.body);
    const Response stateless = service.handle(
        "POST", "/edit", nlohmann::json{{"base", 3}, {"features", {{"volume", v + 0.005}}}}.dump());
    CHECK(moved.body == stateless.body);
    CHECK(service.handle("POST", "/edit", R"({"session": "s2"})").status == 400);
}

TEST_CASE("mesh payload cap") {
    const TriMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.3, 3);
    const auto full = mesh_payload(sphere, 1u << 30);
    CHECK_FALSE(full["truncated"].get<bool>());
    CHECK(full["face_count"] == sphere.faces.size());
    const std::size_t cap = full.dump().size() / 3;
    const auto cut = mesh_payload(sphere, cap);
    CHECK(cut["truncated"].get<bool>());
    CHECK(cut.dump().size() <= cap);
    CHECK(cut["face_count"].get<std::size_t>() > 0);
    CHECK(cut["total_face_count"] == sphere.faces.size());
    const auto vertices = cut["vertex_count"].get<std::uint32_t>();
    for (const auto& i : cut["indices"]) CHECK(i.get<std::uint32_t>() < vertices);
}

TEST_CASE("checkpoint loading and HTTP transport") {
    const auto dir = std::filesystem::temp_directory_path() / "inrshape_service_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const ShapeModel model = fixture::octahedron_model({Feature::Volume}, 5);
    save_checkpoint(model, dir / "octa.ckpt");

    Service broken;
    broken.load_async(dir / "missing.ckpt");
    broken.wait_loaded();
    const Response failed = broken.handle("GET", "/shapes", "");
    CHECK(failed.status == 500);
    CHECK(error_code(failed) == "load_failed");

    Service service;
    service.load_async(dir / "octa.ckpt");
    service.wait_loaded();
    REQUIRE(service.ready());

    HttpServer server(service);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    for (int tries = 0; tries < 100 && !client.Get("/health"); ++tries)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    const auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    const auto shapes = client.Get("/shapes");
    REQUIRE(shapes);
    CHECK(shapes->status == 200);
    CHECK(shapes->get_header_value("Content-Type") == "application/json");
    CHECK(nlohmann::json::parse(shapes->body)["shapes"].size() == 5);
    const auto recon = client.Post("/reconstruct", R"({"shape_id": 1})", "application/json");
    REQUIRE(recon);
    CHECK(recon->status == 200);
    CHECK(recon->body == service.handle("POST", "/reconstruct", R"({"shape_id": 1})").body);
    const auto bad = client.Post("/edit", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    server.stop();
    worker.join();
    std::filesystem::remove_all(dir);
}
