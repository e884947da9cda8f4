#pragma once
// HTTP facade over the store, synthesis pipeline and evaluation.
//
// ApiService::handle() is transport-independent so tests can drive it
// directly; bind_routes() attaches it to a cpp-httplib server.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "noteeline/errors.hpp"
#include "noteeline/llm_gateway.hpp"
#include "noteeline/store.hpp"
#include "noteeline/synthesis.hpp"

namespace httplib {
class Server;
}

namespace noteeline::api {

struct ApiRequest {
    std::string method;  // "GET", "POST", "PATCH"
    std::string path;    // no query string
    std::map<std::string, std::string> query;
    std::string body;

    // Splits "path?a=b&c=d"; values are percent-decoded.
    static ApiRequest from_target(std::string method, std::string_view target, std::string body = {});
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// {code, detail} envelope with the status from the error table.
ApiResponse error_response(ErrorCode code, const std::string& detail);
ApiResponse error_response(const Error& e);

struct ServiceConfig {
    std::filesystem::path store_dir;
    llm::GatewaySettings gateway;
    std::shared_ptr<llm::ChatTransport> transport;  // null: HTTP transport from settings
    synthesis::SynthesisConfig synthesis;
    synthesis::PromptTemplates templates = synthesis::PromptTemplates::defaults();
    store::StoreOptions store_options;

    // NOTEELINE_STORE_DIR (default "./noteeline-data") plus the gateway variables.
    static ServiceConfig from_env(const llm::EnvLookup& env);
};

class ApiService {
public:
    explicit ApiService(ServiceConfig cfg);

    ApiResponse handle(const ApiRequest& req);

    store::Store& store() { return store_; }
    llm::Gateway& gateway() { return *gateway_; }

private:
    ApiResponse dispatch(const ApiRequest& req);

    ServiceConfig cfg_;
    store::Store store_;
    std::unique_ptr<llm::Gateway> gateway_;
};

void bind_routes(httplib::Server& server, ApiService& service);

// "host:port", "host" or ":port". Defaults 127.0.0.1 and 8080.
std::pair<std::string, int> parse_bind_addr(std::string_view addr);

// Blocks until the server stops. Returns false if the address cannot be bound.
bool serve(ApiService& service, const std::string& host, int port);

}  // namespace noteeline::api
