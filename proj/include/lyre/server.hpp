#pragma once

// JSON-over-HTTP routes of the recommendation service.

#include <string>

#include "lyre/recommend.hpp"

namespace httplib {
class Server;
}

namespace lyre {

/// Installs the /api routes on `server`. Errors are {"error": message} with
/// 400 for invalid input and 404 for unknown result ids.
void install_routes(httplib::Server& server, RecommendService& service);

/// Blocks serving on host:port until the process is stopped. Throws
/// ContractError when the port cannot be bound.
void serve(RecommendService& service, const std::string& host, int port);

}  // namespace lyre
