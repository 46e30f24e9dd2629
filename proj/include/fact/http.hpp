#pragma once

#include <string>

#include "fact/jsonl.hpp"

namespace fact {

// POSTs `body` as application/json and returns the parsed JSON response.
// Raises TransportError on connection failure, non-2xx status or a body
// that is not JSON.
Json post_json(const std::string& url, const Json& body, double timeout_seconds);

}  // namespace fact
