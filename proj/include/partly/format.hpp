#pragma once

#include <string>

namespace partly {

// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace partly
