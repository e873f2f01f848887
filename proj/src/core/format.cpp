#include "hawkesvol/format.hpp"

#include <charconv>

namespace hawkesvol {

std::string format_number(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return {buffer, result.ptr};
}

} // namespace hawkesvol
