#pragma once

// Golden files live in tests/data. Set TFPC_UPDATE_GOLDEN=1 to rewrite them.

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace golden {

inline bool matches(const std::string& name, const std::string& actual) {
    const std::string path = std::string(TFPC_TEST_DATA) + "/" + name;
    if (const char* env = std::getenv("TFPC_UPDATE_GOLDEN"); env && std::string(env) == "1") {
        std::ofstream(path, std::ios::binary) << actual;
        return true;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str() == actual;
}

} // namespace golden
