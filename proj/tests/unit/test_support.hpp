#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

namespace test {

inline std::filesystem::path fixture_dir()
{
    if (const char *env = std::getenv("PRLDPC_FIXTURE_DIR"))
        return env;
    return PRLDPC_SOURCE_FIXTURES;
}

inline std::filesystem::path fixture(const std::string &name) { return fixture_dir() / (name + ".alist"); }

} // namespace test
