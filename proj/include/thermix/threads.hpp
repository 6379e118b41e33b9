#pragma once

#include <cstdlib>
#include <string>
#include <thread>

#include "thermix/types.hpp"

namespace thermix {

// Worker cap: THERMIX_THREADS if set, otherwise the hardware concurrency.
inline int thermix_threads() {
    if (const char* env = std::getenv("THERMIX_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v < 1) throw config_error("THERMIX_THREADS must be >= 1");
            return v;
        } catch (const std::invalid_argument&) {
            throw config_error("THERMIX_THREADS must be an integer");
        } catch (const std::out_of_range&) {
            throw config_error("THERMIX_THREADS out of range");
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace thermix
