#pragma once

#include <string>

#include "glnn/dynamics.hpp"

namespace glnn {

struct SavedModel {
    ModelParams params;
    Alphabet alphabet;
    std::string mask;  // "none" or "xor": how to mask sequences scored with it
};

void save_model(const SavedModel& model, const std::string& path);
SavedModel load_model(const std::string& path);

}  // namespace glnn
