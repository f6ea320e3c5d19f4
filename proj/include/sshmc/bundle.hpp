#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sshmc/baselines.hpp"
#include "sshmc/forest.hpp"
#include "sshmc/hierarchy.hpp"
#include "sshmc/lcn.hpp"

namespace sshmc {

// Key-value manifest, one `key=value` per line, keys sorted on write.
using Manifest = std::map<std::string, std::string>;

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// On-disk model: manifest.txt + hierarchy.txt + nodes/node_<id>.model.
// Loading reconstructs predictions exactly.
struct ModelBundle {
    std::string method;
    std::shared_ptr<const Hierarchy> hierarchy;
    std::vector<std::unique_ptr<BinaryClassifier>> node_models;
    bool post_process_output = true;
    Manifest manifest;

    Matrix predict_raw(const Matrix& features) const;
    Matrix predict(const Matrix& features) const;
};

void save_bundle(const std::filesystem::path& dir, const LcnModel& model,
                 const std::string& method, const Manifest& extra = {});
void save_bundle(const std::filesystem::path& dir, const SelfTrainModel& model,
                 const std::string& method, const Manifest& extra = {});
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace sshmc
