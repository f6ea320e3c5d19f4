#include "sshmc/bundle.hpp"

#include <cstdio>
#include <fstream>

#include "sshmc/errors.hpp"

namespace sshmc {

namespace {

std::string node_file_name(std::size_t l) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "node_%05zu.model", l);
    return buf;
}

void save_common(const std::filesystem::path& dir, const Hierarchy& hierarchy,
                 const std::vector<std::unique_ptr<BinaryClassifier>>& node_models,
                 Manifest manifest) {
    std::filesystem::create_directories(dir / "nodes");
    hierarchy.save(dir / "hierarchy.txt");
    manifest["node_count"] = std::to_string(node_models.size());
    write_manifest(dir / "manifest.txt", manifest);
    for (std::size_t l = 0; l < node_models.size(); ++l) {
        std::ofstream out(dir / "nodes" / node_file_name(l));
        if (!out) throw Error("cannot write model file in " + dir.string());
        node_models[l]->save(out);
    }
}

Manifest base_manifest(const std::string& method, const RandomForestConfig& base) {
    Manifest m;
    m["method"] = method;
    m["n_trees"] = std::to_string(base.n_trees);
    m["max_features"] = to_string(base.max_features);
    m["min_samples_split"] = std::to_string(base.min_samples_split);
    m["max_depth"] = std::to_string(base.max_depth);
    m["seed"] = std::to_string(base.seed);
    return m;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path.string());
    for (const auto& [key, value] : manifest) {
        out << key << '=' << value << '\n';
    }
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest: " + path.string());
    Manifest manifest;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected key=value");
        }
        manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return manifest;
}

Matrix ModelBundle::predict_raw(const Matrix& features) const {
    Matrix out(features.rows(), node_models.size());
    for (std::size_t l = 0; l < node_models.size(); ++l) {
        const auto column = node_models[l]->predict_proba(features);
        for (std::size_t r = 0; r < features.rows(); ++r) out(r, l) = column[r];
    }
    return out;
}

Matrix ModelBundle::predict(const Matrix& features) const {
    Matrix raw = predict_raw(features);
    return post_process_output ? post_process(*hierarchy, raw) : raw;
}

void save_bundle(const std::filesystem::path& dir, const LcnModel& model,
                 const std::string& method, const Manifest& extra) {
    Manifest manifest = base_manifest(method, model.base);
    manifest["policy"] = to_string(model.policy);
    manifest["post_process"] = "1";
    for (const auto& [key, value] : extra) manifest[key] = value;
    save_common(dir, *model.hierarchy, model.node_models, std::move(manifest));
}

void save_bundle(const std::filesystem::path& dir, const SelfTrainModel& model,
                 const std::string& method, const Manifest& extra) {
    Manifest manifest = base_manifest(method, model.config.base);
    manifest["confidence"] = std::to_string(model.config.confidence);
    manifest["max_rounds"] = std::to_string(model.config.max_rounds);
    manifest["post_process"] = model.post_process_output ? "1" : "0";
    for (const auto& [key, value] : extra) manifest[key] = value;
    save_common(dir, *model.hierarchy, model.node_models, std::move(manifest));
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    ModelBundle bundle;
    bundle.manifest = read_manifest(dir / "manifest.txt");
    bundle.hierarchy = std::make_shared<Hierarchy>(Hierarchy::load(dir / "hierarchy.txt"));
    auto it = bundle.manifest.find("method");
    bundle.method = it == bundle.manifest.end() ? "" : it->second;
    it = bundle.manifest.find("post_process");
    bundle.post_process_output = it == bundle.manifest.end() || it->second != "0";
    it = bundle.manifest.find("node_count");
    const std::size_t n =
        it == bundle.manifest.end() ? bundle.hierarchy->size() : std::stoull(it->second);
    if (n != bundle.hierarchy->size()) {
        throw ParseError("bundle: node_count does not match the hierarchy");
    }
    bundle.node_models.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
        const auto path = dir / "nodes" / node_file_name(l);
        std::ifstream in(path);
        if (!in) throw ParseError("bundle: missing model file " + path.string());
        bundle.node_models[l] = load_classifier(in);
    }
    return bundle;
}

}  // namespace sshmc
