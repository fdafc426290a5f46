#include "radiomap/model_io.hpp"

#include "radiomap/file_util.hpp"

#include <cstdio>

namespace radiomap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string tensor_file(const WeightTensor& w)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "layer_%03zu_%s.rmt", w.layer, w.name.c_str());
    return buf;
}

} // namespace

void write_model(const fs::path& dir, const ModelArchive& model, DType dtype)
{
    model.spec.validate();
    fs::create_directories(dir);
    json tensors = json::array();
    for (const auto& w : model.weights) {
        RawTensor t;
        t.dtype = dtype;
        for (auto d : w.dims)
            t.dims.push_back(static_cast<std::uint32_t>(d));
        t.data = w.values;
        const std::string file = tensor_file(w);
        write_rmt(dir / file, t);
        tensors.push_back({{"layer", w.layer}, {"name", w.name}, {"dims", w.dims}, {"file", file}});
    }
    json manifest{{"format", "radiomap-model"},
                  {"version", 1},
                  {"spec", model.spec},
                  {"train_config", model.train_config},
                  {"seed", model.seed},
                  {"provenance", model.provenance},
                  {"tensors", tensors}};
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

ModelArchive read_model(const fs::path& dir)
{
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath))
        throw std::runtime_error("model archive " + dir.string() + " has no manifest.json");
    json m;
    try {
        m = json::parse(read_text_file(mpath));
    } catch (const json::exception& e) {
        throw std::runtime_error("cannot parse " + mpath.string() + ": " + e.what());
    }
    if (m.value("format", std::string{}) != "radiomap-model")
        throw std::runtime_error(mpath.string() + " is not a model manifest");
    ModelArchive a;
    a.spec = m.at("spec").get<NetworkSpec>();
    a.train_config = m.value("train_config", json::object());
    a.seed = m.value("seed", std::uint64_t{0});
    a.provenance = m.value("provenance", json::object());
    for (const auto& e : m.at("tensors")) {
        WeightTensor w;
        w.layer = e.at("layer").get<std::size_t>();
        w.name = e.at("name").get<std::string>();
        w.dims = e.at("dims").get<std::vector<std::size_t>>();
        const RawTensor t = read_rmt(dir / e.at("file").get<std::string>());
        std::vector<std::size_t> got(t.dims.begin(), t.dims.end());
        if (got != w.dims)
            throw std::runtime_error("tensor file " + e.at("file").get<std::string>() +
                                     " does not match the dims recorded in the manifest");
        w.values = t.data;
        a.weights.push_back(std::move(w));
    }
    return a;
}

} // namespace radiomap
