#include "recigraph/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "recigraph/graph_io.hpp"

namespace recigraph {

namespace {
constexpr const char* kMagic = "recigraph-checkpoint v1";
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const TrainConfig& config, const std::vector<std::string>& class_names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << kMagic << "\n";

    const auto kv = config.to_map();
    out << "config " << kv.size() << "\n";
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";

    const ModelDims& dims = params.dims();
    out << "inputs";
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        out << " " << to_string(static_cast<Modality>(m)) << ":" << dims.input_dims[m];
    }
    out << "\n";
    out << "classes " << class_names.size() << "\n";
    for (const std::string& name : class_names) out << "class " << name << "\n";

    out << "params " << params.count() << "\n";
    for (std::size_t slot = 0; slot < params.count(); ++slot) {
        const Tensor& t = params.tensor(slot);
        out << "param " << params.name(slot) << " " << t.rank();
        for (const std::size_t d : t.shape()) out << " " << d;
        out << "\n";
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (i) out << " ";
            out << format_double(t[i]);
        }
        out << "\n";
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMagic) {
        throw DataError(path.string() + " is not a checkpoint file");
    }

    auto expect_getline = [&](const char* what) {
        if (!std::getline(in, line)) {
            throw DataError("checkpoint truncated while reading " + std::string(what));
        }
        return line;
    };

    std::map<std::string, std::string> kv;
    {
        std::stringstream header(expect_getline("config header"));
        std::string tag;
        std::size_t count = 0;
        header >> tag >> count;
        if (tag != "config") throw DataError("checkpoint: expected config section");
        for (std::size_t i = 0; i < count; ++i) {
            const std::string entry = expect_getline("config entry");
            const std::size_t eq = entry.find('=');
            if (eq == std::string::npos) throw DataError("checkpoint: bad config line " + entry);
            std::string key = entry.substr(0, eq);
            std::string value = entry.substr(eq + 1);
            while (!key.empty() && key.back() == ' ') key.pop_back();
            while (!value.empty() && value.front() == ' ') value.erase(value.begin());
            kv[key] = value;
        }
    }
    Checkpoint ckpt;
    ckpt.config = TrainConfig::from_map(kv);

    ModelDims dims;
    dims.hidden = ckpt.config.hidden;
    dims.layers = ckpt.config.layers;
    dims.pool = ckpt.config.pool;
    dims.share_weights = ckpt.config.share_weights;
    {
        std::stringstream header(expect_getline("inputs"));
        std::string tag;
        header >> tag;
        if (tag != "inputs") throw DataError("checkpoint: expected inputs section");
        std::string item;
        while (header >> item) {
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos) throw DataError("checkpoint: bad input dim " + item);
            const Modality m = modality_from(item.substr(0, colon));
            dims.input_dims[static_cast<std::size_t>(m)] =
                std::stoull(item.substr(colon + 1));
        }
    }
    {
        std::stringstream header(expect_getline("classes header"));
        std::string tag;
        std::size_t count = 0;
        header >> tag >> count;
        if (tag != "classes") throw DataError("checkpoint: expected classes section");
        for (std::size_t i = 0; i < count; ++i) {
            const std::string entry = expect_getline("class name");
            if (entry.rfind("class ", 0) != 0) throw DataError("checkpoint: bad class line");
            ckpt.class_names.push_back(entry.substr(6));
        }
        dims.classes = count;
    }

    ckpt.params = ModelParams::zeros(dims);
    {
        std::stringstream header(expect_getline("params header"));
        std::string tag;
        std::size_t count = 0;
        header >> tag >> count;
        if (tag != "params") throw DataError("checkpoint: expected params section");
        if (count != ckpt.params.count()) {
            throw DataError("checkpoint: has " + std::to_string(count) + " tensors, model needs " +
                            std::to_string(ckpt.params.count()));
        }
        for (std::size_t i = 0; i < count; ++i) {
            std::stringstream meta(expect_getline("param header"));
            std::string ptag, name;
            std::size_t rank = 0;
            meta >> ptag >> name >> rank;
            if (ptag != "param") throw DataError("checkpoint: expected param line");
            std::vector<std::size_t> shape(rank);
            for (std::size_t d = 0; d < rank; ++d) meta >> shape[d];

            const std::size_t slot = ckpt.params.slot_of(name);
            Tensor& t = ckpt.params.tensor(slot);
            if (t.shape() != shape) {
                throw DataError("checkpoint: tensor '" + name + "' has mismatched shape");
            }
            std::stringstream values(expect_getline("param values"));
            for (std::size_t j = 0; j < t.size(); ++j) {
                if (!(values >> t[j])) {
                    throw DataError("checkpoint: tensor '" + name + "' is truncated");
                }
            }
        }
    }
    return ckpt;
}

}  // namespace recigraph
