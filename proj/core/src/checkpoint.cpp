#include "glue/checkpoint.hpp"

#include "glue/error.hpp"
#include "glue/util.hpp"

namespace glue {

namespace {

constexpr char kMagic[] = "GLUECKP\x01";  // 8 bytes incl. format tag
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const Checkpoint& ckp, const std::string& path) {
    const ModelHyper& h = ckp.params.hyper;
    if (ckp.sensor_names.size() != h.n_sensors || ckp.norm_stats.size() != h.n_sensors)
        throw ShapeError("checkpoint: sensor names/stats do not match the model size");
    if (ckp.adjacency.n() != h.n_sensors)
        throw ShapeError("checkpoint: adjacency does not match the model size");

    BinWriter w;
    w.raw(std::string_view(kMagic, 8));
    w.u32(kVersion);
    w.u64(ckp.seed);
    w.u8(ckp.params.head_mode == HeadMode::gaussian ? 0 : 1);

    w.u64(h.n_sensors);
    w.u64(h.embed_dim);
    w.u64(h.window);
    w.u64(h.top_k);
    w.f64(h.leaky_slope);
    w.f64(h.sigma_floor);
    w.u8(h.per_node_attention ? 1 : 0);
    w.u64(h.head_hidden);

    for (const auto& name : ckp.sensor_names) w.str(name);
    for (const auto& st : ckp.norm_stats) {
        w.f64(st.mean);
        w.f64(st.std);
    }

    for (std::size_t i = 0; i < ckp.adjacency.n(); ++i) {
        const auto& nbrs = ckp.adjacency.neighbors(i);
        w.u64(nbrs.size());
        for (std::size_t j : nbrs) w.u64(j);
    }

    w.u64(ckp.params.blocks.size());
    for (std::size_t b = 0; b < ckp.params.blocks.size(); ++b) {
        const auto& blk = ckp.params.blocks[b];
        w.str(blk.name);
        w.u64(blk.value.rows());
        w.u64(blk.value.cols());
        w.f64_span(blk.value.data());
    }
    w.save(path);
}

Checkpoint load_checkpoint(const std::string& path) {
    BinReader r = BinReader::open(path);
    if (r.raw(8) != std::string_view(kMagic, 8))
        throw IoError("checkpoint '" + path + "': not a model checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError("checkpoint '" + path + "': unsupported version " +
                      std::to_string(version));

    Checkpoint ckp;
    ckp.seed = r.u64();
    const std::uint8_t mode = r.u8();
    if (mode > 1) throw IoError("checkpoint '" + path + "': unknown head mode");
    ckp.params.head_mode = mode == 0 ? HeadMode::gaussian : HeadMode::point;

    ModelHyper& h = ckp.params.hyper;
    h.n_sensors = r.u64();
    h.embed_dim = r.u64();
    h.window = r.u64();
    h.top_k = r.u64();
    h.leaky_slope = r.f64();
    h.sigma_floor = r.f64();
    h.per_node_attention = r.u8() != 0;
    h.head_hidden = r.u64();
    h.validate();

    ckp.sensor_names.resize(h.n_sensors);
    for (auto& name : ckp.sensor_names) name = r.str();
    ckp.norm_stats.resize(h.n_sensors);
    for (auto& st : ckp.norm_stats) {
        st.mean = r.f64();
        st.std = r.f64();
    }

    ckp.adjacency = Adjacency(h.n_sensors);
    for (std::size_t i = 0; i < h.n_sensors; ++i) {
        std::vector<std::size_t> nbrs(r.u64());
        for (auto& j : nbrs) {
            j = r.u64();
            if (j >= h.n_sensors)
                throw IoError("checkpoint '" + path + "': neighbor index out of range");
        }
        ckp.adjacency.set_neighbors(i, std::move(nbrs));
    }

    const std::uint64_t n_blocks = r.u64();
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        std::string name = r.str();
        const std::uint64_t rows = r.u64();
        const std::uint64_t cols = r.u64();
        Matrix value(rows, cols);
        r.f64_span(value.data());
        ckp.params.blocks.add(std::move(name), std::move(value));
    }
    if (!r.at_end()) throw IoError("checkpoint '" + path + "': trailing bytes");
    ckp.params.validate();
    return ckp;
}

}  // namespace glue
