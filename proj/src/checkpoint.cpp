#include "fieldrec/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <stdexcept>

#include "fieldrec/data.hpp"

static_assert(std::endian::native == std::endian::little,
              "FRCP serialization assumes a little-endian host");

namespace fieldrec {

namespace {

constexpr char kMagic[8] = {'F', 'R', 'C', 'P', 0, 0, 0, 1};

void append_u32(std::string& buf, std::uint32_t v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    buf.append(raw, 4);
}

void append_f64(std::string& buf, double v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    buf.append(raw, 8);
}

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw std::runtime_error("truncated checkpoint '" + path + "'");
    }
    std::uint8_t u8() {
        need(1);
        return std::uint8_t(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        double v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_checkpoint(Checkpoint& ckpt, const std::string& path) {
    if (!ckpt.model) throw std::invalid_argument("checkpoint has no model");
    std::string buf;
    buf.append(kMagic, 8);
    buf.push_back(char(ckpt.spec.arch));
    buf.push_back(char(ckpt.spec.filter_kind));
    append_u32(buf, std::uint32_t(ckpt.spec.d_x));
    append_u32(buf, std::uint32_t(ckpt.spec.d_z));
    append_u32(buf, std::uint32_t(ckpt.spec.width));
    append_u32(buf, std::uint32_t(resolved_depth(ckpt.spec)));
    append_u32(buf, std::uint32_t(ckpt.spec.ffn_freq_number));
    append_u32(buf, std::uint32_t(ckpt.spec.ffn_encode_size));
    append_f64(buf, ckpt.spec.input_scale);
    append_f64(buf, ckpt.spec.gamma_alpha);
    append_f64(buf, ckpt.spec.gamma_beta);
    append_f64(buf, ckpt.spec.w0);
    append_f64(buf, ckpt.spec.ffn_freq_constant);
    append_f64(buf, ckpt.spec.ffn_sigma);

    const auto refs = ckpt.model->params();
    append_u32(buf, std::uint32_t(refs.size()));
    for (const auto& r : refs) {
        append_u32(buf, std::uint32_t(r.name.size()));
        buf.append(r.name);
        buf.push_back(r.trainable ? 1 : 0);
        const Shape& shape = r.tensor->shape();
        append_u32(buf, std::uint32_t(shape.size()));
        for (std::size_t d : shape) append_u32(buf, std::uint32_t(d));
        for (double v : r.tensor->values()) append_f64(buf, v);
    }

    append_u32(buf, std::uint32_t(ckpt.latents.size()));
    append_u32(buf, std::uint32_t(ckpt.latents.dim()));
    for (double s : ckpt.latents.stamps) append_f64(buf, s);
    for (double v : ckpt.latents.codes.values()) append_f64(buf, v);

    append_u32(buf, std::uint32_t(ckpt.n_h));
    append_u32(buf, std::uint32_t(ckpt.n_w));
    for (double v : ckpt.coord_range) append_f64(buf, v);
    write_file_atomic(path, buf);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string buf = read_file(path);
    Cursor c{buf, 0, path};
    c.need(8);
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        throw std::runtime_error("'" + path + "' is not an FRCP v1 checkpoint (bad magic)");
    c.pos = 8;

    Checkpoint ckpt;
    const std::uint8_t arch_id = c.u8();
    const std::uint8_t kind_id = c.u8();
    if (arch_id > std::uint8_t(Arch::ffn_g))
        throw std::runtime_error("checkpoint '" + path + "' has an unknown architecture id");
    if (kind_id > std::uint8_t(FilterKind::none))
        throw std::runtime_error("checkpoint '" + path + "' has an unknown filter kind id");
    ckpt.spec.arch = Arch(arch_id);
    ckpt.spec.filter_kind = FilterKind(kind_id);
    ckpt.spec.d_x = c.u32();
    ckpt.spec.d_z = c.u32();
    ckpt.spec.width = c.u32();
    ckpt.spec.depth = c.u32();
    ckpt.spec.ffn_freq_number = c.u32();
    ckpt.spec.ffn_encode_size = c.u32();
    ckpt.spec.input_scale = c.f64();
    ckpt.spec.gamma_alpha = c.f64();
    ckpt.spec.gamma_beta = c.f64();
    ckpt.spec.w0 = c.f64();
    ckpt.spec.ffn_freq_constant = c.f64();
    ckpt.spec.ffn_sigma = c.f64();
    if (ckpt.spec.depth == 0)
        throw std::runtime_error("checkpoint '" + path + "' stores an unresolved depth");

    // The seed only shapes the initial draw; every array is overwritten below.
    ckpt.model = make_model(ckpt.spec, 0);
    auto refs = ckpt.model->params();
    std::map<std::string, ParamRef*> by_name;
    for (auto& r : refs) by_name[r.name] = &r;

    const std::uint32_t count = c.u32();
    if (count != refs.size())
        throw std::runtime_error("checkpoint '" + path + "' stores " + std::to_string(count) +
                                 " parameter arrays, model has " + std::to_string(refs.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = c.bytes(c.u32());
        const bool trainable = c.u8() != 0;
        Shape shape(c.u32());
        for (std::size_t& d : shape) d = c.u32();
        auto it = by_name.find(name);
        if (it == by_name.end() || it->second == nullptr)
            throw std::runtime_error("checkpoint '" + path + "' has an unexpected parameter array '" +
                                     name + "'");
        ParamRef* ref = it->second;
        if (ref->tensor->shape() != shape || ref->trainable != trainable)
            throw std::runtime_error("checkpoint '" + path + "' disagrees with the model on '" +
                                     name + "'");
        for (double& v : ref->tensor->values()) v = c.f64();
        it->second = nullptr;  // each array appears exactly once
    }

    const std::uint32_t n_codes = c.u32();
    const std::uint32_t d_code = c.u32();
    std::vector<double> stamps(n_codes);
    for (double& s : stamps) s = c.f64();
    ckpt.latents = LatentTable(n_codes, d_code, std::move(stamps));
    for (double& v : ckpt.latents.codes.values()) v = c.f64();

    ckpt.n_h = c.u32();
    ckpt.n_w = c.u32();
    for (double& v : ckpt.coord_range) v = c.f64();
    if (c.pos != buf.size())
        throw std::runtime_error("checkpoint '" + path + "' has trailing bytes");
    ckpt.model->set_training(false);
    return ckpt;
}

}  // namespace fieldrec
