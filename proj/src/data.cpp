#include "fieldrec/data.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unistd.h>

static_assert(std::endian::native == std::endian::little,
              "FGRD serialization assumes a little-endian host");

namespace fieldrec {

namespace {

const double kPi = 3.14159265358979323846;

void check_dims(const GridField& field) {
    if (field.n_t == 0 || field.n_h == 0 || field.n_w == 0)
        throw std::invalid_argument("field extents must be positive");
    if (field.values.size() != field.n_t * field.frame_size())
        throw std::invalid_argument("field value count does not match its extents");
    if (field.stamps.size() != field.n_t)
        throw std::invalid_argument("field needs one time stamp per frame");
}

void check_range(const GridField& field) {
    if (!(field.coord_range[0] < field.coord_range[1]) ||
        !(field.coord_range[2] < field.coord_range[3]))
        throw std::invalid_argument("degenerate coordinate range");
}

double index_to_norm(std::size_t i, std::size_t extent) {
    if (extent < 2) return 0.0;
    return -1.0 + 2.0 * double(i) / double(extent - 1);
}

// Draws m distinct indices from [0, n) by partial Fisher-Yates, returned sorted.
std::vector<std::size_t> draw_sites(std::vector<std::size_t>& pool, std::size_t m,
                                    std::mt19937_64& rng) {
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<std::size_t> sites(pool.begin(), pool.begin() + std::ptrdiff_t(m));
    std::sort(sites.begin(), sites.end());
    return sites;
}

ObservationSet make_set(const GridField& field, std::size_t t, const std::vector<std::size_t>& sites) {
    ObservationSet set;
    set.time_index = t;
    set.points.reserve(sites.size());
    for (std::size_t site : sites) {
        const std::size_t h = site / field.n_w;
        const std::size_t w = site % field.n_w;
        set.points.push_back({index_to_norm(w, field.n_w), index_to_norm(h, field.n_h),
                              field.at(t, h, w)});
    }
    return set;
}

}  // namespace

FieldStats compute_field_stats(const GridField& field) {
    check_dims(field);
    FieldStats s;
    s.min = s.max = field.values.front();
    double sum = 0.0;
    for (double v : field.values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / double(field.values.size());
    double sq = 0.0;
    for (double v : field.values) sq += (v - s.mean) * (v - s.mean);
    s.variance = sq / double(field.values.size());
    return s;
}

std::string synthetic_kind_name(SyntheticKind k) {
    return k == SyntheticKind::traveling_blobs ? "traveling-blobs" : "spectral-grf";
}

SyntheticKind synthetic_kind_from_name(const std::string& s) {
    if (s == "traveling-blobs") return SyntheticKind::traveling_blobs;
    if (s == "spectral-grf") return SyntheticKind::spectral_grf;
    throw std::invalid_argument("unknown synthetic kind '" + s + "'");
}

GridField generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_t == 0 || spec.n_h == 0 || spec.n_w == 0)
        throw std::invalid_argument("synthetic extents must be positive");
    if (spec.components == 0) throw std::invalid_argument("need at least one component");

    GridField field;
    field.n_t = spec.n_t;
    field.n_h = spec.n_h;
    field.n_w = spec.n_w;
    field.stamps.resize(spec.n_t);
    for (std::size_t t = 0; t < spec.n_t; ++t) field.stamps[t] = index_to_norm(t, spec.n_t) * 0.5 + 0.5;
    field.values.assign(spec.n_t * spec.n_h * spec.n_w, 0.0);

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    if (spec.kind == SyntheticKind::traveling_blobs) {
        struct Blob {
            double cx, cy, vx, vy, r, amp;
        };
        std::vector<Blob> blobs(spec.components);
        for (auto& b : blobs) {
            b.cx = -0.6 + 1.2 * unit(rng);
            b.cy = -0.6 + 1.2 * unit(rng);
            b.vx = -0.5 + 1.0 * unit(rng);
            b.vy = -0.5 + 1.0 * unit(rng);
            b.r = 0.15 + 0.25 * unit(rng);
            b.amp = (0.5 + unit(rng)) * (unit(rng) < 0.5 ? -1.0 : 1.0);
        }
        const double wave_kx = kPi * (1.0 + 2.0 * unit(rng));
        const double wave_ky = kPi * (1.0 + 2.0 * unit(rng));
        const double wave_phase = 2.0 * kPi * unit(rng);
        const double wave_speed = kPi * (0.5 + 1.5 * unit(rng));
        const double wave_amp = 0.3;

        for (std::size_t t = 0; t < spec.n_t; ++t) {
            const double tau = field.stamps[t] * spec.drift;
            for (std::size_t h = 0; h < spec.n_h; ++h) {
                const double y = index_to_norm(h, spec.n_h);
                for (std::size_t w = 0; w < spec.n_w; ++w) {
                    const double x = index_to_norm(w, spec.n_w);
                    double v = wave_amp * std::sin(wave_kx * x + wave_ky * y + wave_phase +
                                                   wave_speed * tau);
                    for (const auto& b : blobs) {
                        const double dx = x - (b.cx + b.vx * tau);
                        const double dy = y - (b.cy + b.vy * tau);
                        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.r * b.r));
                    }
                    field.at(t, h, w) = v;
                }
            }
        }
    } else {
        // power-law cosine modes with linearly evolving phases
        struct Mode {
            double px, py, amp, phase, speed;
        };
        std::vector<Mode> modes(spec.components);
        for (auto& m : modes) {
            std::uniform_int_distribution<int> wav(0, 4);
            int p = 0, q = 0;
            while (p == 0 && q == 0) {
                p = wav(rng);
                q = wav(rng);
            }
            m.px = double(p);
            m.py = double(q);
            m.amp = std::pow(double(p * p + q * q), -0.75);
            m.phase = 2.0 * kPi * unit(rng);
            m.speed = -kPi + 2.0 * kPi * unit(rng);
        }
        for (std::size_t t = 0; t < spec.n_t; ++t) {
            const double tau = field.stamps[t] * spec.drift;
            for (std::size_t h = 0; h < spec.n_h; ++h) {
                const double y = index_to_norm(h, spec.n_h);
                for (std::size_t w = 0; w < spec.n_w; ++w) {
                    const double x = index_to_norm(w, spec.n_w);
                    double v = 0.0;
                    for (const auto& m : modes)
                        v += m.amp * std::cos(kPi * (m.px * x + m.py * y) + m.phase + m.speed * tau);
                    field.at(t, h, w) = v;
                }
            }
        }
    }

    FieldStats stats = compute_field_stats(field);
    const double sd = std::sqrt(stats.variance);
    if (!(sd > 0.0)) throw std::runtime_error("synthetic field degenerated to a constant");
    for (double& v : field.values) v = (v - stats.mean) / sd;
    return field;
}

Tensor lattice_coords(std::size_t n_h, std::size_t n_w) {
    if (n_h == 0 || n_w == 0) throw std::invalid_argument("lattice extents must be positive");
    Tensor coords(Shape{n_h * n_w, 2});
    for (std::size_t h = 0; h < n_h; ++h)
        for (std::size_t w = 0; w < n_w; ++w) {
            coords(h * n_w + w, 0) = index_to_norm(w, n_w);
            coords(h * n_w + w, 1) = index_to_norm(h, n_h);
        }
    return coords;
}

Tensor normalize_coords(const GridField& field) {
    check_dims(field);
    check_range(field);
    return lattice_coords(field.n_h, field.n_w);
}

double norm_coord_x(const GridField& field, std::size_t w) { return index_to_norm(w, field.n_w); }
double norm_coord_y(const GridField& field, std::size_t h) { return index_to_norm(h, field.n_h); }

std::pair<double, double> denormalize_coords(const GridField& field, double xn, double yn) {
    check_range(field);
    const double x = field.coord_range[0] + (xn + 1.0) / 2.0 * (field.coord_range[1] - field.coord_range[0]);
    const double y = field.coord_range[2] + (yn + 1.0) / 2.0 * (field.coord_range[3] - field.coord_range[2]);
    return {x, y};
}

Tensor observation_coords(const ObservationSet& set) {
    Tensor coords(Shape{set.points.size(), 2});
    for (std::size_t i = 0; i < set.points.size(); ++i) {
        coords(i, 0) = set.points[i].x;
        coords(i, 1) = set.points[i].y;
    }
    return coords;
}

Tensor observation_values(const ObservationSet& set) {
    Tensor values(Shape{set.points.size(), 1});
    for (std::size_t i = 0; i < set.points.size(); ++i) values(i, 0) = set.points[i].u;
    return values;
}

std::vector<ObservationSet> sample_task(const GridField& field, const SamplingSpec& spec) {
    check_dims(field);
    if (spec.task < 1 || spec.task > 4)
        throw std::invalid_argument("task must be 1, 2, 3 or 4");
    if (!(spec.ratio > 0.0) || spec.ratio > 1.0)
        throw std::invalid_argument("sampling ratio must lie in (0, 1]");
    if (!(spec.count_multiplier_max >= 1.0))
        throw std::invalid_argument("count multiplier must be >= 1");

    const std::size_t n_sites = field.frame_size();
    const std::size_t base_count = std::size_t(std::floor(spec.ratio * double(n_sites)));
    if (base_count == 0)
        throw std::invalid_argument("sampling ratio keeps no sites; need at least 1 point per step");

    std::mt19937_64 rng(spec.seed);
    const double k_max = std::min(spec.count_multiplier_max, 1.0 / spec.ratio);
    std::uniform_real_distribution<double> mult(1.0, k_max);

    std::vector<std::size_t> pool(n_sites);
    std::iota(pool.begin(), pool.end(), std::size_t(0));

    std::vector<ObservationSet> out;
    out.reserve(field.n_t);
    if (spec.task == 1) {
        const std::vector<std::size_t> sites = draw_sites(pool, base_count, rng);
        for (std::size_t t = 0; t < field.n_t; ++t) out.push_back(make_set(field, t, sites));
    } else if (spec.task == 3) {
        for (std::size_t t = 0; t < field.n_t; ++t)
            out.push_back(make_set(field, t, draw_sites(pool, base_count, rng)));
    } else {
        // varying per-step counts; task 2 restricts sites to a fixed base grid
        const double base_ratio = std::min(1.0, spec.ratio * spec.count_multiplier_max);
        std::vector<std::size_t> base;
        if (spec.task == 2)
            base = draw_sites(pool, std::size_t(std::floor(base_ratio * double(n_sites))), rng);
        for (std::size_t t = 0; t < field.n_t; ++t) {
            const std::size_t count = std::size_t(std::floor(spec.ratio * mult(rng) * double(n_sites)));
            std::vector<std::size_t> sites;
            if (spec.task == 2) {
                std::vector<std::size_t> sub = base;
                sites = draw_sites(sub, count, rng);
            } else {
                sites = draw_sites(pool, count, rng);
            }
            out.push_back(make_set(field, t, sites));
        }
    }
    return out;
}

std::vector<ObservationSet> add_noise(const std::vector<ObservationSet>& observations,
                                      double field_std, const NoiseSpec& spec) {
    if (spec.ratio < 0.0) throw std::invalid_argument("noise ratio must be nonnegative");
    if (!(field_std > 0.0)) throw std::invalid_argument("field standard deviation must be positive");
    std::vector<ObservationSet> out = observations;
    if (spec.ratio == 0.0) return out;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.ratio * field_std);
    for (auto& set : out)
        for (auto& p : set.points) p.u += noise(rng);
    return out;
}

namespace {

constexpr char kMagic[8] = {'F', 'G', 'R', 'D', 0, 0, 0, 1};

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

void append_f32(std::string& buf, float v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    buf.append(raw, 4);
}

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw std::runtime_error("truncated FGRD file '" + path + "'");
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
    float f32() {
        need(4);
        float v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
};

}  // namespace

// Write-to-temp then rename, so readers never see a partial file.
void write_file_atomic(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, ".tmp.%" PRIdMAX, std::intmax_t(::getpid()));
    const fs::path tmp = target.string() + suffix;
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out.write(contents.data(), std::streamsize(contents.size()));
        if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

void write_field(const GridField& field, const std::string& path) {
    check_dims(field);
    std::string buf;
    buf.reserve(8 + 12 + 32 + 8 * field.n_t + 4 * field.values.size());
    buf.append(kMagic, 8);
    append_u32(buf, std::uint32_t(field.n_t));
    append_u32(buf, std::uint32_t(field.n_h));
    append_u32(buf, std::uint32_t(field.n_w));
    for (double v : field.coord_range) append_f64(buf, v);
    for (double s : field.stamps) append_f64(buf, s);
    for (double v : field.values) append_f32(buf, float(v));
    write_file_atomic(path, buf);
}

GridField read_field(const std::string& path) {
    const std::string buf = read_file(path);
    Cursor c{buf, 0, path};
    c.need(8);
    if (std::memcmp(buf.data(), kMagic, 8) != 0)
        throw std::runtime_error("'" + path + "' is not an FGRD v1 file (bad magic)");
    c.pos = 8;
    GridField field;
    field.n_t = c.u32();
    field.n_h = c.u32();
    field.n_w = c.u32();
    if (field.n_t == 0 || field.n_h == 0 || field.n_w == 0)
        throw std::runtime_error("FGRD file '" + path + "' declares an empty grid");
    for (double& v : field.coord_range) v = c.f64();
    field.stamps.resize(field.n_t);
    for (double& s : field.stamps) s = c.f64();
    field.values.resize(field.n_t * field.frame_size());
    for (double& v : field.values) v = double(c.f32());
    if (c.pos != buf.size())
        throw std::runtime_error("FGRD file '" + path + "' has trailing bytes");
    return field;
}

void write_observations(const std::vector<ObservationSet>& observations, const std::string& path) {
    std::string buf = "t_index,x,y,value\n";
    char line[128];
    for (const auto& set : observations)
        for (const auto& p : set.points) {
            std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", set.time_index, p.x, p.y, p.u);
            buf += line;
        }
    write_file_atomic(path, buf);
}

std::vector<ObservationSet> read_observations(const std::string& path) {
    const std::string buf = read_file(path);
    std::vector<ObservationSet> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < buf.size()) {
        std::size_t end = buf.find('\n', pos);
        if (end == std::string::npos) end = buf.size();
        const std::string line = buf.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "t_index,x,y,value")
                throw std::runtime_error("'" + path + "': unexpected observation header '" + line + "'");
            continue;
        }
        std::size_t t_index;
        double x, y, u;
        char tail;
        if (std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf%c", &t_index, &x, &y, &u, &tail) != 4)
            throw std::runtime_error("'" + path + "': malformed observation line " +
                                     std::to_string(line_no));
        if (out.empty() || out.back().time_index != t_index) {
            out.push_back(ObservationSet{t_index, {}});
        }
        out.back().points.push_back({x, y, u});
    }
    return out;
}

}  // namespace fieldrec
