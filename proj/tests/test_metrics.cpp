#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fieldrec/metrics.hpp"

using namespace fieldrec;

namespace {

GridField small_cube(std::size_t n_t, std::size_t n_h, std::size_t n_w, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_t = n_t;
    spec.n_h = n_h;
    spec.n_w = n_w;
    spec.seed = seed;
    return generate_synthetic(spec);
}

// Pearson written independently of the production code path.
double naive_pearson(const std::vector<double>& u, const std::vector<double>& v) {
    const double n = double(u.size());
    double su = 0.0, sv = 0.0, suu = 0.0, svv = 0.0, suv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        su += u[i];
        sv += v[i];
        suu += u[i] * u[i];
        svv += v[i] * v[i];
        suv += u[i] * v[i];
    }
    const double cov = suv - su * sv / n;
    const double vu = suu - su * su / n;
    const double vv = svv - sv * sv / n;
    if (vu <= 0.0 || vv <= 0.0) return 0.0;
    return cov / std::sqrt(vu * vv);
}

std::vector<double> table_row(const LatentTable& t, std::size_t k) {
    std::vector<double> out(t.dim());
    for (std::size_t j = 0; j < t.dim(); ++j) out[j] = t.codes(k, j);
    return out;
}

std::vector<double> frame_of(const GridField& f, std::size_t t) {
    return {f.values.begin() + long(t * f.frame_size()),
            f.values.begin() + long((t + 1) * f.frame_size())};
}

}  // namespace

TEST_CASE("metrics on an exact match hit the caps") {
    GridField truth = small_cube(4, 8, 10, 3);
    MetricReport r = compute_metrics(truth, truth);
    CHECK(r.mse == 0.0);
    CHECK(r.psnr == 1e9);
    CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(r.mse_per_step[t] == 0.0);
        CHECK(r.psnr_per_step[t] == 1e9);
        CHECK(r.ssim_per_step[t] == doctest::Approx(1.0).epsilon(1e-15));
    }

    // even a constant cube compares to itself as a perfect match
    GridField flat;
    flat.n_t = 2;
    flat.n_h = 2;
    flat.n_w = 2;
    flat.stamps = {0.0, 1.0};
    flat.values.assign(8, 3.25);
    MetricReport rf = compute_metrics(flat, flat);
    CHECK(rf.mse == 0.0);
    CHECK(rf.psnr == 1e9);
    CHECK(rf.ssim == 1.0);

    GridField wrong = flat;
    wrong.values.assign(8, 5.0);
    CHECK(compute_metrics(flat, wrong).psnr == -1e9);  // zero range, nonzero error
}

TEST_CASE("unit offset on unit-range data gives MSE 1 and PSNR 0") {
    GridField truth;
    truth.n_t = 1;
    truth.n_h = 2;
    truth.n_w = 2;
    truth.stamps = {0.0};
    truth.values = {0.0, 1.0, 0.25, 0.75};
    GridField pred = truth;
    for (double& v : pred.values) v += 1.0;
    MetricReport r = compute_metrics(truth, pred);
    CHECK(r.mse == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.psnr == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.data_range == 1.0);
}

TEST_CASE("metrics agree with a scalar-loop recomputation") {
    GridField truth = small_cube(5, 6, 7, 11);
    GridField pred = small_cube(5, 6, 7, 12);

    MetricReport r = compute_metrics(truth, pred);
    const std::size_t fs = truth.frame_size();
    double range_lo = truth.values[0], range_hi = truth.values[0];
    for (double v : truth.values) {
        range_lo = std::min(range_lo, v);
        range_hi = std::max(range_hi, v);
    }
    const double range = range_hi - range_lo;
    CHECK(r.data_range == doctest::Approx(range).epsilon(1e-15));
    const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);

    double cube_se = 0.0, ssim_sum = 0.0;
    for (std::size_t t = 0; t < truth.n_t; ++t) {
        double se = 0.0, mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < fs; ++i) {
            const double a = truth.values[t * fs + i], b = pred.values[t * fs + i];
            se += (a - b) * (a - b);
            mx += a;
            my += b;
        }
        mx /= double(fs);
        my /= double(fs);
        double vx = 0.0, vy = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < fs; ++i) {
            const double a = truth.values[t * fs + i], b = pred.values[t * fs + i];
            vx += (a - mx) * (a - mx);
            vy += (b - my) * (b - my);
            cov += (a - mx) * (b - my);
        }
        vx /= double(fs);
        vy /= double(fs);
        cov /= double(fs);
        const double mse = se / double(fs);
        const double ssim = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                            ((mx * mx + my * my + c1) * (vx + vy + c2));
        CHECK(r.mse_per_step[t] == doctest::Approx(mse).epsilon(1e-12));
        CHECK(r.psnr_per_step[t] ==
              doctest::Approx(10.0 * std::log10(range * range / mse)).epsilon(1e-12));
        CHECK(r.ssim_per_step[t] == doctest::Approx(ssim).epsilon(1e-12));
        CHECK(r.ssim_per_step[t] >= -1.0);
        CHECK(r.ssim_per_step[t] <= 1.0);
        cube_se += se;
        ssim_sum += ssim;
    }
    const double cube_mse = cube_se / double(truth.values.size());
    CHECK(r.mse == doctest::Approx(cube_mse).epsilon(1e-12));
    CHECK(r.psnr == doctest::Approx(10.0 * std::log10(range * range / cube_mse)).epsilon(1e-12));
    CHECK(r.ssim == doctest::Approx(ssim_sum / 5.0).epsilon(1e-12));

    // symmetry of the structural term and monotonicity of PSNR
    MetricReport swapped = compute_metrics(pred, truth);
    CHECK(swapped.mse == doctest::Approx(r.mse).epsilon(1e-15));
    GridField worse = pred;
    for (double& v : worse.values) v += 0.5;
    CHECK(compute_metrics(truth, worse).psnr < r.psnr);

    GridField bad = truth;
    bad.n_w += 1;
    bad.values.resize(bad.n_t * bad.frame_size());
    CHECK_THROWS_AS(compute_metrics(truth, bad), std::invalid_argument);
}

TEST_CASE("promotion reproduces the published pairs") {
    PromotionReport a = promotion({{"mmgn", 4.244e-3}, {"resmlp", 1.951e-2}});
    CHECK(a.best_name == "mmgn");
    CHECK(std::abs(a.promotion_pct - 78.24) <= 0.02);
    CHECK(a.promotion_pct == doctest::Approx((1.951e-2 - 4.244e-3) / 1.951e-2 * 100.0).epsilon(1e-14));

    PromotionReport b = promotion({{"ffn_p", 8.374e-3}, {"mmgn", 2.955e-3}});
    CHECK(b.best_name == "mmgn");
    CHECK(b.second_name == "ffn_p");
    CHECK(std::abs(b.promotion_pct - 64.71) <= 0.02);

    PromotionReport c = promotion(
        {{"mmgn", 2e-3}, {"resmlp", 9e-3}, {"siren", 4e-3}, {"ffn_g", 8e-3}});
    CHECK(c.best_name == "mmgn");
    CHECK(c.second_name == "siren");
    CHECK(c.promotion_pct == doctest::Approx(50.0).epsilon(1e-14));

    CHECK(promotion({{"a", 5e-3}, {"b", 5e-3}}).promotion_pct == 0.0);

    // scale invariance
    PromotionReport scaled = promotion({{"mmgn", 3.7 * 2e-3}, {"siren", 3.7 * 4e-3}});
    CHECK(scaled.promotion_pct == doctest::Approx(50.0).epsilon(1e-12));

    CHECK_THROWS_AS(promotion({{"only", 1e-3}}), std::invalid_argument);
    CHECK_THROWS_AS(promotion({{"a", 1e-3}, {"b", -1.0}}), std::invalid_argument);
}

TEST_CASE("dissimilarity of degenerate tables is zero") {
    LatentTable same(4, 3, {0.0, 1.0, 2.0, 3.0});
    for (std::size_t k = 0; k < 4; ++k) same.set_row(k, Tensor({3}, {0.5, -1.0, 2.0}));
    CorrelationStat s = latent_dissimilarity(same);
    CHECK(s.value <= 1e-12);  // every pair correlates at exactly 1
    CHECK(s.degenerate == 0);

    LatentTable identity(6, 6, {0, 1, 2, 3, 4, 5});
    for (std::size_t k = 0; k < 6; ++k) identity.codes(k, k) = 1.0;
    CorrelationStat id = latent_dissimilarity(identity);
    CHECK(id.value <= 1e-12);  // all pairs sit at -1/(n-1)
    CHECK(id.degenerate == 0);

    LatentTable single(1, 3, {0.0});
    CHECK_THROWS_AS(latent_dissimilarity(single), std::invalid_argument);
}

TEST_CASE("dissimilarity matches a naive double loop") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    LatentTable table(8, 5, {0, 1, 2, 3, 4, 5, 6, 7});
    for (std::size_t i = 0; i < table.codes.size(); ++i) table.codes.at(i) = u(rng);

    std::vector<double> corr;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j)
            corr.push_back(naive_pearson(table_row(table, i), table_row(table, j)));
    double mean = 0.0;
    for (double c : corr) mean += c;
    mean /= double(corr.size());
    double var = 0.0;
    for (double c : corr) var += (c - mean) * (c - mean);
    const double expected = std::sqrt(var / double(corr.size()));

    CorrelationStat s = latent_dissimilarity(table);
    CHECK(s.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(s.degenerate == 0);

    // a flat code correlates with nothing: its pairs count as zero
    for (std::size_t j = 0; j < 5; ++j) table.codes(2, j) = 1.5;
    CorrelationStat with_flat = latent_dissimilarity(table);
    CHECK(with_flat.degenerate == 7);

    // per-code affine maps leave every correlation alone
    LatentTable mapped = table;
    for (std::size_t i = 0; i < mapped.codes.size(); ++i)
        mapped.codes.at(i) = -2.5 * mapped.codes.at(i) + 0.7;
    CHECK(latent_dissimilarity(mapped).value ==
          doctest::Approx(with_flat.value).epsilon(1e-12));
}

TEST_CASE("auto-decoder diagnosis vanishes when codes mirror the frames") {
    GridField truth = small_cube(5, 3, 4, 21);
    LatentTable codes(5, truth.frame_size(), truth.stamps);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t i = 0; i < truth.frame_size(); ++i)
            codes.codes(t, i) = truth.values[t * truth.frame_size() + i];

    CorrelationStat d = autodecoder_diagnosis(codes, truth);
    CHECK(d.value <= 1e-15);
    CHECK(d.degenerate == 0);

    // consistent relabeling of time leaves the diagnosis unchanged
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LatentTable random_codes(5, 3, truth.stamps);
    for (std::size_t i = 0; i < random_codes.codes.size(); ++i) random_codes.codes.at(i) = u(rng);
    const double base = autodecoder_diagnosis(random_codes, truth).value;

    const std::size_t perm[5] = {3, 0, 4, 1, 2};
    GridField shuffled = truth;
    LatentTable shuffled_codes = random_codes;
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t i = 0; i < truth.frame_size(); ++i)
            shuffled.values[t * truth.frame_size() + i] =
                truth.values[perm[t] * truth.frame_size() + i];
        for (std::size_t j = 0; j < 3; ++j)
            shuffled_codes.codes(t, j) = random_codes.codes(perm[t], j);
    }
    CHECK(autodecoder_diagnosis(shuffled_codes, shuffled).value ==
          doctest::Approx(base).epsilon(1e-12));

    LatentTable wrong(4, 3, {0, 1, 2, 3});
    CHECK_THROWS_AS(autodecoder_diagnosis(wrong, truth), std::invalid_argument);
}

TEST_CASE("diagnosis of unrelated codes approaches the frame-correlation energy") {
    GridField truth = small_cube(12, 6, 8, 33);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LatentTable codes(12, 5000, truth.stamps);
    for (std::size_t i = 0; i < codes.codes.size(); ++i) codes.codes.at(i) = u(rng);

    double expected = 0.0;
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j) {
            if (i == j) continue;
            const double c = naive_pearson(frame_of(truth, i), frame_of(truth, j));
            expected += c * c;
        }
    expected /= 144.0;

    const double d = autodecoder_diagnosis(codes, truth).value;
    CHECK(std::abs(d - expected) <= 0.01);

    // a constant frame degrades gracefully into warnings
    GridField flat = truth;
    for (std::size_t i = 0; i < flat.frame_size(); ++i) flat.values[i] = 2.0;
    CHECK(autodecoder_diagnosis(codes, flat).degenerate > 0);
}

TEST_CASE("ablation scores unused latent dimensions at exactly zero") {
    ModelSpec spec;
    spec.arch = Arch::mmgn;
    spec.d_z = 3;
    spec.width = 8;
    spec.depth = 2;
    spec.input_scale = 4.0;
    auto model = make_model(spec, 50);
    auto& mmgn = dynamic_cast<MmgnModel&>(*model);
    for (auto& wz : mmgn.w_z)
        for (std::size_t r = 0; r < wz.rows(); ++r) wz(r, 1) = 0.0;  // dimension 1 is inert

    GridField truth = small_cube(4, 6, 6, 60);
    LatentTable latents(4, 3, truth.stamps);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (std::size_t i = 0; i < latents.codes.size(); ++i) latents.codes.at(i) = u(rng);

    std::vector<double> nmse = ablation_nmse(*model, latents, truth);
    REQUIRE(nmse.size() == 3);
    CHECK(nmse[1] == 0.0);

    LatentTable mismatched(3, 3, {0, 1, 2});
    CHECK_THROWS_AS(ablation_nmse(*model, mismatched, truth), std::invalid_argument);
}

TEST_CASE("single-dimension ablation equals its defining ratio") {
    ModelSpec spec;
    spec.arch = Arch::mmgn;
    spec.d_z = 1;
    spec.width = 8;
    spec.depth = 2;
    spec.input_scale = 4.0;
    auto model = make_model(spec, 51);

    GridField truth = small_cube(3, 5, 5, 61);
    LatentTable latents(3, 1, truth.stamps);
    latents.codes(0, 0) = 0.4;
    latents.codes(1, 0) = -0.9;
    latents.codes(2, 0) = 1.3;

    auto cube_mse = [&](const LatentTable& table) {
        double se = 0.0;
        for (std::size_t t = 0; t < 3; ++t) {
            Tensor frame = model->predict(normalize_coords(truth), table.row(t), 0.0);
            for (std::size_t i = 0; i < truth.frame_size(); ++i) {
                const double d = frame.at(i) - truth.values[t * truth.frame_size() + i];
                se += d * d;
            }
        }
        return se / double(truth.values.size());
    };
    const double full = cube_mse(latents);
    LatentTable zeroed = latents;
    for (std::size_t t = 0; t < 3; ++t) zeroed.codes(t, 0) = 0.0;
    const double expected = (cube_mse(zeroed) - full) / full * 100.0;

    std::vector<double> nmse = ablation_nmse(*model, latents, truth);
    REQUIRE(nmse.size() == 1);
    CHECK(nmse[0] == doctest::Approx(expected).epsilon(1e-12));

    // perfect reconstruction leaves the ratio undefined
    GridField perfect = truth;
    for (std::size_t t = 0; t < 3; ++t) {
        Tensor frame = model->predict(normalize_coords(truth), latents.row(t), 0.0);
        for (std::size_t i = 0; i < truth.frame_size(); ++i)
            perfect.values[t * truth.frame_size() + i] = frame.at(i);
    }
    CHECK_THROWS_AS(ablation_nmse(*model, latents, perfect), std::runtime_error);
}

TEST_CASE("latent matrices stack run dimensions side by side") {
    LatentTable a(3, 1, {0.0, 1.0, 2.0});
    LatentTable b(3, 2, {0.0, 1.0, 2.0});
    LatentTable c(3, 4, {0.0, 1.0, 2.0});
    for (std::size_t k = 0; k < 3; ++k) {
        a.codes(k, 0) = double(k);
        for (std::size_t j = 0; j < 2; ++j) b.codes(k, j) = 10.0 + double(k * 2 + j);
        for (std::size_t j = 0; j < 4; ++j) c.codes(k, j) = 100.0 + double(k * 4 + j);
    }
    LatentTable z = assemble_latent_matrix({&a, &b, &c});
    CHECK(z.size() == 3);
    CHECK(z.dim() == 7);
    CHECK(z.codes(1, 0) == 1.0);
    CHECK(z.codes(1, 2) == 13.0);
    CHECK(z.codes(2, 6) == 111.0);

    // the published ladder of sizes 1..512 lands on 1023 columns
    std::vector<LatentTable> ladder;
    for (std::size_t d = 1; d <= 512; d *= 2) ladder.emplace_back(2, d, std::vector<double>{0.0, 1.0});
    std::vector<const LatentTable*> ptrs;
    for (auto& t : ladder) ptrs.push_back(&t);
    CHECK(assemble_latent_matrix(ptrs).dim() == 1023);

    LatentTable mismatch(2, 2, {0.0, 1.0});
    CHECK_THROWS_AS(assemble_latent_matrix({&a, &mismatch}), std::invalid_argument);
    CHECK_THROWS_AS(assemble_latent_matrix({}), std::invalid_argument);
}

TEST_CASE("snapshot spectrum recovers constructed modes exactly") {
    // three orthogonal spatial patterns with orthogonal zero-mean time series:
    // eigenvalues are the products of the squared norms, here 36, 16, 4
    const std::size_t n_t = 4, fs = 12;
    const double times[3][4] = {{1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
    double norms2[3] = {9.0, 4.0, 1.0};
    GridField cube;
    cube.n_t = n_t;
    cube.n_h = 3;
    cube.n_w = 4;
    cube.stamps = {0, 1, 2, 3};
    cube.values.assign(n_t * fs, 0.0);
    for (std::size_t r = 0; r < 3; ++r) {
        // pattern r occupies its own set of four sites with norm sqrt(norms2)
        const double amp = std::sqrt(norms2[r] / 4.0);
        for (std::size_t t = 0; t < n_t; ++t)
            for (std::size_t i = 0; i < 4; ++i)
                cube.values[t * fs + r * 4 + i] = times[r][t] * amp;
    }

    PodResult pod = snapshot_pod(cube);
    REQUIRE(pod.eigenvalues.size() == 4);
    CHECK(pod.eigenvalues[0] == doctest::Approx(36.0).epsilon(1e-9));
    CHECK(pod.eigenvalues[1] == doctest::Approx(16.0).epsilon(1e-9));
    CHECK(pod.eigenvalues[2] == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(pod.eigenvalues[3] <= 1e-9);
    CHECK(pod.cumulative_energy[0] == doctest::Approx(36.0 / 56.0).epsilon(1e-12));
    CHECK(pod.cumulative_energy[1] == doctest::Approx(52.0 / 56.0).epsilon(1e-12));
    CHECK(std::abs(pod.cumulative_energy.back() - 1.0) <= 1e-12);
    for (std::size_t k = 1; k < 4; ++k)
        CHECK(pod.cumulative_energy[k] >= pod.cumulative_energy[k - 1]);
    CHECK(pod.modes_for(0.6) == 1);
    CHECK(pod.modes_for(0.9) == 2);    // 52/56 clears 0.9
    CHECK(pod.modes_for(0.95) == 3);
    CHECK(pod.modes_for(1.0) == 4);
    CHECK_THROWS_AS(pod.modes_for(0.0), std::invalid_argument);
    CHECK_THROWS_AS(pod.modes_for(1.5), std::invalid_argument);
}

TEST_CASE("rank-one cubes concentrate all energy in one mode") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t fs = 30;
    std::vector<double> pattern(fs);
    for (double& v : pattern) v = u(rng);

    GridField cube;
    cube.n_t = 5;
    cube.n_h = 5;
    cube.n_w = 6;
    cube.stamps = {0, 1, 2, 3, 4};
    const double amps[5] = {1.0, 2.0, -0.5, 3.0, 0.25};
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t i = 0; i < fs; ++i) cube.values.push_back(amps[t] * pattern[i]);

    PodResult pod = snapshot_pod(cube);
    CHECK(pod.modes_for(0.9) == 1);
    for (std::size_t k = 1; k < 5; ++k)
        CHECK(pod.eigenvalues[k] <= 1e-10 * pod.eigenvalues[0]);
    CHECK(pod.cumulative_energy[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectrum ignores how the lattice is laid out") {
    GridField cube = small_cube(6, 5, 5, 70);
    PodResult base = snapshot_pod(cube);

    GridField permuted = cube;
    std::vector<std::size_t> perm(cube.frame_size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7 + 3) % perm.size();
    for (std::size_t t = 0; t < cube.n_t; ++t)
        for (std::size_t i = 0; i < perm.size(); ++i)
            permuted.values[t * cube.frame_size() + i] =
                cube.values[t * cube.frame_size() + perm[i]];

    PodResult other = snapshot_pod(permuted);
    for (std::size_t k = 0; k < base.eigenvalues.size(); ++k)
        CHECK(other.eigenvalues[k] ==
              doctest::Approx(base.eigenvalues[k]).epsilon(1e-9).scale(base.eigenvalues[0]));

    GridField one_frame = cube;
    one_frame.n_t = 1;
    one_frame.stamps = {0.0};
    one_frame.values.resize(cube.frame_size());
    CHECK_THROWS_AS(snapshot_pod(one_frame), std::invalid_argument);

    GridField still;
    still.n_t = 3;
    still.n_h = 2;
    still.n_w = 2;
    still.stamps = {0, 1, 2};
    still.values.assign(12, 1.0);
    for (std::size_t i = 0; i < 4; ++i) still.values[i] = double(i);
    for (std::size_t t = 1; t < 3; ++t)
        for (std::size_t i = 0; i < 4; ++i) still.values[t * 4 + i] = double(i);
    CHECK_THROWS_AS(snapshot_pod(still), std::runtime_error);  // frozen in time
}

TEST_CASE("report files parse back to their values") {
    GridField truth = small_cube(3, 4, 4, 80);
    GridField pred = small_cube(3, 4, 4, 81);
    MetricReport r = compute_metrics(truth, pred);
    write_metric_report(r, "metrics_test.csv");
    std::istringstream in(read_file("metrics_test.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "frame,mse,psnr,ssim");
    int rows = 0;
    std::string last;
    while (std::getline(in, line)) {
        last = line;
        ++rows;
    }
    CHECK(rows == 4);
    double mse = 0.0, psnr = 0.0, ssim = 0.0;
    REQUIRE(std::sscanf(last.c_str(), "all,%lf,%lf,%lf", &mse, &psnr, &ssim) == 3);
    CHECK(mse == r.mse);
    CHECK(ssim == r.ssim);
    std::remove("metrics_test.csv");

    PodResult pod = snapshot_pod(truth);
    write_pod_spectrum(pod, "pod_test.csv");
    std::istringstream pin(read_file("pod_test.csv"));
    std::getline(pin, line);
    CHECK(line == "k,lambda,cumulative_energy");
    rows = 0;
    while (std::getline(pin, line)) ++rows;
    CHECK(rows == 3);
    std::remove("pod_test.csv");
}
