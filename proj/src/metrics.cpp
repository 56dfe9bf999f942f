#include "fieldrec/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fieldrec/inference.hpp"

namespace fieldrec {

namespace {

constexpr double kPsnrCap = 1e9;

struct FrameStats {
    double mean = 0.0;
    double var = 0.0;  // biased
};

FrameStats frame_stats(const double* v, std::size_t n) {
    FrameStats s;
    for (std::size_t i = 0; i < n; ++i) s.mean += v[i];
    s.mean /= double(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - s.mean;
        s.var += d * d;
    }
    s.var /= double(n);
    return s;
}

// One SSIM factor with the exact-match convention for the 0/0 case.
double ssim_factor(double num, double den) {
    if (den == 0.0) return num == 0.0 ? 1.0 : 0.0;
    return num / den;
}

double psnr_from(double range, double mse) {
    if (mse == 0.0) return kPsnrCap;
    if (range == 0.0) return -kPsnrCap;
    return std::clamp(10.0 * std::log10(range * range / mse), -kPsnrCap, kPsnrCap);
}

// Pearson correlation of two equal-length vectors; zero variance on either
// side forces 0 and bumps the degenerate counter.
double pearson(const double* a, const double* b, std::size_t n, std::size_t& degenerate) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) {
        ++degenerate;
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

// Pairwise Pearson matrix over the rows of a (n, d) value array.
std::vector<double> correlation_matrix(const double* flat, std::size_t n, std::size_t d,
                                       std::size_t& degenerate) {
    std::vector<double> corr(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double c = pearson(flat + i * d, flat + j * d, d, degenerate);
            corr[i * n + j] = c;
            corr[j * n + i] = c;
        }
    return corr;
}

}  // namespace

MetricReport compute_metrics(const GridField& truth, const GridField& pred) {
    if (truth.n_t != pred.n_t || truth.n_h != pred.n_h || truth.n_w != pred.n_w)
        throw std::invalid_argument("metric inputs must share the cube shape");
    if (truth.n_t == 0 || truth.frame_size() == 0)
        throw std::invalid_argument("metric inputs must be nonempty");

    const std::size_t fs = truth.frame_size();
    MetricReport report;
    const FieldStats ts = compute_field_stats(truth);
    report.data_range = ts.max - ts.min;
    const double c1 = 0.01 * 0.01 * report.data_range * report.data_range;
    const double c2 = 0.03 * 0.03 * report.data_range * report.data_range;

    double total_se = 0.0;
    for (std::size_t t = 0; t < truth.n_t; ++t) {
        const double* tv = truth.values.data() + t * fs;
        const double* pv = pred.values.data() + t * fs;
        double se = 0.0, cov = 0.0;
        const FrameStats a = frame_stats(tv, fs);
        const FrameStats b = frame_stats(pv, fs);
        for (std::size_t i = 0; i < fs; ++i) {
            const double d = tv[i] - pv[i];
            se += d * d;
            cov += (tv[i] - a.mean) * (pv[i] - b.mean);
        }
        cov /= double(fs);
        const double mse_t = se / double(fs);
        const double luminance =
            ssim_factor(2.0 * a.mean * b.mean + c1, a.mean * a.mean + b.mean * b.mean + c1);
        const double structure = ssim_factor(2.0 * cov + c2, a.var + b.var + c2);
        report.mse_per_step.push_back(mse_t);
        report.psnr_per_step.push_back(psnr_from(report.data_range, mse_t));
        report.ssim_per_step.push_back(luminance * structure);
        total_se += se;
    }
    report.mse = total_se / double(truth.values.size());
    report.psnr = psnr_from(report.data_range, report.mse);
    double ssim_sum = 0.0;
    for (double v : report.ssim_per_step) ssim_sum += v;
    report.ssim = ssim_sum / double(truth.n_t);
    return report;
}

void write_metric_report(const MetricReport& report, const std::string& path) {
    std::string buf = "frame,mse,psnr,ssim\n";
    char line[128];
    for (std::size_t t = 0; t < report.mse_per_step.size(); ++t) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g\n", t, report.mse_per_step[t],
                      report.psnr_per_step[t], report.ssim_per_step[t]);
        buf += line;
    }
    std::snprintf(line, sizeof line, "all,%.17g,%.17g,%.17g\n", report.mse, report.psnr,
                  report.ssim);
    buf += line;
    write_file_atomic(path, buf);
}

PromotionReport promotion(const std::vector<std::pair<std::string, double>>& errors) {
    if (errors.size() < 2)
        throw std::invalid_argument("promotion needs at least two model errors");
    for (const auto& [name, mse] : errors)
        if (!(mse >= 0.0) || !std::isfinite(mse))
            throw std::invalid_argument("invalid MSE for model '" + name + "'");

    std::size_t best = 0, second = 1;
    if (errors[second].second < errors[best].second) std::swap(best, second);
    for (std::size_t i = 2; i < errors.size(); ++i) {
        if (errors[i].second < errors[best].second) {
            second = best;
            best = i;
        } else if (errors[i].second < errors[second].second) {
            second = i;
        }
    }

    PromotionReport out;
    out.best_name = errors[best].first;
    out.second_name = errors[second].first;
    out.best = errors[best].second;
    out.second = errors[second].second;
    out.promotion_pct =
        out.second == out.best ? 0.0 : (out.second - out.best) / out.second * 100.0;
    return out;
}

CorrelationStat latent_dissimilarity(const LatentTable& codes) {
    const std::size_t n = codes.size(), d = codes.dim();
    if (n < 2) throw std::invalid_argument("dissimilarity needs at least two codes");
    if (d < 1) throw std::invalid_argument("dissimilarity needs a nonzero latent dimension");

    CorrelationStat out;
    std::vector<double> corr;
    corr.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            corr.push_back(pearson(codes.codes.data() + i * d, codes.codes.data() + j * d, d,
                                   out.degenerate));

    double mean = 0.0;
    for (double c : corr) mean += c;
    mean /= double(corr.size());
    double var = 0.0;
    for (double c : corr) var += (c - mean) * (c - mean);
    out.value = std::sqrt(var / double(corr.size()));
    return out;
}

CorrelationStat autodecoder_diagnosis(const LatentTable& codes, const GridField& truth) {
    const std::size_t n = codes.size();
    if (n < 2) throw std::invalid_argument("diagnosis needs at least two time instances");
    if (truth.n_t != n)
        throw std::invalid_argument("latent table and truth cube disagree on time count");
    if (codes.dim() < 1) throw std::invalid_argument("diagnosis needs a nonzero latent dimension");

    CorrelationStat out;
    const std::vector<double> a =
        correlation_matrix(codes.codes.data(), n, codes.dim(), out.degenerate);
    const std::vector<double> b =
        correlation_matrix(truth.values.data(), n, truth.frame_size(), out.degenerate);

    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    out.value = se / double(a.size());
    return out;
}

std::vector<double> ablation_nmse(FieldModel& model, const LatentTable& latents,
                                  const GridField& truth) {
    const std::size_t d_z = model.latent_dim();
    if (d_z == 0) throw std::invalid_argument("ablation needs a latent-conditioned model");
    if (latents.size() != truth.n_t)
        throw std::invalid_argument("latent table and truth cube disagree on time count");

    auto cube_mse = [&](const LatentTable& table) {
        double se = 0.0;
        for (std::size_t t = 0; t < truth.n_t; ++t) {
            Tensor frame = evaluate_field(model, table.row(t), truth.n_h, truth.n_w,
                                          table.t_norm(table.stamps[t]));
            for (std::size_t i = 0; i < truth.frame_size(); ++i) {
                const double d = frame.at(i) - truth.values[t * truth.frame_size() + i];
                se += d * d;
            }
        }
        return se / double(truth.values.size());
    };

    const double full = cube_mse(latents);
    if (full == 0.0)
        throw std::runtime_error("full reconstruction is exact; ablation NMSE is undefined");

    std::vector<double> nmse(d_z, 0.0);
    for (std::size_t j = 0; j < d_z; ++j) {
        LatentTable ablated = latents;
        for (std::size_t k = 0; k < latents.size(); ++k) ablated.codes(k, j) = 0.0;
        nmse[j] = (cube_mse(ablated) - full) / full * 100.0;
    }
    return nmse;
}

LatentTable assemble_latent_matrix(const std::vector<const LatentTable*>& tables) {
    if (tables.empty()) throw std::invalid_argument("no latent tables to assemble");
    const std::size_t n = tables[0]->size();
    std::size_t total = 0;
    for (const LatentTable* t : tables) {
        if (t->size() != n)
            throw std::invalid_argument("latent tables disagree on time instance count");
        if (t->stamps != tables[0]->stamps)
            throw std::invalid_argument("latent tables disagree on time stamps");
        total += t->dim();
    }

    LatentTable out(n, total, tables[0]->stamps);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t col = 0;
        for (const LatentTable* t : tables)
            for (std::size_t j = 0; j < t->dim(); ++j) out.codes(k, col++) = t->codes(k, j);
    }
    return out;
}

std::size_t PodResult::modes_for(double threshold) const {
    if (!(threshold > 0.0) || threshold > 1.0)
        throw std::invalid_argument("energy threshold must lie in (0, 1]");
    for (std::size_t k = 0; k < cumulative_energy.size(); ++k)
        if (cumulative_energy[k] >= threshold) return k + 1;
    return cumulative_energy.size();
}

PodResult snapshot_pod(const GridField& field) {
    const std::size_t n_t = field.n_t, fs = field.frame_size();
    if (n_t < 2) throw std::invalid_argument("snapshot POD needs at least two frames");

    // center over time per spatial point
    std::vector<double> centered(field.values.begin(), field.values.end());
    for (std::size_t i = 0; i < fs; ++i) {
        double mean = 0.0;
        for (std::size_t t = 0; t < n_t; ++t) mean += centered[t * fs + i];
        mean /= double(n_t);
        for (std::size_t t = 0; t < n_t; ++t) centered[t * fs + i] -= mean;
    }

    Eigen::MatrixXd gram(n_t, n_t);
    for (std::size_t a = 0; a < n_t; ++a)
        for (std::size_t b = a; b < n_t; ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < fs; ++i) dot += centered[a * fs + i] * centered[b * fs + i];
            gram(long(a), long(b)) = dot;
            gram(long(b), long(a)) = dot;
        }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("snapshot POD eigendecomposition failed");

    PodResult out;
    out.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + n_t);
    std::sort(out.eigenvalues.rbegin(), out.eigenvalues.rend());
    const double lambda_max = out.eigenvalues.front();
    if (lambda_max <= 0.0) throw std::runtime_error("cube has no temporal variation");
    double total = 0.0;
    for (double& v : out.eigenvalues) {
        if (v < -1e-10 * lambda_max)
            throw std::runtime_error("snapshot Gram matrix produced a negative eigenvalue");
        if (v < 0.0) v = 0.0;
        total += v;
    }
    double acc = 0.0;
    for (double v : out.eigenvalues) {
        acc += v;
        out.cumulative_energy.push_back(acc / total);
    }
    return out;
}

void write_pod_spectrum(const PodResult& pod, const std::string& path) {
    std::string buf = "k,lambda,cumulative_energy\n";
    char line[96];
    for (std::size_t k = 0; k < pod.eigenvalues.size(); ++k) {
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", k + 1, pod.eigenvalues[k],
                      pod.cumulative_energy[k]);
        buf += line;
    }
    write_file_atomic(path, buf);
}

}  // namespace fieldrec
