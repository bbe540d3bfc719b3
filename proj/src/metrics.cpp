#include "inrshape/metrics.hpp"

#include "inrshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace inrshape {
namespace {

void mean_std(std::span<const double> v, double& mean, double& stddev) {
    mean = 0.0;
    stddev = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= double(v.size());
    if (v.size() < 2) return;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    stddev = std::sqrt(ss / double(v.size() - 1));
}

double quantile(std::span<const double> sorted, double q) {
    const double pos = q * double(sorted.size() - 1);
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> bin_counts(std::span<const double> values, const std::vector<double>& edges) {
    const std::size_t bins = edges.size() - 1;
    std::vector<std::size_t> counts(bins, 0);
    const double lo = edges.front();
    const double hi = edges.back();
    for (double v : values) {
        std::size_t b = 0;
        if (hi > lo) {
            const double t = (v - lo) / (hi - lo) * double(bins);
            b = t <= 0.0 ? 0 : std::min(bins - 1, std::size_t(t));
        }
        ++counts[b];
    }
    return counts;
}

std::string svg_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

std::string histogram_svg(const Histogram& h) {
    constexpr double W = 480, H = 320, M = 40;
    std::size_t total_a = 0, total_b = 0;
    for (auto c : h.training) total_a += c;
    for (auto c : h.generated) total_b += c;
    double peak = 0.0;
    for (std::size_t i = 0; i < h.training.size(); ++i) {
        if (total_a) peak = std::max(peak, double(h.training[i]) / double(total_a));
        if (total_b) peak = std::max(peak, double(h.generated[i]) / double(total_b));
    }
    if (peak <= 0.0) peak = 1.0;
    const double bw = (W - 2 * M) / double(h.training.size());
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << M << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << feature_name(h.feature)
      << ": training (blue) vs generated (orange)</text>\n";
    auto bars = [&](const std::vector<std::size_t>& counts, std::size_t total, const char* color) {
        if (!total) return;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const double frac = double(counts[i]) / double(total) / peak;
            const double bh = frac * (H - 2 * M);
            s << "<rect x=\"" << svg_number(M + double(i) * bw) << "\" y=\"" << svg_number(H - M - bh) << "\" width=\""
              << svg_number(bw) << "\" height=\"" << svg_number(bh) << "\" fill=\"" << color
              << "\" fill-opacity=\"0.5\"/>\n";
        }
    };
    bars(h.training, total_a, "#1f77b4");
    bars(h.generated, total_b, "#ff7f0e");
    s << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << M << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << h.edges.front() << "</text>\n";
    s << "<text x=\"" << W - M - 60 << "\" y=\"" << H - 10 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << h.edges.back() << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

std::string scatter_svg(const FeatureCorrelation& c) {
    constexpr double W = 400, H = 400, M = 40;
    double lo = INFINITY, hi = -INFINITY;
    for (double v : c.conditioned) lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : c.measured) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    auto px = [&](double v) { return M + (v - lo) / (hi - lo) * (W - 2 * M); };
    auto py = [&](double v) { return H - M - (v - lo) / (hi - lo) * (H - 2 * M); };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << M << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << feature_name(c.feature)
      << " conditioned vs measured, PCC " << (c.pcc ? svg_number(*c.pcc) : std::string("n/a")) << "</text>\n";
    s << "<line x1=\"" << px(lo) << "\" y1=\"" << py(lo) << "\" x2=\"" << px(hi) << "\" y2=\"" << py(hi)
      << "\" stroke=\"gray\" stroke-dasharray=\"4\"/>\n";
    for (std::size_t i = 0; i < c.conditioned.size(); ++i)
        s << "<circle cx=\"" << svg_number(px(c.conditioned[i])) << "\" cy=\"" << svg_number(py(c.measured[i]))
          << "\" r=\"2\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) fail(ErrorCode::Parameter, "pearson: sequences differ in length");
    if (xs.size() < 3) fail(ErrorCode::Parameter, "pearson: need at least 3 pairs");
    const double n = double(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::Numerical, "pearson: correlation undefined for zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json ReconstructionReport::to_json() const {
    nlohmann::json per_shape = nlohmann::json::array();
    for (std::size_t i = 0; i < shape_ids.size(); ++i)
        per_shape.push_back({{"shape_id", shape_ids[i]},
                             {"chamfer", chamfer[i] ? nlohmann::json(*chamfer[i]) : nlohmann::json(nullptr)}});
    nlohmann::json j = {{"per_shape", per_shape},
                        {"mean", mean},
                        {"std", stddev},
                        {"empty_count", empty_count},
                        {"units", "unit-cube"}};
    if (mean_mm) j["mean_mm"] = *mean_mm;
    if (stddev_mm) j["std_mm"] = *stddev_mm;
    return j;
}

ReconstructionReport reconstruction_report(std::span<const std::uint32_t> ids, std::span<const TriMesh> references,
                                           std::span<const std::optional<TriMesh>> reconstructions,
                                           const ChamferOptions& chamfer, std::optional<double> mm_per_unit) {
    if (ids.size() != references.size() || references.size() != reconstructions.size())
        fail(ErrorCode::Shape, "reconstruction inputs differ in length");
    ReconstructionReport r;
    r.shape_ids.assign(ids.begin(), ids.end());
    std::vector<double> values;
    for (std::size_t i = 0; i < references.size(); ++i) {
        if (!reconstructions[i] || reconstructions[i]->empty()) {
            r.chamfer.push_back(std::nullopt);
            ++r.empty_count;
            continue;
        }
        const double d = chamfer_distance(references[i], *reconstructions[i], chamfer);
        r.chamfer.push_back(d);
        values.push_back(d);
    }
    mean_std(values, r.mean, r.stddev);
    if (mm_per_unit) {
        r.mean_mm = r.mean * *mm_per_unit;
        r.stddev_mm = r.stddev * *mm_per_unit;
    }
    return r;
}

ReconstructionReport evaluate_reconstruction(const ShapeModel& model, const Dataset& dataset,
                                             const ReconstructionOptions& options) {
    std::vector<std::uint32_t> ids = options.shape_ids;
    if (ids.empty())
        for (const auto& s : dataset.shapes) ids.push_back(s.id);
    std::vector<TriMesh> refs;
    std::vector<std::optional<TriMesh>> recon;
    for (std::uint32_t id : ids) {
        if (id >= model.latents.size()) fail(ErrorCode::NotFound, "model has no code for shape " + std::to_string(id));
        refs.push_back(dataset.shape(id).mesh);
        Synthesis s = synthesize(model, model.latents[id], options.synthesis);
        recon.push_back(s.empty ? std::nullopt : std::optional<TriMesh>(std::move(s.mesh)));
    }
    return reconstruction_report(ids, refs, recon, options.chamfer, dataset.mm_per_unit);
}

const FeatureCorrelation* SteerabilityReport::find(Feature f) const {
    for (const auto& c : features)
        if (c.feature == f) return &c;
    return nullptr;
}

nlohmann::json SteerabilityReport::to_json() const {
    nlohmann::json feats = nlohmann::json::object();
    for (const auto& c : features)
        feats[std::string(feature_name(c.feature))] = {{"pcc", c.pcc ? nlohmann::json(*c.pcc) : nlohmann::json(nullptr)},
                                                       {"conditioned", c.conditioned},
                                                       {"measured", c.measured}};
    return {{"requested", requested}, {"empty_count", empty_count}, {"empty_rate", empty_rate}, {"features", feats}};
}

SteerabilityReport steerability_from_pairs(std::span<const Feature> features, std::span<const FeatureVector> conditioned,
                                           std::span<const std::optional<FeatureVector>> measured) {
    if (conditioned.size() != measured.size()) fail(ErrorCode::Shape, "conditioned and measured counts differ");
    SteerabilityReport r;
    r.requested = conditioned.size();
    for (const auto& m : measured)
        if (!m) ++r.empty_count;
    r.empty_rate = r.requested ? double(r.empty_count) / double(r.requested) : 0.0;
    for (Feature f : features) {
        FeatureCorrelation c;
        c.feature = f;
        for (std::size_t i = 0; i < conditioned.size(); ++i) {
            if (!measured[i]) continue;
            c.conditioned.push_back(conditioned[i].get(f));
            c.measured.push_back(measured[i]->get(f));
        }
        try {
            c.pcc = pearson(c.conditioned, c.measured);
        } catch (const Error&) {
            c.pcc = std::nullopt;
        }
        r.features.push_back(std::move(c));
    }
    return r;
}

SteerabilityReport evaluate_steerability(const ShapeModel& model, const LatentSampler& sampler, std::size_t n,
                                         std::uint64_t seed, const SteerabilityOptions& options) {
    if (!model.conditioned()) fail(ErrorCode::UnsupportedModel, "steerability needs a conditioned model");
    CohortOptions cohort_options = options.cohort;
    cohort_options.measure = true;
    const auto cohort = generate_cohort(model, sampler, n, seed, {}, cohort_options);
    std::vector<FeatureVector> conditioned;
    std::vector<std::optional<FeatureVector>> measured;
    for (const auto& m : cohort) {
        conditioned.push_back(*m.conditioned);
        measured.push_back(m.measured);
    }
    SteerabilityReport r = steerability_from_pairs(model.config.fixed_features, conditioned, measured);
    if (r.empty_rate > options.max_empty_rate) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "steerability aborted: %zu of %zu generated meshes are empty (%.1f%% > %.1f%%)",
                      r.empty_count, r.requested, 100.0 * r.empty_rate, 100.0 * options.max_empty_rate);
        fail(ErrorCode::Numerical, buf);
    }
    return r;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) fail(ErrorCode::Parameter, "KS statistic needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(double(i) / double(x.size()) - double(j) / double(y.size())));
    }
    return d;
}

std::vector<double> freedman_diaconis_edges(std::span<const double> pooled, std::size_t max_bins) {
    if (pooled.empty()) fail(ErrorCode::Parameter, "cannot bin an empty sample");
    std::vector<double> sorted(pooled.begin(), pooled.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    if (!(hi > lo)) return {lo - 0.5, lo + 0.5};
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    const double width = 2.0 * iqr / std::cbrt(double(sorted.size()));
    std::size_t bins = width > 0.0 ? std::size_t(std::ceil((hi - lo) / width))
                                   : std::size_t(std::ceil(std::sqrt(double(sorted.size()))));
    bins = std::clamp<std::size_t>(bins, 1, std::max<std::size_t>(1, max_bins));
    std::vector<double> edges(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) edges[b] = lo + (hi - lo) * double(b) / double(bins);
    edges.back() = hi;
    return edges;
}

nlohmann::json DistributionComparison::to_json() const {
    nlohmann::json feats = nlohmann::json::object();
    for (const auto& h : histograms)
        feats[std::string(feature_name(h.feature))] = {{"ks", ks[int(h.feature)]},
                                                       {"edges", h.edges},
                                                       {"training", h.training},
                                                       {"generated", h.generated}};
    return {{"training_count", training_count},
            {"generated_count", generated_count},
            {"binning", "freedman-diaconis"},
            {"features", feats}};
}

DistributionComparison compare_distributions(std::span<const FeatureVector> training,
                                             std::span<const FeatureVector> generated) {
    if (training.size() < 2 || generated.size() < 2)
        fail(ErrorCode::Parameter, "distribution comparison needs at least 2 samples per side");
    DistributionComparison out;
    out.training_count = training.size();
    out.generated_count = generated.size();
    for (Feature f : kAllFeatures) {
        std::vector<double> a, b;
        for (const auto& v : training) a.push_back(v.get(f));
        for (const auto& v : generated) b.push_back(v.get(f));
        std::vector<double> pooled(a);
        pooled.insert(pooled.end(), b.begin(), b.end());
        Histogram h;
        h.feature = f;
        h.edges = freedman_diaconis_edges(pooled);
        h.training = bin_counts(a, h.edges);
        h.generated = bin_counts(b, h.edges);
        out.ks[int(f)] = ks_statistic(a, b);
        out.histograms.push_back(std::move(h));
    }
    return out;
}

void write_plots(const std::filesystem::path& dir, const DistributionComparison* distributions,
                 const SteerabilityReport* steerability) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create plot directory " + dir.string());
    if (distributions)
        for (const auto& h : distributions->histograms)
            write_text(dir / ("hist_" + std::string(feature_name(h.feature)) + ".svg"), histogram_svg(h));
    if (steerability)
        for (const auto& c : steerability->features)
            write_text(dir / ("pcc_" + std::string(feature_name(c.feature)) + ".svg"), scatter_svg(c));
}

}  // namespace inrshape
