#include "pairlink/pipeline.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "pairlink/errors.hpp"
#include "pairlink/units.hpp"

namespace pairlink {

namespace {

size_t arm_index(Arm arm)
{
    return arm == Arm::A ? 0 : 1;
}

const DetectorSpec& detector_for(const ExperimentConfig& config, size_t channel)
{
    switch (channel) {
    case kChannelAPass: return config.detector_a;
    case kChannelBPass: return config.detector_b;
    case kChannelAReflect: return config.detector_a_reflect;
    case kChannelBReflect: return config.detector_b_reflect;
    }
    throw ConfigError("channel index out of range");
}

const char* channel_file_stem(size_t channel)
{
    switch (channel) {
    case kChannelAPass: return "channel_a";
    case kChannelBPass: return "channel_b";
    case kChannelAReflect: return "channel_a_reflect";
    case kChannelBReflect: return "channel_b_reflect";
    }
    throw ConfigError("channel index out of range");
}

PeakFindParams peak_params(const AnalysisParams& params)
{
    PeakFindParams p;
    p.threshold_sigma = params.peak_threshold_sigma;
    return p;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

} // namespace

Basis basis_of_hwp_angle(double hwp_a_deg)
{
    double theta = std::fmod(projection_angle_deg(hwp_a_deg), 180.0);
    if (theta < 0.0)
        theta += 180.0;
    auto near = [](double x, double target) {
        return std::abs(x - target) < 1e-6;
    };
    if (near(theta, 0.0) || near(theta, 90.0) || near(theta, 180.0))
        return Basis::HV;
    if (near(theta, 45.0) || near(theta, 135.0))
        return Basis::DA;
    return Basis::Other;
}

ScanPointResult simulate_point(const ExperimentConfig& config,
                               size_t point_index)
{
    if (point_index >= config.analyzer_scan.size())
        throw ConfigError("scan point index out of range");

    const AnalyzerSettings settings = config.analyzer_scan[point_index];
    const std::string sfx = "/p" + std::to_string(point_index);
    const uint64_t seed = config.seed;

    Rng rng_time = substream(seed, "emit.time" + sfx);
    Rng rng_line = substream(seed, "emit.line" + sfx);
    Rng rng_survival = substream(seed, "survival" + sfx);
    Rng rng_wdm = substream(seed, "wdm" + sfx);
    std::array<Rng, 2> rng_fiber { substream(seed, "fiber.a" + sfx),
                                   substream(seed, "fiber.b" + sfx) };
    Rng rng_measure = substream(seed, "measure" + sfx);

    const SourceLine line(config.source);
    const std::array<FiberTransport, 2> transport {
        FiberTransport(config.fiber_a), FiberTransport(config.fiber_b)
    };
    const double lo = std::min(line.signal_min_nm(), line.idler_min_nm());
    const double hi = std::max(line.signal_max_nm(), line.idler_max_nm());
    // Any photon whose survival uniform exceeds this cap is lost in either
    // arm, so its wavelength, routing and mode never need to be sampled.
    const double cap = std::max(transport[0].survival_cap_over(lo, hi),
                                transport[1].survival_cap_over(lo, hi));

    const size_t channels = config.channel_count();
    std::vector<std::vector<double>> arrivals(channels);

    const double end_ps = config.duration_s * kPsPerS;
    const double rate_per_ps = config.source.brightness_pairs_per_s / kPsPerS;
    uint64_t pairs = 0;

    auto deliver = [&](Arm arm, Port port, double arrival) {
        if (port == Port::Pass) {
            arrivals[arm == Arm::A ? kChannelAPass : kChannelBPass]
                .push_back(arrival);
        } else if (config.detect_reflected) {
            arrivals[arm == Arm::A ? kChannelAReflect : kChannelBReflect]
                .push_back(arrival);
        }
    };

    if (rate_per_ps > 0.0 && end_ps > 0.0) {
        double t = rng_time.exponential(rate_per_ps);
        while (t <= end_ps) {
            ++pairs;
            const double u_signal = rng_survival.uniform();
            const double u_idler = rng_survival.uniform();
            if (u_signal < cap || u_idler < cap) {
                const double lambda_s = line.sample_signal_nm(rng_line);
                const double lambda_i = line.idler_nm(lambda_s);
                const Arm arm_s = wdm_route_photon(lambda_s, config.wdm, rng_wdm);
                const Arm arm_i = wdm_route_photon(lambda_i, config.wdm, rng_wdm);
                const bool alive_s = u_signal
                    < transport[arm_index(arm_s)].survival(lambda_s);
                const bool alive_i = u_idler
                    < transport[arm_index(arm_i)].survival(lambda_i);

                if (alive_s || alive_i) {
                    auto arrive = [&](Arm arm) {
                        const auto& tr = transport[arm_index(arm)];
                        const bool lp11 = rng_fiber[arm_index(arm)].bernoulli(
                            tr.spec().lp11_excitation);
                        return t + tr.base_delay_ps()
                            + (lp11 ? tr.lp11_delay_ps() : 0.0);
                    };
                    // Signal handled before idler throughout.
                    const double arrival_s = alive_s ? arrive(arm_s) : 0.0;
                    const double arrival_i = alive_i ? arrive(arm_i) : 0.0;

                    Port port_s = Port::Pass;
                    Port port_i = Port::Pass;
                    if (config.analyzers_enabled) {
                        if (alive_s && alive_i) {
                            // The analyzer belongs to the arm, not to the
                            // photon; outcome_a always describes the photon
                            // sitting in arm A.
                            AnalyzerSettings joint;
                            joint.hwp_angle_a_deg = settings.hwp_angle_a_deg;
                            joint.hwp_angle_b_deg = settings.hwp_angle_b_deg;
                            if (arm_s == arm_i) {
                                const double hwp = arm_s == Arm::A
                                    ? settings.hwp_angle_a_deg
                                    : settings.hwp_angle_b_deg;
                                joint = { hwp, hwp };
                            }
                            const JointOutcome outcome
                                = measure_pair(config.polarization, joint,
                                               rng_measure);
                            if (arm_s == arm_i) {
                                port_s = outcome.port_a;
                                port_i = outcome.port_b;
                            } else if (arm_s == Arm::A) {
                                port_s = outcome.port_a;
                                port_i = outcome.port_b;
                            } else {
                                port_s = outcome.port_b;
                                port_i = outcome.port_a;
                            }
                        } else {
                            const Port port = measure_single(rng_measure);
                            if (alive_s)
                                port_s = port;
                            else
                                port_i = port;
                        }
                    }
                    if (alive_s)
                        deliver(arm_s, port_s, arrival_s);
                    if (alive_i)
                        deliver(arm_i, port_i, arrival_i);
                }
            }
            t += rng_time.exponential(rate_per_ps);
        }
    }

    ScanPointResult result;
    result.index = point_index;
    result.settings = settings;
    result.pairs_generated = pairs;
    result.channels.resize(channels);
    for (size_t ch = 0; ch < channels; ++ch) {
        std::sort(arrivals[ch].begin(), arrivals[ch].end());
        Rng rng_detect = substream(seed, "detect.ch" + std::to_string(ch) + sfx);
        Rng rng_dark = substream(seed, "dark.ch" + std::to_string(ch) + sfx);
        result.channels[ch].records
            = detect_channel(arrivals[ch], detector_for(config, ch),
                             config.duration_s, static_cast<uint16_t>(ch),
                             rng_detect, rng_dark);
        result.channels[ch].duration_s = config.duration_s;
    }
    return result;
}

void simulate_scan(const ExperimentConfig& config,
                   const std::function<void(ScanPointResult&&)>& consumer)
{
    config.validate();
    const size_t n = config.analyzer_scan.size();
    const size_t workers = std::clamp<size_t>(
        std::thread::hardware_concurrency(), 1, 8);

    if (n <= 1 || workers <= 1) {
        for (size_t i = 0; i < n; ++i)
            consumer(simulate_point(config, i));
        return;
    }

    // Points are independent substreams, so batches can run concurrently
    // while results are consumed in point order.
    for (size_t base = 0; base < n; base += workers) {
        const size_t count = std::min(workers, n - base);
        std::vector<std::future<ScanPointResult>> batch;
        batch.reserve(count);
        for (size_t k = 0; k < count; ++k) {
            const size_t index = base + k;
            batch.push_back(std::async(std::launch::async, [&config, index] {
                return simulate_point(config, index);
            }));
        }
        for (auto& future : batch)
            consumer(future.get());
    }
}

std::vector<ScanPointResult> simulate_experiment(const ExperimentConfig& config)
{
    std::vector<ScanPointResult> points;
    points.reserve(config.analyzer_scan.size());
    simulate_scan(config, [&](ScanPointResult&& point) {
        points.push_back(std::move(point));
    });
    return points;
}

StreamingAnalyzer::StreamingAnalyzer(const AnalysisParams& params)
    : params_(params)
{
    params_.validate();
}

void StreamingAnalyzer::add_point(const ScanPointResult& point)
{
    if (point.channels.size() < 2)
        throw AnalysisError("analysis needs the two pass channels");
    const TimeTagStream& a = point.channels[kChannelAPass];
    const TimeTagStream& b = point.channels[kChannelBPass];

    const DelayHistogram h = cross_correlation(a, b, params_.bin_width_ps,
                                               params_.range_ps);
    if (!histogram_started_) {
        result_.histogram = h;
        histogram_started_ = true;
    } else {
        for (size_t i = 0; i < h.counts.size(); ++i)
            result_.histogram.counts[i] += h.counts[i];
        result_.histogram.total_pairs_considered += h.total_pairs_considered;
    }

    if (!center_) {
        if (params_.center_policy == CenterDelayPolicy::Fixed) {
            center_ = params_.center_delay_ps;
        } else {
            // Auto policy: fundamental peak of the first point's histogram.
            const PeakSet peaks = find_peaks(h, peak_params(params_));
            if (peaks.peaks.empty()) {
                center_ = 0;
                result_.auto_center_failed = true;
            } else {
                center_ = static_cast<int64_t>(
                    std::llround(peaks.peaks.front().delay_ps));
            }
        }
        result_.center_delay_ps = *center_;
    }

    PointRateReport report;
    report.index = point.index;
    report.settings = point.settings;
    report.coincidences = count_coincidences(a, b, params_.window_ps, *center_);
    report.duration_s = a.duration_s;
    if (report.duration_s > 0.0) {
        report.singles_a_hz = static_cast<double>(a.records.size())
            / report.duration_s;
        report.singles_b_hz = static_cast<double>(b.records.size())
            / report.duration_s;
        report.coincidence_rate_hz = static_cast<double>(report.coincidences)
            / report.duration_s;
        report.accidental_rate_hz
            = accidentals_rate(report.singles_a_hz, report.singles_b_hz,
                               static_cast<double>(params_.window_ps));
    }
    result_.rates.push_back(report);

    for (const auto& channel : point.channels)
        result_.total_tags += channel.records.size();

    CurveReport* curve = nullptr;
    for (auto& candidate : result_.curves)
        if (std::abs(candidate.hwp_a_deg - point.settings.hwp_angle_a_deg)
            < 1e-9)
            curve = &candidate;
    if (!curve) {
        CurveReport fresh;
        fresh.hwp_a_deg = point.settings.hwp_angle_a_deg;
        fresh.basis = basis_of_hwp_angle(fresh.hwp_a_deg);
        result_.curves.push_back(std::move(fresh));
        curve = &result_.curves.back();
    }
    curve->points.push_back({ point.settings.hwp_angle_b_deg,
                              static_cast<double>(report.coincidences) });
}

AnalysisResult StreamingAnalyzer::finish()
{
    result_.peaks = find_peaks(result_.histogram, peak_params(params_));

    bool any_undefined = false;
    double hv_sum = 0.0, da_sum = 0.0, minmax_sum = 0.0, fit_sum = 0.0;
    size_t hv_n = 0, da_n = 0, minmax_n = 0, fit_n = 0;
    for (auto& curve : result_.curves) {
        if (curve.points.size() < 8)
            continue; // not a visibility scan
        try {
            curve.minmax = visibility(curve.points, VisibilityMethod::MinMax,
                                      curve.basis);
        } catch (const UndefinedVisibilityError&) {
            any_undefined = true;
        } catch (const AnalysisError&) {
        }
        try {
            curve.fit = visibility(curve.points, VisibilityMethod::SinusoidFit,
                                   curve.basis);
        } catch (const AnalysisError&) {
        }
        if (curve.basis == Basis::Other)
            continue;
        if (curve.minmax) {
            minmax_sum += curve.minmax->v;
            ++minmax_n;
            if (curve.basis == Basis::HV) {
                hv_sum += curve.minmax->v;
                ++hv_n;
            } else {
                da_sum += curve.minmax->v;
                ++da_n;
            }
        }
        if (curve.fit) {
            fit_sum += curve.fit->v;
            ++fit_n;
        }
    }
    if (hv_n > 0)
        result_.visibility_hv_minmax = hv_sum / hv_n;
    if (da_n > 0)
        result_.visibility_da_minmax = da_sum / da_n;
    if (minmax_n > 0)
        result_.average_visibility_minmax = minmax_sum / minmax_n;
    if (fit_n > 0)
        result_.average_visibility_fit = fit_sum / fit_n;
    if (any_undefined || result_.total_tags == 0)
        result_.degenerate = true;
    return std::move(result_);
}

// --- file-based front ends -------------------------------------------------

namespace {

void write_summary(const AnalysisResult& result,
                   const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    auto emit = [&](const std::string& key, const std::string& value) {
        out << key << " = " << value << '\n';
    };

    emit("total_tags", std::to_string(result.total_tags));
    emit("center_delay_ps", std::to_string(result.center_delay_ps));
    emit("auto_center_failed", result.auto_center_failed ? "true" : "false");
    emit("histogram.total_pairs",
         std::to_string(result.histogram.total_pairs_considered));
    emit("peak_count", std::to_string(result.peaks.peaks.size()));
    for (size_t i = 0; i < result.peaks.peaks.size(); ++i) {
        const auto& peak = result.peaks.peaks[i];
        const std::string prefix = "peak." + std::to_string(i);
        emit(prefix + ".delay_ps", format_double(peak.delay_ps));
        emit(prefix + ".height", std::to_string(peak.height));
        emit(prefix + ".classification", to_string(peak.classification));
    }

    double coincidence_sum = 0.0, accidental_sum = 0.0;
    for (const auto& rate : result.rates) {
        coincidence_sum += rate.coincidence_rate_hz;
        accidental_sum += rate.accidental_rate_hz;
    }
    const double n_rates = result.rates.empty()
        ? 1.0
        : static_cast<double>(result.rates.size());
    emit("rate.points", std::to_string(result.rates.size()));
    emit("rate.mean_coincidence_hz", format_double(coincidence_sum / n_rates));
    emit("rate.mean_accidental_hz", format_double(accidental_sum / n_rates));

    for (size_t i = 0; i < result.curves.size(); ++i) {
        const auto& curve = result.curves[i];
        const std::string prefix = "curve." + std::to_string(i);
        emit(prefix + ".hwp_a_deg", format_double(curve.hwp_a_deg));
        emit(prefix + ".basis", to_string(curve.basis));
        emit(prefix + ".points", std::to_string(curve.points.size()));
        if (curve.minmax)
            emit(prefix + ".visibility_minmax", format_double(curve.minmax->v));
        if (curve.fit) {
            emit(prefix + ".visibility_fit", format_double(curve.fit->v));
            if (curve.fit->clamped)
                emit(prefix + ".visibility_fit_clamped", "true");
        }
    }
    if (result.visibility_hv_minmax)
        emit("visibility.hv.minmax", format_double(*result.visibility_hv_minmax));
    if (result.visibility_da_minmax)
        emit("visibility.da.minmax", format_double(*result.visibility_da_minmax));
    if (result.average_visibility_minmax)
        emit("visibility.average.minmax",
             format_double(*result.average_visibility_minmax));
    if (result.average_visibility_fit)
        emit("visibility.average.fit",
             format_double(*result.average_visibility_fit));
    emit("degenerate", result.degenerate ? "true" : "false");
}

std::vector<std::filesystem::path>
write_analysis_outputs(const AnalysisResult& result,
                       const std::filesystem::path& out_dir)
{
    std::vector<std::filesystem::path> files;

    const auto histogram_path = out_dir / "histogram.csv";
    {
        std::ofstream out = open_output(histogram_path);
        out << "delay_ps,counts\n";
        for (size_t i = 0; i < result.histogram.counts.size(); ++i)
            out << result.histogram.bin_center_ps(i) << ','
                << result.histogram.counts[i] << '\n';
    }
    files.push_back(histogram_path);

    const auto peaks_path = out_dir / "peaks.csv";
    {
        std::ofstream out = open_output(peaks_path);
        out << "delay_ps,height,classification\n";
        for (const auto& peak : result.peaks.peaks)
            out << format_double(peak.delay_ps) << ',' << peak.height << ','
                << to_string(peak.classification) << '\n';
    }
    files.push_back(peaks_path);

    const auto rates_path = out_dir / "rates.csv";
    {
        std::ofstream out = open_output(rates_path);
        out << "point,hwp_a_deg,hwp_b_deg,coincidences,duration_s,"
               "singles_a_hz,singles_b_hz,coincidence_rate_hz,"
               "accidental_rate_hz\n";
        for (const auto& rate : result.rates)
            out << rate.index << ',' << format_double(rate.settings.hwp_angle_a_deg)
                << ',' << format_double(rate.settings.hwp_angle_b_deg) << ','
                << rate.coincidences << ',' << format_double(rate.duration_s)
                << ',' << format_double(rate.singles_a_hz) << ','
                << format_double(rate.singles_b_hz) << ','
                << format_double(rate.coincidence_rate_hz) << ','
                << format_double(rate.accidental_rate_hz) << '\n';
    }
    files.push_back(rates_path);

    for (size_t i = 0; i < result.curves.size(); ++i) {
        const auto& curve = result.curves[i];
        if (curve.points.size() < 2)
            continue;
        const auto curve_path = out_dir
            / ("curve_" + std::to_string(i) + "_hwpa"
               + format_double(curve.hwp_a_deg) + ".csv");
        std::ofstream out = open_output(curve_path);
        out << "hwp_deg,counts\n";
        for (const auto& point : curve.points)
            out << format_double(point.hwp_deg) << ','
                << static_cast<uint64_t>(std::llround(point.counts)) << '\n';
        files.push_back(curve_path);
    }

    const auto summary_path = out_dir / "summary.txt";
    write_summary(result, summary_path);
    files.push_back(summary_path);
    return files;
}

void create_output_dir(const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + out_dir.string()
                      + ": " + ec.message());
}

} // namespace

SimulateOutput run_simulate(const ExperimentConfig& config,
                            const std::filesystem::path& out_dir,
                            TagFormat format)
{
    config.validate();
    create_output_dir(out_dir);

    const int64_t span_ps = static_cast<int64_t>(
        std::llround(config.duration_s * kPsPerS));
    const size_t channels = config.channel_count();
    std::vector<std::vector<TimeTag>> global(channels);

    simulate_scan(config, [&](ScanPointResult&& point) {
        const int64_t offset
            = static_cast<int64_t>(point.index) * span_ps;
        for (size_t ch = 0; ch < channels; ++ch)
            for (const auto& tag : point.channels[ch].records)
                global[ch].push_back({ tag.time_ps + offset, tag.channel });
    });

    SimulateOutput output;
    const std::string ext = format == TagFormat::Binary ? ".bin" : ".csv";
    std::vector<std::string> file_names;
    for (size_t ch = 0; ch < channels; ++ch) {
        // Late arrivals can spill past a point boundary: restore global
        // order, then run the dead-time veto across the seam.
        std::sort(global[ch].begin(), global[ch].end(),
                  [](const TimeTag& a, const TimeTag& b) {
                      return a.time_ps < b.time_ps;
                  });
        enforce_dead_time(global[ch], detector_for(config, ch).dead_time_ns);

        TimeTagStream stream;
        stream.records = std::move(global[ch]);
        stream.duration_s = config.duration_s
            * static_cast<double>(config.analyzer_scan.size());
        const std::string name = std::string(channel_file_stem(ch)) + ext;
        const auto path = out_dir / name;
        write_tags(path, stream, format);
        output.tag_files.push_back(path);
        file_names.push_back(name);
    }

    const auto manifest_path = out_dir / "manifest.txt";
    {
        std::ofstream out = open_output(manifest_path);
        out << serialize_experiment_config(config);
        out << "output.format = " << to_string(format) << '\n';
        out << "output.point_span_ps = " << span_ps << '\n';
        out << "output.points = " << config.analyzer_scan.size() << '\n';
        for (size_t ch = 0; ch < channels; ++ch)
            out << "output.file.ch" << ch << " = " << file_names[ch] << '\n';
    }
    output.manifest_path = manifest_path;
    return output;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    Manifest manifest;
    manifest.config = parse_experiment_config(text, path.string());

    // Collect the output.* bookkeeping keys the config parser skipped.
    std::istringstream lines(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> outputs;
    while (std::getline(lines, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        if (key.starts_with("output."))
            outputs.emplace_back(key, trim(line.substr(eq + 1)));
    }

    manifest.channel_files.resize(manifest.config.channel_count());
    bool format_seen = false, span_seen = false, points_seen = false;
    for (const auto& [key, value] : outputs) {
        if (key == "output.format") {
            manifest.format = tag_format_from_string(value);
            format_seen = true;
        } else if (key == "output.point_span_ps") {
            manifest.point_span_ps = std::stoll(value);
            span_seen = true;
        } else if (key == "output.points") {
            manifest.points = static_cast<size_t>(std::stoull(value));
            points_seen = true;
        } else if (key.starts_with("output.file.ch")) {
            const size_t ch = static_cast<size_t>(
                std::stoul(key.substr(std::string("output.file.ch").size())));
            if (ch >= manifest.channel_files.size())
                throw ConfigError(path.string() + ": manifest channel "
                                  + std::to_string(ch) + " out of range");
            manifest.channel_files[ch] = value;
        }
    }
    if (!format_seen || !span_seen || !points_seen)
        throw ConfigError(path.string()
                          + ": manifest is missing output.* keys");
    if (manifest.points != manifest.config.analyzer_scan.size())
        throw ConfigError(path.string()
                          + ": manifest point count does not match the scan");
    for (size_t ch = 0; ch < 2; ++ch)
        if (manifest.channel_files[ch].empty())
            throw ConfigError(path.string() + ": manifest lacks the file of "
                              "channel " + std::to_string(ch));
    return manifest;
}

namespace {

TimeTagStream slice_window(const TimeTagStream& stream, int64_t begin_ps,
                           std::optional<int64_t> end_ps, double duration_s)
{
    TimeTagStream out;
    out.duration_s = duration_s;
    auto lower = std::lower_bound(
        stream.records.begin(), stream.records.end(), begin_ps,
        [](const TimeTag& tag, int64_t t) { return tag.time_ps < t; });
    auto upper = end_ps ? std::lower_bound(
                     lower, stream.records.end(), *end_ps,
                     [](const TimeTag& tag, int64_t t) { return tag.time_ps < t; })
                        : stream.records.end();
    out.records.assign(lower, upper);
    return out;
}

} // namespace

AnalyzeOutput run_analyze(const std::filesystem::path& manifest_path,
                          const std::optional<AnalysisParams>& params_override,
                          const std::filesystem::path& out_dir)
{
    const Manifest manifest = load_manifest(manifest_path);
    AnalysisParams params = params_override.value_or(manifest.config.analysis);
    params.validate();
    create_output_dir(out_dir);

    const auto base = manifest_path.parent_path();
    TimeTagStream all_a = read_tags(base / manifest.channel_files[kChannelAPass],
                                    manifest.format);
    TimeTagStream all_b = read_tags(base / manifest.channel_files[kChannelBPass],
                                    manifest.format);

    StreamingAnalyzer analyzer(params);
    for (size_t k = 0; k < manifest.points; ++k) {
        const int64_t begin = static_cast<int64_t>(k) * manifest.point_span_ps;
        std::optional<int64_t> end;
        if (k + 1 < manifest.points)
            end = begin + manifest.point_span_ps;
        ScanPointResult point;
        point.index = k;
        point.settings = manifest.config.analyzer_scan[k];
        point.channels.resize(2);
        point.channels[kChannelAPass]
            = slice_window(all_a, begin, end, manifest.config.duration_s);
        point.channels[kChannelBPass]
            = slice_window(all_b, begin, end, manifest.config.duration_s);
        analyzer.add_point(point);
    }

    AnalyzeOutput output;
    output.result = analyzer.finish();
    output.files = write_analysis_outputs(output.result, out_dir);
    return output;
}

AnalyzeOutput run_analyze_pair(const std::filesystem::path& tags_a,
                               const std::filesystem::path& tags_b,
                               TagFormat format, const AnalysisParams& params,
                               double duration_s,
                               const std::filesystem::path& out_dir)
{
    params.validate();
    create_output_dir(out_dir);

    TimeTagStream a = read_tags(tags_a, format);
    TimeTagStream b = read_tags(tags_b, format);
    if (duration_s <= 0.0) {
        // Estimate the acquisition length from the tag span.
        int64_t span = 0;
        if (!a.records.empty())
            span = std::max(span, a.records.back().time_ps);
        if (!b.records.empty())
            span = std::max(span, b.records.back().time_ps);
        duration_s = static_cast<double>(span) / kPsPerS;
    }
    a.duration_s = duration_s;
    b.duration_s = duration_s;

    ScanPointResult point;
    point.index = 0;
    point.channels = { std::move(a), std::move(b) };

    StreamingAnalyzer analyzer(params);
    analyzer.add_point(point);

    AnalyzeOutput output;
    output.result = analyzer.finish();
    output.files = write_analysis_outputs(output.result, out_dir);
    return output;
}

BudgetOutput run_budget(const BudgetConfig& config,
                        const std::filesystem::path& out_dir, bool calibrate)
{
    config.validate();
    create_output_dir(out_dir);

    BudgetConfig resolved = config;
    BudgetOutput output;
    if (calibrate && !resolved.calibration_targets_km.empty()) {
        for (size_t i = 0; i < resolved.crossover_pairs.size(); ++i) {
            const auto& [label_a, label_b] = resolved.crossover_pairs[i];
            const size_t ia = resolved.system_index(label_a);
            const size_t ib = resolved.system_index(label_b);
            const double fixed = calibrate_fixed_loss_db(
                resolved.systems[ia], resolved.systems[ib],
                resolved.calibration_targets_km[i]);
            resolved.systems[ib].fixed_loss_db = fixed;
            output.calibrated_fixed_loss_db.push_back(fixed);
        }
    }

    const std::vector<double> grid = resolved.length_grid();
    std::vector<std::pair<size_t, size_t>> pairs;
    for (const auto& [a, b] : resolved.crossover_pairs)
        pairs.emplace_back(resolved.system_index(a), resolved.system_index(b));
    output.curve = budget_curve(resolved.systems, grid, pairs);

    const auto curve_path = out_dir / "budget_curve.csv";
    {
        std::ofstream out = open_output(curve_path);
        out << "length_km";
        for (const auto& label : output.curve.labels)
            out << ',' << label;
        out << '\n';
        for (size_t i = 0; i < output.curve.lengths_km.size(); ++i) {
            out << format_double(output.curve.lengths_km[i]);
            for (const auto& rates : output.curve.rates)
                out << ',' << format_double(rates[i]);
            out << '\n';
        }
    }
    output.files.push_back(curve_path);

    const auto markers_path = out_dir / "budget_markers.csv";
    {
        std::ofstream out = open_output(markers_path);
        out << "system_a,system_b,crossover_km\n";
        for (const auto& marker : output.curve.markers)
            out << marker.system_a << ',' << marker.system_b << ','
                << (marker.length_km ? format_double(*marker.length_km)
                                     : std::string("none"))
                << '\n';
    }
    output.files.push_back(markers_path);

    const auto manifest_path = out_dir / "budget_manifest.txt";
    {
        std::ofstream out = open_output(manifest_path);
        out << serialize_budget_config(resolved);
        for (size_t i = 0; i < output.calibrated_fixed_loss_db.size(); ++i) {
            out << "output.calibrated." << i << ".pair = "
                << resolved.crossover_pairs[i].first << ':'
                << resolved.crossover_pairs[i].second << '\n';
            out << "output.calibrated." << i << ".fixed_loss_db = "
                << format_double(output.calibrated_fixed_loss_db[i]) << '\n';
        }
        // Loss breakdown of each system at the far end of the grid.
        const double stop = grid.back();
        for (const auto& sys : resolved.systems) {
            const std::string prefix = "output.breakdown." + sys.label;
            out << prefix << ".length_km = " << format_double(stop) << '\n';
            out << prefix << ".fiber_db = "
                << format_double(sys.attenuation_db_per_km * stop) << '\n';
            out << prefix << ".fixed_db = " << format_double(sys.fixed_loss_db)
                << '\n';
            out << prefix << ".rate_at_length = "
                << format_double(pair_rate(sys, stop)) << '\n';
        }
    }
    output.files.push_back(manifest_path);
    return output;
}

} // namespace pairlink
