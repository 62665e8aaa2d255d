#include "pairlink/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pairlink/errors.hpp"

namespace pairlink {

namespace {

struct Entry {
    size_t line = 0;
    std::string key;
    std::string value;
};

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<Entry> parse_flat(const std::string& text, const std::string& origin)
{
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#')
            continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no)
                              + ": expected 'key = value'");
        Entry e;
        e.line = line_no;
        e.key = trim(stripped.substr(0, eq));
        e.value = trim(stripped.substr(eq + 1));
        if (e.key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no)
                              + ": empty key");
        entries.push_back(std::move(e));
    }
    return entries;
}

[[noreturn]] void fail(const std::string& origin, const Entry& e,
                       const std::string& message)
{
    throw ConfigError(origin + ":" + std::to_string(e.line) + ": key '"
                      + e.key + "': " + message);
}

double to_double(const std::string& origin, const Entry& e,
                 const std::string& raw)
{
    const std::string s = trim(raw);
    if (s == "inf" || s == "+inf")
        return std::numeric_limits<double>::infinity();
    double value = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end)
        fail(origin, e, "expected a number, got '" + s + "'");
    return value;
}

double to_double(const std::string& origin, const Entry& e)
{
    return to_double(origin, e, e.value);
}

int64_t to_int64(const std::string& origin, const Entry& e)
{
    int64_t value = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end)
        fail(origin, e, "expected an integer, got '" + e.value + "'");
    return value;
}

uint64_t to_uint64(const std::string& origin, const Entry& e)
{
    uint64_t value = 0;
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    auto [p, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || p != end)
        fail(origin, e, "expected an unsigned integer, got '" + e.value + "'");
    return value;
}

bool to_bool(const std::string& origin, const Entry& e)
{
    if (e.value == "true")
        return true;
    if (e.value == "false")
        return false;
    fail(origin, e, "expected true or false, got '" + e.value + "'");
}

std::vector<std::string> split(const std::string& value, char sep)
{
    std::vector<std::string> parts;
    std::string current;
    for (const char c : value) {
        if (c == sep) {
            parts.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(trim(current));
    if (parts.size() == 1 && parts.front().empty())
        parts.clear();
    return parts;
}

bool apply_source_key(SourceConfig& source, const std::string& field,
                      const std::string& origin, const Entry& e)
{
    if (field == "preset") {
        if (e.value == "degenerate")
            source = degenerate_source();
        else if (e.value == "nondegenerate")
            source = nondegenerate_source();
        else if (e.value == "custom")
            source.preset = SourcePreset::Custom;
        else
            fail(origin, e, "expected degenerate, nondegenerate or custom");
    } else if (field == "crystal_temperature_c")
        source.crystal_temperature_c = to_double(origin, e);
    else if (field == "pump_wavelength_nm")
        source.pump_wavelength_nm = to_double(origin, e);
    else if (field == "brightness_pairs_per_s")
        source.brightness_pairs_per_s = to_double(origin, e);
    else if (field == "signal_center_nm")
        source.signal_center_nm = to_double(origin, e);
    else if (field == "idler_center_nm")
        source.idler_center_nm = to_double(origin, e);
    else if (field == "signal_fwhm_nm")
        source.signal_fwhm_nm = to_double(origin, e);
    else if (field == "idler_fwhm_nm")
        source.idler_fwhm_nm = to_double(origin, e);
    else
        return false;
    return true;
}

bool apply_fiber_key(FiberSpec& fiber, const std::string& field,
                     const std::string& origin, const Entry& e)
{
    if (field == "length_km")
        fiber.length_km = to_double(origin, e);
    else if (field == "core_radius_um")
        fiber.core_radius_um = to_double(origin, e);
    else if (field == "numerical_aperture")
        fiber.numerical_aperture = to_double(origin, e);
    else if (field == "mode_field_diameter_um")
        fiber.mode_field_diameter_um = to_double(origin, e);
    else if (field == "group_index")
        fiber.group_index = to_double(origin, e);
    else if (field == "dgd_ns_per_km")
        fiber.dgd_ns_per_km = to_double(origin, e);
    else if (field == "lp11_excitation")
        fiber.lp11_excitation = to_double(origin, e);
    else if (field == "mode_set_policy") {
        if (e.value == "paper_two_mode")
            fiber.mode_set_policy = ModeSetPolicy::PaperTwoMode;
        else if (e.value == "cutoff_derived")
            fiber.mode_set_policy = ModeSetPolicy::CutoffDerived;
        else
            fail(origin, e, "expected paper_two_mode or cutoff_derived");
    } else if (field == "attenuation_table") {
        std::vector<AttenuationPoint> table;
        for (const auto& part : split(e.value, ',')) {
            const auto colon = part.find(':');
            if (colon == std::string::npos)
                fail(origin, e, "expected wavelength:db_per_km pairs");
            AttenuationPoint point;
            point.wavelength_nm = to_double(origin, e, part.substr(0, colon));
            point.db_per_km = to_double(origin, e, part.substr(colon + 1));
            table.push_back(point);
        }
        if (table.empty())
            fail(origin, e, "attenuation table must not be empty");
        fiber.attenuation_table = std::move(table);
    } else
        return false;
    return true;
}

bool apply_detector_key(DetectorSpec& det, const std::string& field,
                        const std::string& origin, const Entry& e)
{
    if (field == "efficiency")
        det.efficiency = to_double(origin, e);
    else if (field == "dark_rate_per_s")
        det.dark_rate_per_s = to_double(origin, e);
    else if (field == "dead_time_ns")
        det.dead_time_ns = to_double(origin, e);
    else if (field == "jitter_sigma_ps")
        det.jitter_sigma_ps = to_double(origin, e);
    else if (field == "time_resolution_ps")
        det.time_resolution_ps = to_double(origin, e);
    else
        return false;
    return true;
}

void apply_experiment_key(ExperimentConfig& config, const std::string& origin,
                          const Entry& e)
{
    auto field_of = [&](const std::string& prefix) {
        return e.key.substr(prefix.size());
    };

    if (e.key == "seed") {
        config.seed = to_uint64(origin, e);
    } else if (e.key == "duration_s") {
        config.duration_s = to_double(origin, e);
    } else if (e.key == "output_dir") {
        config.output_dir = e.value;
    } else if (e.key == "symmetric") {
        config.symmetric = to_bool(origin, e);
    } else if (e.key == "detect_reflected") {
        config.detect_reflected = to_bool(origin, e);
    } else if (e.key == "analyzers_enabled") {
        config.analyzers_enabled = to_bool(origin, e);
    } else if (e.key.starts_with("source.")) {
        if (!apply_source_key(config.source, field_of("source."), origin, e))
            fail(origin, e, "unknown source field");
    } else if (e.key == "polarization.v_hv") {
        config.polarization.v_hv = to_double(origin, e);
    } else if (e.key == "polarization.v_da") {
        config.polarization.v_da = to_double(origin, e);
    } else if (e.key == "polarization.phase_sign") {
        const std::string v = e.value == "+1" ? "1" : e.value;
        Entry copy = e;
        copy.value = v;
        config.polarization.phase_sign = static_cast<int>(to_int64(origin, copy));
    } else if (e.key == "wdm.channel_a_center_nm") {
        config.wdm.channel_a_center_nm = to_double(origin, e);
    } else if (e.key == "wdm.channel_b_center_nm") {
        config.wdm.channel_b_center_nm = to_double(origin, e);
    } else if (e.key == "wdm.isolation_db") {
        config.wdm.isolation_db = to_double(origin, e);
    } else if (e.key == "wdm.degenerate_mode") {
        config.wdm.degenerate_mode = to_bool(origin, e);
    } else if (e.key.starts_with("fiber_a.")) {
        if (!apply_fiber_key(config.fiber_a, field_of("fiber_a."), origin, e))
            fail(origin, e, "unknown fiber field");
    } else if (e.key.starts_with("fiber_b.")) {
        if (!apply_fiber_key(config.fiber_b, field_of("fiber_b."), origin, e))
            fail(origin, e, "unknown fiber field");
    } else if (e.key.starts_with("detector_a_reflect.")) {
        if (!apply_detector_key(config.detector_a_reflect,
                                field_of("detector_a_reflect."), origin, e))
            fail(origin, e, "unknown detector field");
    } else if (e.key.starts_with("detector_b_reflect.")) {
        if (!apply_detector_key(config.detector_b_reflect,
                                field_of("detector_b_reflect."), origin, e))
            fail(origin, e, "unknown detector field");
    } else if (e.key.starts_with("detector_a.")) {
        if (!apply_detector_key(config.detector_a, field_of("detector_a."),
                                origin, e))
            fail(origin, e, "unknown detector field");
    } else if (e.key.starts_with("detector_b.")) {
        if (!apply_detector_key(config.detector_b, field_of("detector_b."),
                                origin, e))
            fail(origin, e, "unknown detector field");
    } else if (e.key == "analyzer_scan") {
        std::vector<AnalyzerSettings> scan;
        for (const auto& part : split(e.value, ',')) {
            const auto colon = part.find(':');
            if (colon == std::string::npos)
                fail(origin, e, "expected hwp_a:hwp_b pairs");
            AnalyzerSettings s;
            s.hwp_angle_a_deg = to_double(origin, e, part.substr(0, colon));
            s.hwp_angle_b_deg = to_double(origin, e, part.substr(colon + 1));
            scan.push_back(s);
        }
        if (scan.empty())
            fail(origin, e, "analyzer scan must not be empty");
        config.analyzer_scan = std::move(scan);
    } else if (e.key == "analysis.bin_width_ps") {
        config.analysis.bin_width_ps = to_int64(origin, e);
    } else if (e.key == "analysis.range_ps") {
        config.analysis.range_ps = to_int64(origin, e);
    } else if (e.key == "analysis.window_ps") {
        config.analysis.window_ps = to_int64(origin, e);
    } else if (e.key == "analysis.center_delay_policy") {
        if (e.value == "auto")
            config.analysis.center_policy = CenterDelayPolicy::Auto;
        else if (e.value == "fixed")
            config.analysis.center_policy = CenterDelayPolicy::Fixed;
        else
            fail(origin, e, "expected auto or fixed");
    } else if (e.key == "analysis.center_delay_ps") {
        config.analysis.center_delay_ps = to_int64(origin, e);
    } else if (e.key == "analysis.peak_threshold_sigma") {
        config.analysis.peak_threshold_sigma = to_double(origin, e);
    } else {
        fail(origin, e, "unknown key");
    }
}

} // namespace

void AnalysisParams::validate() const
{
    if (bin_width_ps <= 0)
        throw ConfigError("analysis.bin_width_ps must be > 0");
    if (range_ps <= 0)
        throw ConfigError("analysis.range_ps must be > 0");
    if (window_ps <= 0)
        throw ConfigError("analysis.window_ps must be > 0");
    if (peak_threshold_sigma <= 0.0)
        throw ConfigError("analysis.peak_threshold_sigma must be > 0");
}

void ExperimentConfig::validate() const
{
    if (duration_s < 0.0)
        throw ConfigError("duration_s must be >= 0");
    if (analyzer_scan.empty())
        throw ConfigError("analyzer_scan must not be empty");
    source.validate();
    polarization.validate();
    wdm.validate();
    fiber_a.validate();
    fiber_b.validate();
    detector_a.validate();
    detector_b.validate();
    if (detect_reflected) {
        detector_a_reflect.validate();
        detector_b_reflect.validate();
    }
    analysis.validate();
    if (symmetric && fiber_a.length_km != fiber_b.length_km)
        throw ConfigError("symmetric experiment requires equal fiber lengths "
                          "in the two arms");
}

std::vector<AnalyzerSettings> standard_visibility_scan()
{
    std::vector<AnalyzerSettings> scan;
    for (const double hwp_a : { 0.0, 45.0, 22.5, 67.5 })
        for (int i = 0; i <= 8; ++i)
            scan.push_back({ hwp_a, i * 22.5 });
    return scan;
}

std::vector<std::string> experiment_preset_names()
{
    return { "degenerate_6km", "nondegenerate_12km" };
}

ExperimentConfig experiment_preset(const std::string& name)
{
    ExperimentConfig config;
    config.preset_name = name;
    config.seed = 1;
    config.symmetric = true;
    config.detector_a = si_gm_apd();
    config.detector_b = si_gm_apd();
    config.detector_a_reflect = si_gm_apd();
    config.detector_b_reflect = si_gm_apd();

    if (name == "degenerate_6km") {
        config.duration_s = 30.0;
        config.source = degenerate_source();
        config.source.brightness_pairs_per_s = 1e6;
        config.polarization = { 1.0, 1.0, +1 };
        config.wdm = { 810.0, 810.0, 15.0, true };
        config.fiber_a.length_km = 6.0;
        config.fiber_a.lp11_excitation = 0.18;
        config.fiber_b = config.fiber_a;
        config.analyzer_scan = { AnalyzerSettings { 0.0, 0.0 } };
        return config;
    }
    if (name == "nondegenerate_12km") {
        config.duration_s = 2.0;
        config.source = nondegenerate_source();
        config.source.brightness_pairs_per_s = 1e6;
        config.polarization = { 0.9715, 0.924, +1 };
        config.wdm = { 774.0, 850.0, 15.0, false };
        config.fiber_a.length_km = 6.0;
        config.fiber_a.lp11_excitation = 0.0;
        config.fiber_b = config.fiber_a;
        config.analyzer_scan = standard_visibility_scan();
        return config;
    }
    throw ConfigError("unknown experiment preset '" + name + "'");
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& origin)
{
    const std::vector<Entry> entries = parse_flat(text, origin);

    ExperimentConfig config;
    bool preset_seen = false;
    for (const auto& e : entries) {
        if (e.key != "preset")
            continue;
        if (preset_seen)
            throw ConfigError(origin + ":" + std::to_string(e.line)
                              + ": duplicate preset key");
        preset_seen = true;
        config = experiment_preset(e.value);
    }

    for (const auto& e : entries) {
        if (e.key == "preset" || e.key.starts_with("output."))
            continue; // manifests carry output.* bookkeeping keys
        apply_experiment_key(config, origin, e);
    }
    config.validate();
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_config(buffer.str(), path.string());
}

std::string serialize_experiment_config(const ExperimentConfig& config)
{
    std::string out;
    auto emit = [&](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    auto emit_d = [&](const std::string& key, double value) {
        emit(key, format_double(value));
    };
    auto emit_b = [&](const std::string& key, bool value) {
        emit(key, value ? "true" : "false");
    };

    if (!config.preset_name.empty())
        emit("preset", config.preset_name);
    emit("seed", std::to_string(config.seed));
    emit_d("duration_s", config.duration_s);
    if (!config.output_dir.empty())
        emit("output_dir", config.output_dir);
    emit_b("symmetric", config.symmetric);
    emit_b("detect_reflected", config.detect_reflected);
    emit_b("analyzers_enabled", config.analyzers_enabled);

    const char* source_preset = config.source.preset == SourcePreset::Degenerate
        ? "degenerate"
        : config.source.preset == SourcePreset::Nondegenerate ? "nondegenerate"
                                                              : "custom";
    emit("source.preset", source_preset);
    emit_d("source.crystal_temperature_c", config.source.crystal_temperature_c);
    emit_d("source.pump_wavelength_nm", config.source.pump_wavelength_nm);
    emit_d("source.brightness_pairs_per_s", config.source.brightness_pairs_per_s);
    emit_d("source.signal_center_nm", config.source.signal_center_nm);
    emit_d("source.idler_center_nm", config.source.idler_center_nm);
    emit_d("source.signal_fwhm_nm", config.source.signal_fwhm_nm);
    emit_d("source.idler_fwhm_nm", config.source.idler_fwhm_nm);

    emit_d("polarization.v_hv", config.polarization.v_hv);
    emit_d("polarization.v_da", config.polarization.v_da);
    emit("polarization.phase_sign",
         config.polarization.phase_sign > 0 ? "+1" : "-1");

    emit_d("wdm.channel_a_center_nm", config.wdm.channel_a_center_nm);
    emit_d("wdm.channel_b_center_nm", config.wdm.channel_b_center_nm);
    emit_d("wdm.isolation_db", config.wdm.isolation_db);
    emit_b("wdm.degenerate_mode", config.wdm.degenerate_mode);

    auto emit_fiber = [&](const std::string& prefix, const FiberSpec& fiber) {
        emit_d(prefix + ".length_km", fiber.length_km);
        emit_d(prefix + ".core_radius_um", fiber.core_radius_um);
        emit_d(prefix + ".numerical_aperture", fiber.numerical_aperture);
        emit_d(prefix + ".mode_field_diameter_um", fiber.mode_field_diameter_um);
        emit_d(prefix + ".group_index", fiber.group_index);
        emit_d(prefix + ".dgd_ns_per_km", fiber.dgd_ns_per_km);
        emit_d(prefix + ".lp11_excitation", fiber.lp11_excitation);
        emit(prefix + ".mode_set_policy",
             fiber.mode_set_policy == ModeSetPolicy::PaperTwoMode
                 ? "paper_two_mode"
                 : "cutoff_derived");
        std::string table;
        for (const auto& point : fiber.attenuation_table) {
            if (!table.empty())
                table += ',';
            table += format_double(point.wavelength_nm);
            table += ':';
            table += format_double(point.db_per_km);
        }
        emit(prefix + ".attenuation_table", table);
    };
    emit_fiber("fiber_a", config.fiber_a);
    emit_fiber("fiber_b", config.fiber_b);

    auto emit_detector = [&](const std::string& prefix, const DetectorSpec& det) {
        emit_d(prefix + ".efficiency", det.efficiency);
        emit_d(prefix + ".dark_rate_per_s", det.dark_rate_per_s);
        emit_d(prefix + ".dead_time_ns", det.dead_time_ns);
        emit_d(prefix + ".jitter_sigma_ps", det.jitter_sigma_ps);
        emit_d(prefix + ".time_resolution_ps", det.time_resolution_ps);
    };
    emit_detector("detector_a", config.detector_a);
    emit_detector("detector_b", config.detector_b);
    if (config.detect_reflected) {
        emit_detector("detector_a_reflect", config.detector_a_reflect);
        emit_detector("detector_b_reflect", config.detector_b_reflect);
    }

    std::string scan;
    for (const auto& s : config.analyzer_scan) {
        if (!scan.empty())
            scan += ',';
        scan += format_double(s.hwp_angle_a_deg);
        scan += ':';
        scan += format_double(s.hwp_angle_b_deg);
    }
    emit("analyzer_scan", scan);

    emit("analysis.bin_width_ps", std::to_string(config.analysis.bin_width_ps));
    emit("analysis.range_ps", std::to_string(config.analysis.range_ps));
    emit("analysis.window_ps", std::to_string(config.analysis.window_ps));
    emit("analysis.center_delay_policy",
         config.analysis.center_policy == CenterDelayPolicy::Auto ? "auto"
                                                                  : "fixed");
    emit("analysis.center_delay_ps",
         std::to_string(config.analysis.center_delay_ps));
    emit_d("analysis.peak_threshold_sigma",
           config.analysis.peak_threshold_sigma);
    return out;
}

std::vector<double> BudgetConfig::length_grid() const
{
    std::vector<double> grid;
    const size_t n = static_cast<size_t>(
        std::floor((length_stop_km - length_start_km) / length_step_km + 0.5));
    grid.reserve(n + 1);
    for (size_t i = 0; i <= n; ++i) {
        double v = length_start_km + static_cast<double>(i) * length_step_km;
        // snap cumulative FP error to 1e-9 km so grids serialize cleanly
        v = std::nearbyint(v * 1e9) / 1e9;
        grid.push_back(v);
    }
    return grid;
}

size_t BudgetConfig::system_index(const std::string& label) const
{
    for (size_t i = 0; i < systems.size(); ++i)
        if (systems[i].label == label)
            return i;
    throw ConfigError("unknown budget system '" + label + "'");
}

void BudgetConfig::validate() const
{
    if (length_step_km <= 0.0)
        throw ConfigError("budget.length_step_km must be > 0");
    if (length_stop_km < length_start_km)
        throw ConfigError("budget length grid is empty");
    if (length_start_km < 0.0)
        throw ConfigError("budget lengths must be >= 0");
    if (systems.empty())
        throw ConfigError("budget needs at least one system");
    for (size_t i = 0; i < systems.size(); ++i) {
        systems[i].validate();
        for (size_t j = i + 1; j < systems.size(); ++j)
            if (systems[i].label == systems[j].label)
                throw ConfigError("duplicate budget system label '"
                                  + systems[i].label + "'");
    }
    for (const auto& [a, b] : crossover_pairs) {
        system_index(a);
        system_index(b);
    }
    if (!calibration_targets_km.empty()
        && calibration_targets_km.size() != crossover_pairs.size())
        throw ConfigError("budget.calibration_targets_km must match the "
                          "crossover pair count");
}

std::vector<std::string> budget_preset_names()
{
    return { "budget_fig4" };
}

BudgetConfig budget_preset(const std::string& name)
{
    if (name != "budget_fig4")
        throw ConfigError("unknown budget preset '" + name + "'");

    BudgetConfig config;
    config.preset_name = name;
    config.length_start_km = 0.0;
    config.length_stop_km = 12.0;
    config.length_step_km = 0.1;

    // The comparison keeps the source-side detection identical across all
    // four systems; only the fiber-arm detector follows the wavelength.
    SystemModel nir_nondeg;
    nir_nondeg.label = "nir_nondegenerate";
    nir_nondeg.brightness_pairs_per_s = 1e6;
    nir_nondeg.detector_efficiency_source_arm = 0.5;
    nir_nondeg.detector_efficiency_fiber_arm = 0.5;
    nir_nondeg.attenuation_db_per_km = 3.0;
    nir_nondeg.fixed_loss_db = 0.0;
    nir_nondeg.wdm_split_factor = 1.0;
    nir_nondeg.fundamental_mode_fraction = 1.0;

    SystemModel nir_deg = nir_nondeg;
    nir_deg.label = "nir_degenerate";
    nir_deg.wdm_split_factor = 0.5; // WDM behaves as a beam splitter
    nir_deg.fundamental_mode_fraction = 2.0 / 3.0;

    SystemModel telecom_nondeg = nir_nondeg;
    telecom_nondeg.label = "telecom_nondegenerate";
    telecom_nondeg.detector_efficiency_fiber_arm = 0.25;
    telecom_nondeg.attenuation_db_per_km = 0.22;
    telecom_nondeg.fixed_loss_db = 13.7; // calibrated, see --calibrate

    SystemModel telecom_deg = telecom_nondeg;
    telecom_deg.label = "telecom_degenerate";
    telecom_deg.wdm_split_factor = 0.5;
    telecom_deg.fundamental_mode_fraction = 1.0; // single-mode at 1550 nm
    telecom_deg.fixed_loss_db = 5.4; // calibrated, see --calibrate

    config.systems = { nir_nondeg, nir_deg, telecom_nondeg, telecom_deg };
    config.crossover_pairs = {
        { "nir_nondegenerate", "telecom_nondegenerate" },
        { "nir_degenerate", "telecom_degenerate" },
    };
    config.calibration_targets_km = { 6.0, 2.4 };
    return config;
}

BudgetConfig parse_budget_config(const std::string& text,
                                 const std::string& origin)
{
    const std::vector<Entry> entries = parse_flat(text, origin);

    BudgetConfig config;
    bool preset_seen = false;
    for (const auto& e : entries) {
        if (e.key != "preset")
            continue;
        if (preset_seen)
            throw ConfigError(origin + ":" + std::to_string(e.line)
                              + ": duplicate preset key");
        preset_seen = true;
        config = budget_preset(e.value);
    }
    if (!preset_seen)
        config.systems.clear();

    for (const auto& e : entries) {
        if (e.key == "preset" || e.key.starts_with("output."))
            continue;
        if (e.key == "budget.length_start_km") {
            config.length_start_km = to_double(origin, e);
        } else if (e.key == "budget.length_stop_km") {
            config.length_stop_km = to_double(origin, e);
        } else if (e.key == "budget.length_step_km") {
            config.length_step_km = to_double(origin, e);
        } else if (e.key == "budget.systems") {
            std::vector<SystemModel> systems;
            for (const auto& label : split(e.value, ',')) {
                // keep any already-configured system of the same label
                SystemModel sys;
                sys.label = label;
                for (const auto& existing : config.systems)
                    if (existing.label == label)
                        sys = existing;
                systems.push_back(std::move(sys));
            }
            config.systems = std::move(systems);
        } else if (e.key.starts_with("system.")) {
            const std::string rest = e.key.substr(7);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                fail(origin, e, "expected system.<label>.<field>");
            const std::string label = rest.substr(0, dot);
            const std::string field = rest.substr(dot + 1);
            SystemModel* sys = nullptr;
            for (auto& candidate : config.systems)
                if (candidate.label == label)
                    sys = &candidate;
            if (!sys)
                fail(origin, e, "system '" + label
                     + "' not declared in budget.systems");
            if (field == "brightness_pairs_per_s")
                sys->brightness_pairs_per_s = to_double(origin, e);
            else if (field == "detector_efficiency_source_arm")
                sys->detector_efficiency_source_arm = to_double(origin, e);
            else if (field == "detector_efficiency_fiber_arm")
                sys->detector_efficiency_fiber_arm = to_double(origin, e);
            else if (field == "attenuation_db_per_km")
                sys->attenuation_db_per_km = to_double(origin, e);
            else if (field == "fixed_loss_db")
                sys->fixed_loss_db = to_double(origin, e);
            else if (field == "wdm_split_factor")
                sys->wdm_split_factor = to_double(origin, e);
            else if (field == "fundamental_mode_fraction")
                sys->fundamental_mode_fraction = to_double(origin, e);
            else
                fail(origin, e, "unknown system field");
        } else if (e.key == "budget.crossover_pairs") {
            std::vector<std::pair<std::string, std::string>> pairs;
            for (const auto& part : split(e.value, ',')) {
                const auto colon = part.find(':');
                if (colon == std::string::npos)
                    fail(origin, e, "expected label_a:label_b pairs");
                pairs.emplace_back(trim(part.substr(0, colon)),
                                   trim(part.substr(colon + 1)));
            }
            config.crossover_pairs = std::move(pairs);
        } else if (e.key == "budget.calibration_targets_km") {
            std::vector<double> targets;
            for (const auto& part : split(e.value, ','))
                targets.push_back(to_double(origin, e, part));
            config.calibration_targets_km = std::move(targets);
        } else {
            fail(origin, e, "unknown key");
        }
    }
    config.validate();
    return config;
}

BudgetConfig load_budget_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_budget_config(buffer.str(), path.string());
}

std::string serialize_budget_config(const BudgetConfig& config)
{
    std::string out;
    auto emit = [&](const std::string& key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };

    if (!config.preset_name.empty())
        emit("preset", config.preset_name);
    emit("budget.length_start_km", format_double(config.length_start_km));
    emit("budget.length_stop_km", format_double(config.length_stop_km));
    emit("budget.length_step_km", format_double(config.length_step_km));

    std::string labels;
    for (const auto& sys : config.systems) {
        if (!labels.empty())
            labels += ',';
        labels += sys.label;
    }
    emit("budget.systems", labels);
    for (const auto& sys : config.systems) {
        const std::string prefix = "system." + sys.label + ".";
        emit(prefix + "brightness_pairs_per_s",
             format_double(sys.brightness_pairs_per_s));
        emit(prefix + "detector_efficiency_source_arm",
             format_double(sys.detector_efficiency_source_arm));
        emit(prefix + "detector_efficiency_fiber_arm",
             format_double(sys.detector_efficiency_fiber_arm));
        emit(prefix + "attenuation_db_per_km",
             format_double(sys.attenuation_db_per_km));
        emit(prefix + "fixed_loss_db", format_double(sys.fixed_loss_db));
        emit(prefix + "wdm_split_factor", format_double(sys.wdm_split_factor));
        emit(prefix + "fundamental_mode_fraction",
             format_double(sys.fundamental_mode_fraction));
    }

    std::string pairs;
    for (const auto& [a, b] : config.crossover_pairs) {
        if (!pairs.empty())
            pairs += ',';
        pairs += a + ":" + b;
    }
    if (!pairs.empty())
        emit("budget.crossover_pairs", pairs);
    std::string targets;
    for (const double t : config.calibration_targets_km) {
        if (!targets.empty())
            targets += ',';
        targets += format_double(t);
    }
    if (!targets.empty())
        emit("budget.calibration_targets_km", targets);
    return out;
}

std::string format_double(double value)
{
    char buffer[64];
    auto [p, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc())
        throw IoError("number formatting failed");
    return std::string(buffer, p);
}

} // namespace pairlink
