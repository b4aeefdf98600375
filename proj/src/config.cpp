#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vplab/experiments.hpp"

namespace vplab {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string where(const std::string& source, std::size_t line) {
    return line ? source + ":" + std::to_string(line) + ": " : source + ": ";
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

[[noreturn]] void field_error(const ConfigEntry& e, const std::string& what) {
    throw ConfigError(where(e.source, e.line) + "field " + e.field() + ": " + what);
}

double parse_double(const ConfigEntry& e, const std::string& text) {
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        field_error(e, "expected a number, got '" + text + "'");
    }
    return v;
}

std::uint64_t parse_u64(const ConfigEntry& e, const std::string& text) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        field_error(e, "expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

bool parse_bool(const ConfigEntry& e) {
    const std::string& v = e.value;
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    field_error(e, "expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text, const std::string& source) {
    ConfigDocument doc;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (const auto hash = line.find(" #"); hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty() || line[0] == '#' || line[0] == ';') {
            if (end == text.size()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where(source, line_no) + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where(source, line_no) + "empty section name");
        } else {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(where(source, line_no) + "expected 'key = value'");
            if (section.empty()) throw ConfigError(where(source, line_no) + "key outside of any [section]");
            ConfigEntry e{section, trim(std::string_view(line).substr(0, eq)),
                          trim(std::string_view(line).substr(eq + 1)), source, line_no};
            if (e.key.empty()) throw ConfigError(where(source, line_no) + "empty key");
            if (const ConfigEntry* prev = doc.find(e.field())) {
                throw ConfigError(where(source, line_no) + "field " + e.field() + " already set on line " +
                                  std::to_string(prev->line));
            }
            doc.entries_.push_back(std::move(e));
        }
        if (end == text.size()) break;
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ConfigDocument::set(const std::string& field, const std::string& value, const std::string& source) {
    const auto dot = field.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == field.size()) {
        throw ConfigError(source + ": field '" + field + "' must have the form section.key");
    }
    for (auto& e : entries_) {
        if (e.field() == field) {
            e.value = value;
            e.source = source;
            e.line = 0;
            return;
        }
    }
    entries_.push_back({field.substr(0, dot), field.substr(dot + 1), value, source, 0});
}

const ConfigEntry* ConfigDocument::find(const std::string& field) const {
    for (const auto& e : entries_) {
        if (e.field() == field) return &e;
    }
    return nullptr;
}

InitialDistribution DistributionConfig::build() const {
    if (kind == "uniform_ball") return InitialDistribution::uniform_ball(radius, p_max);
    const SpatialProfile prof =
        profile == "truncated_gaussian" ? SpatialProfile::truncated_gaussian(width, radius) : SpatialProfile::uniform_ball(radius);
    return InitialDistribution::thermal(prof, beta);
}

ExperimentConfig ExperimentConfig::from_document(const ConfigDocument& doc) {
    ExperimentConfig c;
    using Setter = std::function<void(const ConfigEntry&)>;
    auto positive = [](const ConfigEntry& e, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) field_error(e, "must be positive and finite");
        return v;
    };
    auto at_least = [](const ConfigEntry& e, std::uint64_t v, std::uint64_t lo) {
        if (v < lo) field_error(e, "must be at least " + std::to_string(lo));
        return static_cast<std::size_t>(v);
    };
    const std::map<std::string, Setter> table = {
        {"distribution.kind",
         [&](const ConfigEntry& e) {
             if (e.value != "thermal" && e.value != "uniform_ball") {
                 field_error(e, "expected thermal or uniform_ball, got '" + e.value + "'");
             }
             c.distribution.kind = e.value;
         }},
        {"distribution.profile",
         [&](const ConfigEntry& e) {
             if (e.value != "uniform_ball" && e.value != "truncated_gaussian") {
                 field_error(e, "expected uniform_ball or truncated_gaussian, got '" + e.value + "'");
             }
             c.distribution.profile = e.value;
         }},
        {"distribution.radius", [&](const ConfigEntry& e) { c.distribution.radius = positive(e, parse_double(e, e.value)); }},
        {"distribution.width", [&](const ConfigEntry& e) { c.distribution.width = positive(e, parse_double(e, e.value)); }},
        {"distribution.beta", [&](const ConfigEntry& e) { c.distribution.beta = positive(e, parse_double(e, e.value)); }},
        {"distribution.p_max", [&](const ConfigEntry& e) { c.distribution.p_max = positive(e, parse_double(e, e.value)); }},
        {"kernel.sigma",
         [&](const ConfigEntry& e) {
             const double v = parse_double(e, e.value);
             if (v != 1.0 && v != -1.0) field_error(e, "must be +1 (repulsive) or -1 (attractive)");
             c.sigma = static_cast<int>(v);
         }},
        {"kernel.alpha",
         [&](const ConfigEntry& e) {
             const double v = parse_double(e, e.value);
             if (!(v > 0.0 && v <= 2.0)) field_error(e, "must lie in (0, 2]");
             c.alpha = v;
         }},
        {"kernel.delta", [&](const ConfigEntry& e) { c.delta = parse_double(e, e.value); }},
        {"run.n",
         [&](const ConfigEntry& e) {
             c.n_grid.clear();
             for (const auto& item : split_list(e.value)) c.n_grid.push_back(at_least(e, parse_u64(e, item), 4));
             if (c.n_grid.empty()) field_error(e, "needs at least one value");
         }},
        {"run.kappa", [&](const ConfigEntry& e) { c.kappa = at_least(e, parse_u64(e, e.value), 1); }},
        {"run.T", [&](const ConfigEntry& e) { c.horizon = positive(e, parse_double(e, e.value)); }},
        {"run.dt", [&](const ConfigEntry& e) { c.dt = positive(e, parse_double(e, e.value)); }},
        {"run.snapshots", [&](const ConfigEntry& e) { c.snapshots = at_least(e, parse_u64(e, e.value), 1); }},
        {"run.trials", [&](const ConfigEntry& e) { c.trials = at_least(e, parse_u64(e, e.value), 1); }},
        {"run.seed", [&](const ConfigEntry& e) { c.seed = parse_u64(e, e.value); }},
        {"run.lambda",
         [&](const ConfigEntry& e) {
             if (e.value == "auto") {
                 c.lambda.reset();
             } else {
                 c.lambda = positive(e, parse_double(e, e.value));
             }
         }},
        {"run.density_h", [&](const ConfigEntry& e) { c.density_h = positive(e, parse_double(e, e.value)); }},
        {"run.membership", [&](const ConfigEntry& e) { c.membership = parse_bool(e); }},
        {"run.threads", [&](const ConfigEntry& e) { c.threads = static_cast<std::size_t>(parse_u64(e, e.value)); }},
        {"metrics.p",
         [&](const ConfigEntry& e) {
             c.p_list.clear();
             for (const auto& item : split_list(e.value)) {
                 const double p = parse_double(e, item);
                 if (!(p >= 1.0) || !std::isfinite(p)) field_error(e, "every p must be finite and at least 1");
                 c.p_list.push_back(p);
             }
             if (c.p_list.empty()) field_error(e, "needs at least one value");
         }},
        {"metrics.exact_max_n", [&](const ConfigEntry& e) { c.exact_max_n = at_least(e, parse_u64(e, e.value), 1); }},
        {"metrics.projections", [&](const ConfigEntry& e) { c.projections = at_least(e, parse_u64(e, e.value), 1); }},
        {"metrics.proxy_factor", [&](const ConfigEntry& e) { c.proxy_factor = at_least(e, parse_u64(e, e.value), 1); }},
        {"metrics.bootstrap", [&](const ConfigEntry& e) { c.bootstrap = static_cast<std::size_t>(parse_u64(e, e.value)); }},
        {"audit.samples", [&](const ConfigEntry& e) { c.audit_samples = at_least(e, parse_u64(e, e.value), 1); }},
        {"inputs.a", [&](const ConfigEntry& e) { c.input_a = e.value; }},
        {"inputs.b", [&](const ConfigEntry& e) { c.input_b = e.value; }},
        {"output.dir", [&](const ConfigEntry& e) { c.output_dir = e.value; }},
    };
    for (const auto& e : doc.entries()) {
        const auto it = table.find(e.field());
        if (it == table.end()) throw ConfigError(where(e.source, e.line) + "unknown field " + e.field());
        it->second(e);
    }

    auto fail = [&](const std::string& field, const std::string& what) {
        const ConfigEntry* e = doc.find(field);
        throw ConfigError((e ? where(e->source, e->line) : std::string("config: ")) + "field " + field + ": " + what);
    };
    if (!(c.delta >= 0.0 && c.delta < 1.0 / (1.0 + c.alpha))) {
        fail("kernel.delta", "must satisfy 0 <= delta < 1/(1 + alpha) = " + fmt(1.0 / (1.0 + c.alpha)) + ", got " +
                                 fmt(c.delta));
    }
    if (c.dt > c.horizon) fail("run.dt", "exceeds the horizon T = " + fmt(c.horizon));
    const double per = c.horizon / c.dt / static_cast<double>(c.snapshots);
    if (std::abs(per - std::round(per)) > 1e-6 || std::round(per) < 1.0) {
        fail("run.snapshots", "T/snapshots = " + fmt(c.horizon / static_cast<double>(c.snapshots)) +
                                  " is not a whole number of steps of dt = " + fmt(c.dt));
    }
    return c;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream s;
    auto list = [](const auto& v, auto conv) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + conv(v[i]);
        return out;
    };
    s << "distribution.kind=" << distribution.kind << '\n'
      << "distribution.profile=" << distribution.profile << '\n'
      << "distribution.radius=" << fmt(distribution.radius) << '\n'
      << "distribution.width=" << fmt(distribution.width) << '\n'
      << "distribution.beta=" << fmt(distribution.beta) << '\n'
      << "distribution.p_max=" << fmt(distribution.p_max) << '\n'
      << "kernel.sigma=" << sigma << '\n'
      << "kernel.alpha=" << fmt(alpha) << '\n'
      << "kernel.delta=" << fmt(delta) << '\n'
      << "run.n=" << list(n_grid, [](std::size_t v) { return std::to_string(v); }) << '\n'
      << "run.kappa=" << kappa << '\n'
      << "run.T=" << fmt(horizon) << '\n'
      << "run.dt=" << fmt(dt) << '\n'
      << "run.snapshots=" << snapshots << '\n'
      << "run.trials=" << trials << '\n'
      << "run.seed=" << seed << '\n'
      << "run.lambda=" << (lambda ? fmt(*lambda) : std::string("auto")) << '\n'
      << "run.density_h=" << fmt(density_h) << '\n'
      << "run.membership=" << (membership ? "true" : "false") << '\n'
      << "metrics.p=" << list(p_list, [](double v) { return fmt(v); }) << '\n'
      << "metrics.exact_max_n=" << exact_max_n << '\n'
      << "metrics.projections=" << projections << '\n'
      << "metrics.proxy_factor=" << proxy_factor << '\n'
      << "metrics.bootstrap=" << bootstrap << '\n'
      << "audit.samples=" << audit_samples << '\n'
      << "inputs.a=" << input_a << '\n'
      << "inputs.b=" << input_b << '\n';
    return s.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

TrialSettings ExperimentConfig::trial_settings(std::size_t n) const {
    TrialSettings s;
    s.sigma = sigma;
    s.alpha = alpha;
    s.delta = delta;
    s.n = n;
    s.kappa = kappa;
    s.horizon = horizon;
    s.dt = dt;
    s.snapshots = snapshots;
    s.lambda = lambda;
    s.wasserstein_p = p_list.front();
    s.exact_max_n = exact_max_n;
    s.membership = membership;
    s.density_h = density_h;
    return s;
}

std::filesystem::path ExperimentConfig::output_root() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv("VPLAB_OUTPUT_ROOT"); env && *env) return env;
    return "vplab-out";
}

}  // namespace vplab
