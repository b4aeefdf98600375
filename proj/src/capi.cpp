#include "vplab/vplab.h"

#include <cstring>
#include <new>
#include <string>

#include "vplab/experiments.hpp"
#include "vplab/transport.hpp"

struct vplab_config {
    vplab::ConfigDocument doc;
};

struct vplab_run_result {
    std::string directory;
    std::vector<std::string> summary;
    std::vector<std::string> files;
};

struct vplab_state {
    vplab::PhaseState state;
};

namespace {

thread_local std::string g_last_error;

vplab_status fail(vplab_status s, const std::string& what) {
    g_last_error = what;
    return s;
}

template <class Fn>
vplab_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const vplab::ConfigError& e) {
        return fail(VPLAB_ERR_CONFIG, e.what());
    } catch (const vplab::NumericalError& e) {
        return fail(VPLAB_ERR_NUMERICAL, e.what());
    } catch (const vplab::FormatError& e) {
        return fail(VPLAB_ERR_FORMAT, e.what());
    } catch (const vplab::DomainError& e) {
        return fail(VPLAB_ERR_DOMAIN, e.what());
    } catch (const vplab::Error& e) {
        return fail(VPLAB_ERR_IO, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(VPLAB_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(VPLAB_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(VPLAB_ERR_INTERNAL, e.what());
    }
}

}  // namespace

extern "C" {

const char* vplab_last_error(void) { return g_last_error.c_str(); }

const char* vplab_status_name(vplab_status status) {
    switch (status) {
        case VPLAB_OK: return "ok";
        case VPLAB_ERR_INVALID_ARGUMENT: return "invalid argument";
        case VPLAB_ERR_DOMAIN: return "domain error";
        case VPLAB_ERR_CONFIG: return "configuration error";
        case VPLAB_ERR_NUMERICAL: return "numerical error";
        case VPLAB_ERR_FORMAT: return "format error";
        case VPLAB_ERR_IO: return "i/o error";
        case VPLAB_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* vplab_version(void) { return vplab::version_string(); }

vplab_status vplab_config_new(vplab_config** out) {
    if (!out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_new: out is NULL");
    return guarded([&] {
        *out = new vplab_config{};
        return VPLAB_OK;
    });
}

vplab_status vplab_config_load(const char* path, vplab_config** out) {
    if (!path || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_load: NULL argument");
    return guarded([&] {
        auto doc = vplab::ConfigDocument::load(path);
        *out = new vplab_config{std::move(doc)};
        return VPLAB_OK;
    });
}

vplab_status vplab_config_parse(const char* text, vplab_config** out) {
    if (!text || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_parse: NULL argument");
    return guarded([&] {
        auto doc = vplab::ConfigDocument::parse(text);
        *out = new vplab_config{std::move(doc)};
        return VPLAB_OK;
    });
}

vplab_status vplab_config_set(vplab_config* config, const char* field, const char* value) {
    if (!config || !field || !value) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_set: NULL argument");
    return guarded([&] {
        config->doc.set(field, value);
        return VPLAB_OK;
    });
}

vplab_status vplab_config_validate(const vplab_config* config) {
    if (!config) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_validate: config is NULL");
    return guarded([&] {
        (void)vplab::ExperimentConfig::from_document(config->doc);
        return VPLAB_OK;
    });
}

vplab_status vplab_config_hash(const vplab_config* config, uint64_t* out) {
    if (!config || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_config_hash: NULL argument");
    return guarded([&] {
        *out = vplab::ExperimentConfig::from_document(config->doc).hash();
        return VPLAB_OK;
    });
}

void vplab_config_free(vplab_config* config) { delete config; }

vplab_status vplab_run(const vplab_config* config, const char* subcommand, vplab_run_result** out) {
    if (!config || !subcommand || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_run: NULL argument");
    *out = nullptr;
    return guarded([&] {
        const auto cfg = vplab::ExperimentConfig::from_document(config->doc);
        const vplab::RunResult r = vplab::run_experiment(subcommand, cfg);
        *out = new vplab_run_result{r.directory.string(), r.summary, r.files};
        return VPLAB_OK;
    });
}

const char* vplab_run_directory(const vplab_run_result* result) { return result ? result->directory.c_str() : ""; }

size_t vplab_run_summary_count(const vplab_run_result* result) { return result ? result->summary.size() : 0; }

const char* vplab_run_summary_line(const vplab_run_result* result, size_t index) {
    return result && index < result->summary.size() ? result->summary[index].c_str() : nullptr;
}

size_t vplab_run_file_count(const vplab_run_result* result) { return result ? result->files.size() : 0; }

const char* vplab_run_file(const vplab_run_result* result, size_t index) {
    return result && index < result->files.size() ? result->files[index].c_str() : nullptr;
}

void vplab_run_free(vplab_run_result* result) { delete result; }

vplab_status vplab_state_new(size_t n, const double* q, const double* p, double t, vplab_state** out) {
    if (!out || (n > 0 && (!q || !p))) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_state_new: NULL argument");
    return guarded([&] {
        auto* s = new vplab_state{vplab::PhaseState(n, t)};
        for (size_t i = 0; i < n; ++i) {
            s->state.q[i] = {q[3 * i], q[3 * i + 1], q[3 * i + 2]};
            s->state.p[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
        }
        *out = s;
        return VPLAB_OK;
    });
}

vplab_status vplab_state_read(const char* path, vplab_state** out) {
    if (!path || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_state_read: NULL argument");
    return guarded([&] {
        auto snap = vplab::read_snapshot(path);
        *out = new vplab_state{std::move(snap.state)};
        return VPLAB_OK;
    });
}

vplab_status vplab_state_write(const vplab_state* state, const char* path, int reference, double delta, double sigma,
                               double alpha) {
    if (!state || !path) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_state_write: NULL argument");
    return guarded([&] {
        vplab::write_snapshot(path, {reference ? vplab::SnapshotKind::reference : vplab::SnapshotKind::micro,
                                     state->state, delta, sigma, alpha});
        return VPLAB_OK;
    });
}

size_t vplab_state_size(const vplab_state* state) { return state ? state->state.size() : 0; }

double vplab_state_time(const vplab_state* state) { return state ? state->state.t : 0.0; }

vplab_status vplab_state_copy(const vplab_state* state, double* q, double* p) {
    if (!state || !q || !p) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_state_copy: NULL argument");
    for (size_t i = 0; i < state->state.size(); ++i) {
        const auto& a = state->state.q[i];
        const auto& b = state->state.p[i];
        q[3 * i] = a.x, q[3 * i + 1] = a.y, q[3 * i + 2] = a.z;
        p[3 * i] = b.x, p[3 * i + 1] = b.y, p[3 * i + 2] = b.z;
    }
    return VPLAB_OK;
}

void vplab_state_free(vplab_state* state) { delete state; }

vplab_status vplab_kernel_eval(int sigma, double alpha, double delta, size_t n, const double q[3], double out[3]) {
    if (!q || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_kernel_eval: NULL argument");
    return guarded([&] {
        const vplab::Vec3 k = vplab::kernel_eval({sigma, alpha, delta, n}, {q[0], q[1], q[2]});
        out[0] = k.x, out[1] = k.y, out[2] = k.z;
        return VPLAB_OK;
    });
}

vplab_status vplab_wasserstein(const vplab_state* a, const vplab_state* b, double p, int exact, uint64_t seed,
                               double* out) {
    if (!a || !b || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_wasserstein: NULL argument");
    return guarded([&] {
        vplab::WassersteinOptions opt;
        opt.seed = seed;
        opt.exact_max_n = std::max(a->state.size(), b->state.size());
        const auto w = vplab::wasserstein_p(vplab::EmpiricalMeasure::from_state(a->state),
                                            vplab::EmpiricalMeasure::from_state(b->state), p,
                                            exact ? vplab::WassersteinMode::exact : vplab::WassersteinMode::sliced, opt);
        *out = w.value;
        return VPLAB_OK;
    });
}

vplab_status vplab_delta_metric(const vplab_state* psi, const vplab_state* phi, double* out) {
    if (!psi || !phi || !out) return fail(VPLAB_ERR_INVALID_ARGUMENT, "vplab_delta_metric: NULL argument");
    return guarded([&] {
        *out = vplab::delta_metric(psi->state, phi->state, psi->state.size());
        return VPLAB_OK;
    });
}

}  // extern "C"
