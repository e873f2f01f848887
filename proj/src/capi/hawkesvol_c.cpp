#define HAWKESVOL_BUILDING
#include "hawkesvol/hawkesvol.h"

#include "hawkesvol/attribution.hpp"
#include "hawkesvol/config.hpp"
#include "hawkesvol/data_pipeline.hpp"
#include "hawkesvol/io.hpp"
#include "hawkesvol/pipeline.hpp"
#include "hawkesvol/simulation.hpp"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

struct hv_config {
    hawkesvol::RunConfig config;
};

struct hv_model {
    hawkesvol::HawkesModel model;
    double session_open = 0.0;
};

struct hv_stream {
    hawkesvol::EventStream stream;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_notes;

hv_status to_status(hawkesvol::ErrorCode code) {
    using hawkesvol::ErrorCode;
    switch (code) {
    case ErrorCode::InvalidArgument: return HV_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return HV_ERR_DIMENSION_MISMATCH;
    case ErrorCode::NonConvergence: return HV_ERR_NON_CONVERGENCE;
    case ErrorCode::Unstable: return HV_ERR_UNSTABLE;
    case ErrorCode::Singular: return HV_ERR_SINGULAR;
    case ErrorCode::DegenerateDenominator: return HV_ERR_DEGENERATE_DENOMINATOR;
    case ErrorCode::ExplosionGuard: return HV_ERR_EXPLOSION_GUARD;
    case ErrorCode::NegativeKernel: return HV_ERR_NEGATIVE_KERNEL;
    case ErrorCode::InsufficientSpan: return HV_ERR_INSUFFICIENT_SPAN;
    case ErrorCode::UnsortedInput: return HV_ERR_UNSORTED_INPUT;
    case ErrorCode::EmptyHorizon: return HV_ERR_EMPTY_HORIZON;
    case ErrorCode::SingularSystem: return HV_ERR_SINGULAR_SYSTEM;
    case ErrorCode::InsufficientEvents: return HV_ERR_INSUFFICIENT_EVENTS;
    case ErrorCode::ZeroSigma: return HV_ERR_ZERO_SIGMA;
    case ErrorCode::ZeroIntensity: return HV_ERR_ZERO_INTENSITY;
    case ErrorCode::EmptySeries: return HV_ERR_EMPTY_SERIES;
    case ErrorCode::NonpositivePrice: return HV_ERR_NONPOSITIVE_PRICE;
    case ErrorCode::InconsistentQuotes: return HV_ERR_INCONSISTENT_QUOTES;
    case ErrorCode::TooFewObservations: return HV_ERR_TOO_FEW_OBSERVATIONS;
    case ErrorCode::SchemaViolation: return HV_ERR_SCHEMA_VIOLATION;
    case ErrorCode::UnparseableTimestamp: return HV_ERR_UNPARSEABLE_TIMESTAMP;
    case ErrorCode::NoEligibleAgents: return HV_ERR_NO_ELIGIBLE_AGENTS;
    case ErrorCode::Io: return HV_ERR_IO;
    }
    return HV_ERR_INTERNAL;
}

// Runs fn, translating exceptions into a status and the thread's last error.
template <typename Fn>
hv_status guarded(Fn&& fn) {
    last_error.clear();
    try {
        return fn();
    } catch (const hawkesvol::Error& err) {
        last_error = err.what();
        return to_status(err.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& err) {
        last_error = err.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return HV_ERR_INTERNAL;
}

hv_status null_argument(const char* name) {
    last_error = std::string("InvalidArgument: null ") + name;
    return HV_ERR_INVALID_ARGUMENT;
}

hv_status run_command(const hv_config* config, hawkesvol::CommandReport (*command)(const hawkesvol::RunConfig&)) {
    last_notes.clear();
    if (!config) {
        return null_argument("config");
    }
    return guarded([&] {
        const auto report = command(config->config);
        for (const auto& note : report.notes) {
            last_notes += note;
            last_notes += '\n';
        }
        return report.partial ? HV_PARTIAL : HV_OK;
    });
}

hawkesvol::Matrix square(const double* data, size_t n) {
    hawkesvol::Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i * n + j];
        }
    }
    return m;
}

} // namespace

extern "C" {

const char* hv_version(void) { return "0.1.0"; }

const char* hv_status_name(hv_status status) {
    switch (status) {
    case HV_OK: return "ok";
    case HV_PARTIAL: return "partial";
    case HV_ERR_INTERNAL: return "internal";
    default: break;
    }
    if (status >= HV_ERR_INVALID_ARGUMENT && status <= HV_ERR_IO) {
        static const char* const names[] = {
            "InvalidArgument",   "DimensionMismatch",    "NonConvergence",     "Unstable",
            "Singular",          "DegenerateDenominator", "ExplosionGuard",    "NegativeKernel",
            "InsufficientSpan",  "UnsortedInput",         "EmptyHorizon",      "SingularSystem",
            "InsufficientEvents", "ZeroSigma",            "ZeroIntensity",     "EmptySeries",
            "NonpositivePrice",  "InconsistentQuotes",    "TooFewObservations", "SchemaViolation",
            "UnparseableTimestamp", "NoEligibleAgents",   "Io"};
        return names[status - HV_ERR_INVALID_ARGUMENT];
    }
    return "unknown";
}

const char* hv_last_error(void) { return last_error.c_str(); }
const char* hv_last_notes(void) { return last_notes.c_str(); }

hv_status hv_config_create(hv_config** out) {
    if (!out) {
        return null_argument("out");
    }
    return guarded([&] {
        *out = new hv_config{};
        return HV_OK;
    });
}

void hv_config_destroy(hv_config* config) { delete config; }

hv_status hv_config_load(hv_config* config, const char* path) {
    if (!config || !path) {
        return null_argument(config ? "path" : "config");
    }
    return guarded([&] {
        config->config.load(path);
        return HV_OK;
    });
}

hv_status hv_config_set(hv_config* config, const char* key, const char* value) {
    if (!config || !key || !value) {
        return null_argument(!config ? "config" : !key ? "key" : "value");
    }
    return guarded([&] {
        config->config.set(key, value);
        return HV_OK;
    });
}

hv_status hv_config_validate(const hv_config* config) {
    if (!config) {
        return null_argument("config");
    }
    return guarded([&] {
        config->config.validate();
        return HV_OK;
    });
}

size_t hv_config_help(char* buffer, size_t capacity) {
    const std::string text = hawkesvol::RunConfig::help();
    if (buffer && capacity > 0) {
        const size_t n = std::min(capacity - 1, text.size());
        std::memcpy(buffer, text.data(), n);
        buffer[n] = '\0';
    }
    return text.size();
}

hv_status hv_cmd_simulate(const hv_config* config) { return run_command(config, hawkesvol::run_simulate); }
hv_status hv_cmd_fit(const hv_config* config) { return run_command(config, hawkesvol::run_fit); }
hv_status hv_cmd_attribute(const hv_config* config) { return run_command(config, hawkesvol::run_attribute); }
hv_status hv_cmd_control(const hv_config* config) { return run_command(config, hawkesvol::run_control); }
hv_status hv_cmd_features(const hv_config* config) { return run_command(config, hawkesvol::run_features); }

hv_status hv_model_load(const char* path, hv_model** out) {
    if (!path || !out) {
        return null_argument(path ? "out" : "path");
    }
    return guarded([&] {
        double open = 0.0;
        auto model = hawkesvol::model_from_json(hawkesvol::read_json(path), &open);
        *out = new hv_model{std::move(model), open};
        return HV_OK;
    });
}

void hv_model_destroy(hv_model* model) { delete model; }

size_t hv_model_dim(const hv_model* model) { return model ? model->model.dim() : 0; }

hv_status hv_model_spectral_radius(const hv_model* model, double* out) {
    if (!model || !out) {
        return null_argument(model ? "out" : "model");
    }
    return guarded([&] {
        *out = hawkesvol::spectral_radius(hawkesvol::integrate_kernels(model->model.kernels));
        return HV_OK;
    });
}

hv_status hv_model_sigma2(const hv_model* model, double* out) {
    if (!model || !out) {
        return null_argument(model ? "out" : "model");
    }
    return guarded([&] {
        const auto summary = hawkesvol::summarize(model->model);
        *out = hawkesvol::sigma2_asymptotic(summary, model->model.jump_vector());
        return HV_OK;
    });
}

hv_status hv_model_mean_intensities(const hv_model* model, double* out) {
    if (!model || !out) {
        return null_argument(model ? "out" : "model");
    }
    return guarded([&] {
        const auto summary = hawkesvol::summarize(model->model);
        std::copy(summary.lambda.data(), summary.lambda.data() + summary.lambda.size(), out);
        return HV_OK;
    });
}

hv_status hv_stream_simulate(const hv_model* model, double horizon, uint64_t seed, hv_stream** out) {
    if (!model || !out) {
        return null_argument(model ? "out" : "model");
    }
    return guarded([&] {
        hawkesvol::SimulationOptions options;
        options.session_open = model->session_open;
        *out = new hv_stream{hawkesvol::simulate_thinning(model->model, horizon, seed, options)};
        return HV_OK;
    });
}

hv_status hv_stream_read(const char* path, double session_open, double session_close, hv_stream** out) {
    if (!path || !out) {
        return null_argument(path ? "out" : "path");
    }
    return guarded([&] {
        if (!(session_open < session_close)) {
            throw hawkesvol::Error(hawkesvol::ErrorCode::InvalidArgument, "session_close must exceed session_open");
        }
        *out = new hv_stream{hawkesvol::read_events_csv(path, {session_open, session_close})};
        return HV_OK;
    });
}

hv_status hv_stream_write(const hv_stream* stream, const char* path) {
    if (!stream || !path) {
        return null_argument(stream ? "path" : "stream");
    }
    return guarded([&] {
        hawkesvol::write_events_csv(std::filesystem::path(path), stream->stream);
        return HV_OK;
    });
}

void hv_stream_destroy(hv_stream* stream) { delete stream; }

size_t hv_stream_size(const hv_stream* stream) { return stream ? stream->stream.size() : 0; }

hv_status hv_stream_realized_variance(const hv_stream* stream, double tau, double* out) {
    if (!stream || !out) {
        return null_argument(stream ? "out" : "stream");
    }
    return guarded([&] {
        *out = hawkesvol::realized_variance(hawkesvol::build_price_path(stream->stream, 0.0), tau);
        return HV_OK;
    });
}

hv_status hv_compute_r(const double* phi, size_t n, double* r_out) {
    if (!phi || !r_out) {
        return null_argument(phi ? "r_out" : "phi");
    }
    return guarded([&] {
        const hawkesvol::Matrix r = hawkesvol::compute_R(square(phi, n));
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < n; ++j) {
                r_out[i * n + j] = r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        return HV_OK;
    });
}

hv_status hv_spectral_radius(const double* phi, size_t n, double* out) {
    if (!phi || !out) {
        return null_argument(phi ? "out" : "phi");
    }
    return guarded([&] {
        *out = hawkesvol::spectral_radius(square(phi, n));
        return HV_OK;
    });
}

hv_status hv_toy_model_sigma2(double mu, double phi_self, double phi_cross, double* out) {
    if (!out) {
        return null_argument("out");
    }
    return guarded([&] {
        *out = hawkesvol::toy_model_sigma2(mu, phi_self, phi_cross);
        return HV_OK;
    });
}

hv_status hv_annualize(double sigma2, double half_tick, double open_price, double* out) {
    if (!out) {
        return null_argument("out");
    }
    return guarded([&] {
        *out = hawkesvol::annualize(sigma2, half_tick, open_price);
        return HV_OK;
    });
}

} // extern "C"
