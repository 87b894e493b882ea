#include "dac/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "dac/errors.hpp"

namespace dac {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'C', 'R', 'D', 'S', 'E', 'T'};
constexpr double kStdFloor = 1e-8;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    buf.append(raw, 8);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (pos + n > buf.size())
            throw DatasetTruncationError(std::string("unexpected end of file reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
        pos += 4;
        return v;
    }
    double f64(const char* what) {
        need(8, what);
        double v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
};

} // namespace

Vec OfflineDataset::normalize_state(const Vec& raw) const {
    Vec out(raw.size());
    for (std::size_t d = 0; d < raw.size(); ++d)
        out[d] = (raw[d] - normalization.mean[d]) / normalization.std_dev[d];
    return out;
}

double OfflineDataset::mean_reward() const {
    if (transitions.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& t : transitions) acc += t.reward;
    return acc / static_cast<double>(transitions.size());
}

NormalizationStats compute_normalization(const std::vector<Transition>& transitions,
                                         int state_dim) {
    NormalizationStats stats;
    stats.mean.assign(static_cast<std::size_t>(state_dim), 0.0);
    stats.std_dev.assign(static_cast<std::size_t>(state_dim), 1.0);
    if (transitions.empty()) return stats;

    const double n = static_cast<double>(transitions.size());
    for (const auto& t : transitions)
        for (std::size_t d = 0; d < stats.mean.size(); ++d) stats.mean[d] += t.state[d];
    for (auto& m : stats.mean) m /= n;

    Vec var(stats.mean.size(), 0.0);
    for (const auto& t : transitions)
        for (std::size_t d = 0; d < var.size(); ++d) {
            const double delta = t.state[d] - stats.mean[d];
            var[d] += delta * delta;
        }
    for (std::size_t d = 0; d < var.size(); ++d)
        stats.std_dev[d] = std::max(std::sqrt(var[d] / n), kStdFloor);
    return stats;
}

Vec behavior_action(const SimEnv& env, const BehaviorSpec& behavior, const EnvState& state,
                    const std::vector<Vec>& preference_history, Rng& rng) {
    const std::size_t d = static_cast<std::size_t>(env.config().action_dim);
    Vec a(d, 0.0);
    switch (behavior.kind) {
        case BehaviorKind::mixture_gaussian: {
            if (behavior.mixture_means.empty())
                throw ConfigError("mixture_gaussian behavior needs mixture_means");
            const std::size_t k = rng.uniform_int(behavior.mixture_means.size());
            const Vec& mean = behavior.mixture_means[k];
            require_dim(mean, d, "mixture mean");
            for (std::size_t j = 0; j < d; ++j) a[j] = mean[j] + behavior.sigma * rng.normal();
            break;
        }
        case BehaviorKind::epsilon_greedy_oracle: {
            if (rng.uniform01() < behavior.epsilon) {
                for (std::size_t j = 0; j < d; ++j) a[j] = rng.uniform(-1.0, 1.0);
            } else {
                a = env.oracle_action(state);
                if (behavior.sigma > 0.0)
                    for (std::size_t j = 0; j < d; ++j) a[j] += behavior.sigma * rng.normal();
            }
            break;
        }
        case BehaviorKind::stale_oracle: {
            const int idx =
                std::max(0, static_cast<int>(preference_history.size()) - 1 - behavior.staleness_lag);
            a = preference_history[static_cast<std::size_t>(idx)];
            if (behavior.sigma > 0.0)
                for (std::size_t j = 0; j < d; ++j) a[j] += behavior.sigma * rng.normal();
            break;
        }
    }
    clamp_inplace(a, -1.0, 1.0);
    return a;
}

OfflineDataset generate_dataset(const EnvConfig& cfg, const BehaviorSpec& behavior,
                                int n_trajectories, Rng& rng) {
    if (n_trajectories < 1) throw ContractViolation("generate_dataset needs n_trajectories >= 1");

    SimEnv env(cfg);
    OfflineDataset ds;
    ds.metadata.env = cfg;
    ds.metadata.behavior = behavior;
    ds.metadata.seed = cfg.seed;

    for (int traj = 0; traj < n_trajectories; ++traj) {
        EnvState state = env.reset(rng);
        std::vector<Vec> preference_history{state.latent_preference};
        bool done = false;
        while (!done) {
            const Vec obs = env.observe(state);
            const Vec a = behavior_action(env, behavior, state, preference_history, rng);
            const StepResult res = env.step(state, a, rng);
            Transition t;
            t.state = obs;
            t.action = a;
            t.reward = res.reward;
            t.next_state = env.observe(state);
            t.done = res.done;
            t.trajectory_id = static_cast<std::uint32_t>(traj);
            ds.transitions.push_back(std::move(t));
            preference_history.push_back(state.latent_preference);
            done = res.done;
        }
    }
    ds.normalization = compute_normalization(ds.transitions, cfg.state_dim);
    return ds;
}

nlohmann::json normalization_to_json(const NormalizationStats& stats) {
    return {{"mean", stats.mean}, {"std", stats.std_dev}};
}

NormalizationStats normalization_from_json(const nlohmann::json& j) {
    NormalizationStats stats;
    stats.mean = j.at("mean").get<Vec>();
    stats.std_dev = j.at("std").get<Vec>();
    return stats;
}

void write_dataset(const OfflineDataset& dataset, const std::string& path) {
    const int sd = dataset.state_dim();
    const int ad = dataset.action_dim();

    nlohmann::json header;
    header["env"] = env_config_to_json(dataset.metadata.env);
    header["behavior"] = behavior_spec_to_json(dataset.metadata.behavior);
    header["seed"] = dataset.metadata.seed;
    header["normalization"] = normalization_to_json(dataset.normalization);
    header["n_transitions"] = dataset.transitions.size();
    const std::string header_str = header.dump();

    std::string buf;
    buf.append(kMagic, sizeof(kMagic));
    put_u32(buf, dataset.metadata.format_version);
    put_u32(buf, static_cast<std::uint32_t>(header_str.size()));
    buf += header_str;

    for (const auto& t : dataset.transitions) {
        const std::uint32_t record_len =
            4 + 1 + 8 + 8 * static_cast<std::uint32_t>(sd + ad + sd);
        put_u32(buf, record_len);
        put_u32(buf, t.trajectory_id);
        buf.push_back(t.done ? 1 : 0);
        put_f64(buf, t.reward);
        for (double x : t.state) put_f64(buf, x);
        for (double x : t.action) put_f64(buf, x);
        for (double x : t.next_state) put_f64(buf, x);
    }

    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetIoError("cannot open '" + path + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DatasetIoError("short write to '" + path + "'");
}

OfflineDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DatasetIoError("cannot open '" + path + "'");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) + 8 + 4)
        throw DatasetTruncationError("file too small for container framing");
    if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw DatasetVersionError("bad magic bytes");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b)
            v |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(buf[buf.size() - 4 + static_cast<std::size_t>(b)]))
                 << (8 * b);
        return v;
    }();
    const std::uint32_t actual_crc = static_cast<std::uint32_t>(crc32(
        0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
    if (stored_crc != actual_crc)
        throw DatasetChecksumError("crc mismatch: file is corrupt or truncated");

    Reader r{buf, sizeof(kMagic)};
    const std::uint32_t version = r.u32("format version");
    if (version != kDatasetFormatVersion)
        throw DatasetVersionError("unsupported format version " + std::to_string(version));

    const std::uint32_t header_len = r.u32("header length");
    r.need(header_len, "header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(buf.substr(r.pos, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw DatasetIoError(std::string("header parse failure: ") + e.what());
    }
    r.pos += header_len;

    OfflineDataset ds;
    ds.metadata.format_version = version;
    ds.metadata.env = env_config_from_json(header.at("env"));
    ds.metadata.behavior = behavior_spec_from_json(header.at("behavior"));
    ds.metadata.seed = header.at("seed").get<std::uint64_t>();
    ds.normalization = normalization_from_json(header.at("normalization"));
    const std::size_t n = header.at("n_transitions").get<std::size_t>();

    const std::size_t sd = static_cast<std::size_t>(ds.metadata.env.state_dim);
    const std::size_t ad = static_cast<std::size_t>(ds.metadata.env.action_dim);
    ds.transitions.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t record_len = r.u32("record length");
        const std::size_t expected = 4 + 1 + 8 + 8 * (sd + ad + sd);
        if (record_len != expected)
            throw DatasetIoError("record length mismatch at transition " + std::to_string(k));
        Transition t;
        t.trajectory_id = r.u32("trajectory id");
        t.done = r.u8("done flag") != 0;
        t.reward = r.f64("reward");
        t.state.resize(sd);
        for (auto& x : t.state) x = r.f64("state");
        t.action.resize(ad);
        for (auto& x : t.action) x = r.f64("action");
        t.next_state.resize(sd);
        for (auto& x : t.next_state) x = r.f64("next state");
        ds.transitions.push_back(std::move(t));
    }
    if (r.pos != buf.size() - 4)
        throw DatasetIoError("trailing bytes after last record");
    return ds;
}

TransitionBatch sample_minibatch(const OfflineDataset& dataset, std::size_t batch_size, Rng& rng) {
    if (dataset.transitions.empty())
        throw ContractViolation("sample_minibatch on empty dataset");
    if (batch_size < 1) throw ContractViolation("sample_minibatch needs batch_size >= 1");

    TransitionBatch batch;
    batch.states.reserve(batch_size);
    batch.actions.reserve(batch_size);
    batch.rewards.reserve(batch_size);
    batch.next_states.reserve(batch_size);
    batch.dones.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
        const auto& t = dataset.transitions[rng.uniform_int(dataset.transitions.size())];
        batch.states.push_back(dataset.normalize_state(t.state));
        batch.actions.push_back(t.action);
        batch.rewards.push_back(t.reward);
        batch.next_states.push_back(dataset.normalize_state(t.next_state));
        batch.dones.push_back(t.done ? 1 : 0);
    }
    return batch;
}

} // namespace dac
