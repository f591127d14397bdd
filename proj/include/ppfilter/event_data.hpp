#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ppfilter {

/// Raised when input data violates the simple point process assumptions
/// (ties within a channel, events outside the observation window).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One replication: an observation window [0, t_end] and per-channel
/// strictly increasing event times in seconds.
struct Trial {
    int id{0};
    double t_end{0.0};
    std::map<std::string, std::vector<double>> events;

    [[nodiscard]] const std::vector<double>& channel(const std::string& name) const;
    [[nodiscard]] std::size_t count(const std::string& name) const;

    friend bool operator==(const Trial&, const Trial&) = default;
};

/// Replicated multivariate event data. All trials share the same channel set.
class EventData {
public:
    EventData() = default;
    EventData(std::vector<Trial> trials, std::vector<std::string> channels);

    [[nodiscard]] const std::vector<Trial>& trials() const noexcept { return trials_; }
    [[nodiscard]] const std::vector<std::string>& channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t num_trials() const noexcept { return trials_.size(); }
    [[nodiscard]] bool has_channel(const std::string& name) const;

    /// Total observed time summed over trials.
    [[nodiscard]] double total_time() const;
    /// Number of events on a channel summed over trials.
    [[nodiscard]] std::size_t total_count(const std::string& channel) const;

    [[nodiscard]] EventData subset(const std::vector<std::size_t>& trial_indices) const;

    friend bool operator==(const EventData&, const EventData&) = default;

private:
    void validate() const;

    std::vector<Trial> trials_;
    std::vector<std::string> channels_;
};

enum class EventFormat { csv, json };

[[nodiscard]] EventFormat format_from_path(const std::filesystem::path& path);

/// CSV rows `trial,channel,time` under that header. Lines starting with `#`
/// carry metadata: `#channels,<name>,...` fixes the channel order and
/// `#window,<trial>,<t_end>` the observation window. Without a window row a
/// trial ends at the first integer strictly above its last event time.
[[nodiscard]] EventData load_events(const std::filesystem::path& path, EventFormat format);
[[nodiscard]] EventData load_events(const std::filesystem::path& path);

void save_events(const EventData& data, const std::filesystem::path& path, EventFormat format);
void save_events(const EventData& data, const std::filesystem::path& path);

[[nodiscard]] EventData parse_events_csv(const std::string& text);
[[nodiscard]] EventData parse_events_json(const std::string& text);
[[nodiscard]] std::string format_events_csv(const EventData& data);
[[nodiscard]] std::string format_events_json(const EventData& data);

/// Evaluation grid 0 = t_0 < ... < t_n = T for one trial. Target event times
/// are grid points; `jump_indices` lists their positions.
struct TimeGrid {
    std::vector<double> points;
    std::vector<double> deltas;  // deltas[l] = t_l - t_{l-1}; deltas[0] = 0
    std::vector<std::size_t> jump_indices;

    [[nodiscard]] std::size_t n() const noexcept { return points.empty() ? 0 : points.size() - 1; }
};

inline constexpr double kGridMergeTolerance = 1e-12;

[[nodiscard]] TimeGrid make_time_grid(const Trial& trial, const std::string& target, std::size_t base_n);

/// Holds out one trial: returns (all others, the held-out trial).
[[nodiscard]] std::pair<EventData, EventData> split_replications(const EventData& data,
                                                                 std::size_t holdout);

} // namespace ppfilter
