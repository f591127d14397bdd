#include "ppfilter/event_data.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ppfilter {

namespace {

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text, std::size_t line_no) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (result.ec != std::errc{} || result.ptr != text.data() + text.size()) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse number '" +
                        std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        // strip surrounding quotes and blanks
        auto first = field.find_first_not_of(" \t\"");
        auto last = field.find_last_not_of(" \t\"");
        fields.push_back(first == std::string::npos ? std::string{}
                                                    : field.substr(first, last - first + 1));
    }
    return fields;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open event file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Sorts each channel in place and rejects ties.
void normalize_trial(Trial& trial) {
    for (auto& [name, times] : trial.events) {
        std::sort(times.begin(), times.end());
        const auto dup = std::adjacent_find(times.begin(), times.end());
        if (dup != times.end()) {
            throw DataError("duplicate event time " + format_double(*dup) + " on channel '" + name +
                            "' in trial " + std::to_string(trial.id) +
                            " (simple point process violated)");
        }
    }
}

double default_window_end(const Trial& trial) {
    double last = 0.0;
    for (const auto& [name, times] : trial.events) {
        if (!times.empty()) last = std::max(last, times.back());
    }
    return std::floor(last) + 1.0;
}

} // namespace

const std::vector<double>& Trial::channel(const std::string& name) const {
    const auto it = events.find(name);
    if (it == events.end()) {
        throw DataError("channel '" + name + "' not present in trial " + std::to_string(id));
    }
    return it->second;
}

std::size_t Trial::count(const std::string& name) const {
    const auto it = events.find(name);
    return it == events.end() ? 0 : it->second.size();
}

EventData::EventData(std::vector<Trial> trials, std::vector<std::string> channels)
    : trials_(std::move(trials)), channels_(std::move(channels)) {
    for (auto& trial : trials_) {
        for (const auto& name : channels_) {
            trial.events.try_emplace(name);
        }
        normalize_trial(trial);
    }
    validate();
}

void EventData::validate() const {
    const std::set<std::string> names(channels_.begin(), channels_.end());
    if (names.size() != channels_.size()) {
        throw DataError("duplicate channel names");
    }
    std::set<int> ids;
    for (const auto& trial : trials_) {
        if (!ids.insert(trial.id).second) {
            throw DataError("duplicate trial id " + std::to_string(trial.id));
        }
        if (!(trial.t_end > 0.0) || !std::isfinite(trial.t_end)) {
            throw DataError("trial " + std::to_string(trial.id) + " has a non-positive window");
        }
        if (trial.events.size() != channels_.size()) {
            throw DataError("trial " + std::to_string(trial.id) + " does not share the channel set");
        }
        for (const auto& [name, times] : trial.events) {
            if (!names.contains(name)) {
                throw DataError("trial " + std::to_string(trial.id) + " has unknown channel '" + name + "'");
            }
            for (std::size_t j = 0; j < times.size(); ++j) {
                if (!(times[j] > 0.0 && times[j] < trial.t_end)) {
                    throw DataError("event time " + format_double(times[j]) + " on channel '" + name +
                                    "' outside (0, " + format_double(trial.t_end) + ") in trial " +
                                    std::to_string(trial.id));
                }
                if (j > 0 && !(times[j] > times[j - 1])) {
                    throw DataError("event times not strictly increasing on channel '" + name + "'");
                }
            }
        }
    }
}

bool EventData::has_channel(const std::string& name) const {
    return std::find(channels_.begin(), channels_.end(), name) != channels_.end();
}

double EventData::total_time() const {
    double total = 0.0;
    for (const auto& trial : trials_) total += trial.t_end;
    return total;
}

std::size_t EventData::total_count(const std::string& channel) const {
    std::size_t total = 0;
    for (const auto& trial : trials_) total += trial.count(channel);
    return total;
}

EventData EventData::subset(const std::vector<std::size_t>& trial_indices) const {
    std::vector<Trial> picked;
    picked.reserve(trial_indices.size());
    for (const auto index : trial_indices) {
        if (index >= trials_.size()) {
            throw std::out_of_range("trial index out of range");
        }
        picked.push_back(trials_[index]);
    }
    return EventData(std::move(picked), channels_);
}

EventFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".json" ? EventFormat::json : EventFormat::csv;
}

EventData parse_events_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<std::string> channels;
    std::map<int, Trial> trials;
    std::map<int, double> windows;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        auto fields = split_fields(line);
        if (line.front() == '#') {
            if (fields.empty()) continue;
            if (fields[0] == "#channels") {
                channels.assign(fields.begin() + 1, fields.end());
            } else if (fields[0] == "#window" && fields.size() == 3) {
                windows[static_cast<int>(parse_double(fields[1], line_no))] = parse_double(fields[2], line_no);
            }
            continue;
        }
        if (!header_seen) {
            if (fields.size() != 3 || fields[0] != "trial" || fields[1] != "channel" || fields[2] != "time") {
                throw DataError("line " + std::to_string(line_no) + ": expected header 'trial,channel,time'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 3) {
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields");
        }
        const double id_value = parse_double(fields[0], line_no);
        if (id_value != std::floor(id_value)) {
            throw DataError("line " + std::to_string(line_no) + ": trial id must be an integer");
        }
        const int id = static_cast<int>(id_value);
        auto& trial = trials[id];
        trial.id = id;
        trial.events[fields[1]].push_back(parse_double(fields[2], line_no));
        if (std::find(channels.begin(), channels.end(), fields[1]) == channels.end()) {
            channels.push_back(fields[1]);
        }
    }
    if (!header_seen) {
        throw DataError("missing CSV header 'trial,channel,time'");
    }
    for (const auto& [id, t_end] : windows) {
        trials[id].id = id;
    }

    std::vector<Trial> out;
    for (auto& [id, trial] : trials) {
        normalize_trial(trial);
        const auto w = windows.find(id);
        trial.t_end = w != windows.end() ? w->second : default_window_end(trial);
        out.push_back(std::move(trial));
    }
    return EventData(std::move(out), std::move(channels));
}

EventData parse_events_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("JSON parse error: ") + e.what());
    }
    try {
        std::vector<std::string> channels;
        if (doc.contains("channels")) {
            channels = doc.at("channels").get<std::vector<std::string>>();
        }
        std::vector<Trial> trials;
        for (const auto& item : doc.at("trials")) {
            Trial trial;
            trial.id = item.at("id").get<int>();
            for (const auto& [name, times] : item.at("events").items()) {
                trial.events[name] = times.get<std::vector<double>>();
                if (std::find(channels.begin(), channels.end(), name) == channels.end()) {
                    channels.push_back(name);
                }
            }
            normalize_trial(trial);
            trial.t_end = item.contains("t_end") ? item.at("t_end").get<double>() : default_window_end(trial);
            trials.push_back(std::move(trial));
        }
        return EventData(std::move(trials), std::move(channels));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed event JSON: ") + e.what());
    }
}

std::string format_events_csv(const EventData& data) {
    std::ostringstream out;
    out << "#channels";
    for (const auto& name : data.channels()) out << ',' << name;
    out << '\n';
    for (const auto& trial : data.trials()) {
        out << "#window," << trial.id << ',' << format_double(trial.t_end) << '\n';
    }
    out << "trial,channel,time\n";
    for (const auto& trial : data.trials()) {
        for (const auto& name : data.channels()) {
            for (const double t : trial.channel(name)) {
                out << trial.id << ',' << name << ',' << format_double(t) << '\n';
            }
        }
    }
    return out.str();
}

std::string format_events_json(const EventData& data) {
    // Emit numbers through to_chars so the text round-trips bit-exactly.
    std::ostringstream out;
    out << "{\"channels\":" << nlohmann::json(data.channels()).dump() << ",\"trials\":[";
    bool first_trial = true;
    for (const auto& trial : data.trials()) {
        if (!first_trial) out << ',';
        first_trial = false;
        out << "{\"id\":" << trial.id << ",\"t_end\":" << format_double(trial.t_end) << ",\"events\":{";
        bool first_channel = true;
        for (const auto& name : data.channels()) {
            if (!first_channel) out << ',';
            first_channel = false;
            out << nlohmann::json(name).dump() << ":[";
            const auto& times = trial.channel(name);
            for (std::size_t j = 0; j < times.size(); ++j) {
                if (j > 0) out << ',';
                out << format_double(times[j]);
            }
            out << ']';
        }
        out << "}}";
    }
    out << "]}\n";
    return out.str();
}

EventData load_events(const std::filesystem::path& path, EventFormat format) {
    const std::string text = read_file(path);
    return format == EventFormat::json ? parse_events_json(text) : parse_events_csv(text);
}

EventData load_events(const std::filesystem::path& path) {
    return load_events(path, format_from_path(path));
}

void save_events(const EventData& data, const std::filesystem::path& path, EventFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write event file: " + path.string());
    }
    out << (format == EventFormat::json ? format_events_json(data) : format_events_csv(data));
}

void save_events(const EventData& data, const std::filesystem::path& path) {
    save_events(data, path, format_from_path(path));
}

TimeGrid make_time_grid(const Trial& trial, const std::string& target, std::size_t base_n) {
    if (base_n < 1) {
        throw std::invalid_argument("make_time_grid: base_n must be at least 1");
    }
    const auto& events = trial.channel(target);
    const double horizon = trial.t_end;

    TimeGrid grid;
    grid.points.reserve(base_n + 1 + events.size());
    std::size_t i = 0;
    std::size_t j = 0;
    const auto uniform = [&](std::size_t l) {
        return l == base_n ? horizon : horizon * static_cast<double>(l) / static_cast<double>(base_n);
    };
    while (i <= base_n || j < events.size()) {
        if (j == events.size()) {
            grid.points.push_back(uniform(i++));
            continue;
        }
        const double e = events[j];
        if (i > base_n) {
            grid.jump_indices.push_back(grid.points.size());
            grid.points.push_back(e);
            ++j;
            continue;
        }
        const double u = uniform(i);
        // Interior uniform points within tolerance of an event are replaced by it;
        // the endpoints 0 and T stay fixed.
        if (i > 0 && i < base_n && std::abs(u - e) <= kGridMergeTolerance) {
            grid.jump_indices.push_back(grid.points.size());
            grid.points.push_back(e);
            ++i;
            ++j;
        } else if (u < e) {
            grid.points.push_back(u);
            ++i;
        } else {
            grid.jump_indices.push_back(grid.points.size());
            grid.points.push_back(e);
            ++j;
        }
    }

    grid.deltas.resize(grid.points.size());
    grid.deltas[0] = 0.0;
    for (std::size_t l = 1; l < grid.points.size(); ++l) {
        grid.deltas[l] = grid.points[l] - grid.points[l - 1];
        if (!(grid.deltas[l] > 0.0)) {
            throw DataError("time grid has a non-positive increment at index " + std::to_string(l));
        }
    }
    return grid;
}

std::pair<EventData, EventData> split_replications(const EventData& data, std::size_t holdout) {
    if (data.num_trials() < 2) {
        throw DataError("cannot hold out a trial from data with fewer than two trials");
    }
    if (holdout >= data.num_trials()) {
        throw std::out_of_range("holdout trial index out of range");
    }
    std::vector<std::size_t> train;
    for (std::size_t k = 0; k < data.num_trials(); ++k) {
        if (k != holdout) train.push_back(k);
    }
    return {data.subset(train), data.subset({holdout})};
}

} // namespace ppfilter
