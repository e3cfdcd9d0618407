#include "app.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "ptrack/amfm.hpp"
#include "ptrack/detection_io.hpp"
#include "ptrack/dpt.hpp"
#include "ptrack/errors.hpp"
#include "ptrack/evaluation.hpp"
#include "ptrack/image.hpp"
#include "ptrack/participation_map.hpp"
#include "ptrack/prototypes.hpp"

namespace ptrack::app {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KeyInfo {
    const char* key;
    const char* default_value;
    const char* help;
};

// Every configuration key, its default and its flag description.
constexpr KeyInfo kKeys[] = {
    {"detections", "", "detection file"},
    {"ground_truth", "", "ground-truth presence file"},
    {"seeds", "", "initial boxes for unlabeled participants"},
    {"counts", "", "per-unit TP/FP/FN counts to replay"},
    {"run_dir", "run", "directory receiving all outputs"},
    {"timelines", "", "directory of state timelines (default <run_dir>/timelines)"},
    {"image", "", "input graymap (P2 or P5)"},
    {"boxes", "", "detection file whose boxes select FM patches"},
    {"frame", "0", "frame index of the image within the boxes file"},
    {"samples", "", "feature sample file"},
    {"participant", "participant", "participant label for the prototype set"},
    {"participants", "", "comma-separated band order for the map"},
    {"lookahead", "30", "lookahead horizon n in frames"},
    {"edge_margin", "30", "edge band width in pixels"},
    {"link_iou", "0.3", "minimum IOU when linking unlabeled detections"},
    {"iou_threshold", "0.6", "minimum IOU for a true positive"},
    {"orientations", "9", "filterbank orientations"},
    {"scales", "6", "filterbank scales"},
    {"patch_size", "100", "FM patch side in pixels"},
    {"interior_margin", "16", "border excluded from reconstruction error"},
    {"k", "64", "number of clusters"},
    {"stride", "30", "sparse sampling stride in frames"},
    {"seed", "1", "k-means seed"},
    {"max_iters", "100", "k-means iteration cap"},
    {"fps", "30", "frame rate of the timelines"},
    {"cell_seconds", "1", "seconds per map cell"},
    {"cell_width", "4", "map cell width in pixels"},
    {"band_height", "16", "map band height in pixels"},
    {"jobs", "1", "participants processed concurrently"},
    {"unit", "session", "unit label for detection counts"},
};

// Keys that do not change any output and stay out of the config hash.
const std::set<std::string> kUnhashedKeys = {"run_dir", "jobs"};

struct CommandInfo {
    const char* name;
    const char* help;
    std::vector<std::string> keys;
};

const std::vector<CommandInfo> kCommands = {
    {"dpt-run", "run participant tracking and write state timelines",
     {"detections", "seeds", "run_dir", "lookahead", "edge_margin", "link_iou", "cell_seconds",
      "jobs"}},
    {"eval", "detection F1 and presence accuracy with and without tracking",
     {"detections", "ground_truth", "seeds", "counts", "run_dir", "lookahead", "edge_margin",
      "link_iou", "iou_threshold", "unit", "jobs"}},
    {"amfm", "AM-FM decomposition of a graymap and FM patch export",
     {"image", "boxes", "frame", "run_dir", "orientations", "scales", "patch_size",
      "interior_margin"}},
    {"prototypes", "face prototype selection by sparse sampling and k-means",
     {"samples", "run_dir", "participant", "k", "stride", "seed", "max_iters"}},
    {"map", "render participation maps from state timelines",
     {"timelines", "run_dir", "participants", "fps", "cell_seconds", "cell_width",
      "band_height"}},
};

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool known_key(const std::string& key) {
    return std::any_of(std::begin(kKeys), std::end(kKeys),
                       [&](const KeyInfo& k) { return key == k.key; });
}

std::map<std::string, std::string> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::map<std::string, std::string> values;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(no) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(text).substr(0, eq));
        std::replace(key.begin(), key.end(), '-', '_');
        if (!known_key(key)) {
            throw UsageError(path.string() + ":" + std::to_string(no) + ": unknown key '" + key + "'");
        }
        values[key] = trim(std::string_view(text).substr(eq + 1));
    }
    return values;
}

/// Resolved configuration of one command.
class Settings {
public:
    Settings(std::map<std::string, std::string> values, std::vector<std::string> keys)
        : values_(std::move(values)), keys_(std::move(keys)) {}

    const std::string& str(const std::string& key) const { return values_.at(key); }
    bool has(const std::string& key) const { return !str(key).empty(); }

    long long integer(const std::string& key, long long lo, long long hi) const {
        const std::string& s = str(key);
        long long v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || end != s.data() + s.size() || v < lo || v > hi) {
            throw UsageError("invalid " + key + " '" + s + "' (expected integer in [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "])");
        }
        return v;
    }

    /// Real in (lo, hi] or [lo, hi] depending on `open_low`.
    double real(const std::string& key, double lo, double hi, bool open_low) const {
        const std::string& s = str(key);
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        const bool low_ok = open_low ? v > lo : v >= lo;
        if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v) || !low_ok ||
            v > hi) {
            throw UsageError("invalid " + key + " '" + s + "'");
        }
        return v;
    }

    fs::path input(const std::string& key) const {
        if (!has(key)) throw UsageError("missing required setting '" + key + "'");
        fs::path p(str(key));
        if (!fs::is_regular_file(p)) throw InputError(key + " file not found: " + p.string());
        return p;
    }

    fs::path run_dir() const { return fs::path(str("run_dir")); }

    /// Sorted `key = value` lines of the settings that affect outputs.
    std::string snapshot() const {
        std::vector<std::string> sorted = keys_;
        std::sort(sorted.begin(), sorted.end());
        std::string out;
        for (const auto& k : sorted) {
            if (kUnhashedKeys.count(k) == 0) out += k + " = " + str(k) + "\n";
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
    std::vector<std::string> keys_;
};

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::logic_error("sha256 failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

/// Collects written artifacts and writes the manifest last.
class RunOutput {
public:
    RunOutput(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw InputError("cannot create run directory " + dir_.string());
    }

    void add_input(const std::string& key, const fs::path& path) {
        inputs_.emplace_back(key, path.string());
    }

    void write(const fs::path& relative, const std::string& content) {
        const fs::path full = dir_ / relative;
        std::error_code ec;
        fs::create_directories(full.parent_path(), ec);
        std::ofstream out(full, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + full.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InputError("failed writing " + full.string());
        artifacts_.push_back(relative.generic_string());
    }

    void finish(const Settings& settings) {
        const std::string snapshot = settings.snapshot();
        const std::string config_name = "config-" + command_ + ".txt";
        write(config_name, snapshot);
        std::ostringstream m;
        m << "command " << command_ << '\n';
        m << "config_sha256 " << sha256_hex(snapshot) << '\n';
        for (const auto& [key, path] : inputs_) m << "input " << key << ' ' << path << '\n';
        for (const auto& a : artifacts_) m << "artifact " << a << '\n';
        const std::string name = "manifest-" + command_ + ".txt";
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        out << m.str();
        if (!out) throw InputError("cannot write manifest");
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::string command_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::string> artifacts_;
};

template <typename T, typename Reader>
T read_file(const fs::path& path, Reader reader) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return reader(in);
    } catch (const Error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

bool safe_label(const std::string& label) {
    if (label.empty() || label.front() == '.') return false;
    return std::all_of(label.begin(), label.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

void require_safe_label(const std::string& label) {
    if (!safe_label(label)) {
        throw InputError("label '" + label + "' cannot be used as a file name");
    }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

dpt::DptConfig dpt_config(const Settings& s, const FrameGeometry& frame) {
    dpt::DptConfig config;
    config.lookahead = static_cast<int>(s.integer("lookahead", 1, 1'000'000));
    config.frame = frame;
    return config;
}

double edge_margin(const Settings& s) { return s.real("edge_margin", 0.0, 1e6, false); }

struct TrackedSession {
    DetectionStream stream;
    std::vector<ParticipantStream> tracks;
    std::vector<dpt::StateTimeline> timelines;
};

TrackedSession track_session(const Settings& s, RunOutput& output) {
    TrackedSession session;
    const fs::path det_path = s.input("detections");
    output.add_input("detections", det_path);
    const double margin = edge_margin(s);
    session.stream = read_file<DetectionStream>(
        det_path, [&](std::istream& in) { return parse_detections(in, margin); });

    SeedBoxes seeds;
    if (s.has("seeds")) {
        const fs::path seed_path = s.input("seeds");
        output.add_input("seeds", seed_path);
        seeds = read_file<SeedBoxes>(seed_path, [](std::istream& in) { return parse_seeds(in); });
    }
    const double link_iou = s.real("link_iou", 0.0, 1.0, true);
    if (link_iou >= 1.0) throw UsageError("link_iou must be below 1");
    try {
        session.tracks = link_by_iou(session.stream, link_iou, seeds);
    } catch (const AmbiguityError& e) {
        throw InputError(det_path.string() + ": " + e.what());
    }

    if (session.stream.frame_count == 0) {
        throw InputError(det_path.string() + ": stream has no frames");
    }
    const auto config = dpt_config(s, session.stream.frame);
    session.timelines.resize(session.tracks.size());
    const int jobs = static_cast<int>(s.integer("jobs", 1, 1024));
    parallel_for(session.tracks.size(), jobs, [&](std::size_t i) {
        session.timelines[i] = dpt::run(session.tracks[i], config);
    });
    return session;
}

std::string timeline_text(const dpt::StateTimeline& timeline) {
    std::ostringstream out;
    dpt::write_timeline(out, timeline);
    return out.str();
}

// ---------------------------------------------------------------- dpt-run

int cmd_dpt_run(const Settings& s, std::ostream& out) {
    RunOutput output(s.run_dir(), "dpt-run");
    const TrackedSession session = track_session(s, output);
    for (const auto& t : session.timelines) require_safe_label(t.participant_id);

    for (const auto& t : session.timelines) {
        output.write(fs::path("timelines") / (t.participant_id + ".txt"), timeline_text(t));
    }
    const double cell_seconds = s.real("cell_seconds", 0.0, 1e6, true);
    output.write("presence.csv",
                 map::render_timeline_csv(session.timelines, session.stream.fps, cell_seconds));
    output.finish(s);

    out << "dpt-run: " << session.timelines.size() << " participant(s), "
        << session.stream.frame_count << " frame(s) -> " << output.dir().string() << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------- eval

struct CountsRow {
    std::string method;
    std::string unit;
    eval::MatchCounts counts;
};

std::vector<CountsRow> parse_counts(std::istream& in) {
    std::vector<CountsRow> rows;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first) || first.front() == '#') continue;
        CountsRow row;
        row.method = first;
        std::string extra;
        if (!(fields >> row.unit >> row.counts.tp >> row.counts.fp >> row.counts.fn) ||
            (fields >> extra) || row.counts.tp < 0 || row.counts.fp < 0 || row.counts.fn < 0) {
            throw ParseError(no, "expected '<method> <unit> <tp> <fp> <fn>'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("counts file has no rows");
    return rows;
}

std::string summary_table(const eval::Summary& summary) {
    std::ostringstream t;
    eval::write_summary_table(t, summary);
    return t.str();
}

std::string summary_csv(const eval::Summary& summary) {
    std::ostringstream c;
    eval::write_summary_csv(c, summary);
    return c.str();
}

int cmd_eval_counts(const Settings& s, std::ostream& out) {
    RunOutput output(s.run_dir(), "eval");
    const fs::path path = s.input("counts");
    output.add_input("counts", path);
    const auto rows = read_file<std::vector<CountsRow>>(path, parse_counts);

    std::vector<std::string> methods;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            require_safe_label(r.method);
            methods.push_back(r.method);
        }
    }
    for (const auto& method : methods) {
        std::vector<eval::UnitResult> units;
        for (const auto& r : rows) {
            if (r.method == method) units.push_back({r.unit, r.counts, std::nullopt});
        }
        const auto summary = eval::aggregate(units);
        const std::string table = summary_table(summary);
        output.write("detection_" + method + ".txt", table);
        output.write("detection_" + method + ".csv", summary_csv(summary));
        out << "== " << method << '\n' << table;
        if (summary.total.metrics) {
            out << "total F1 " << method << ": " << std::fixed << std::setprecision(2)
                << summary.total.metrics->f1 << std::defaultfloat << "\n\n";
        }
    }
    output.finish(s);
    return kSuccess;
}

int cmd_eval(const Settings& s, std::ostream& out) {
    if (s.has("counts")) return cmd_eval_counts(s, out);

    RunOutput output(s.run_dir(), "eval");
    const TrackedSession session = track_session(s, output);
    const fs::path gt_path = s.input("ground_truth");
    output.add_input("ground_truth", gt_path);
    const double margin = edge_margin(s);
    const GroundTruth truth = read_file<GroundTruth>(
        gt_path, [&](std::istream& in) { return parse_ground_truth(in, margin); });
    if (truth.frame_count != session.stream.frame_count) {
        throw InputError("frame counts differ: detections " +
                         std::to_string(session.stream.frame_count) + ", ground truth " +
                         std::to_string(truth.frame_count));
    }

    std::set<std::string> tracked;
    for (const auto& t : session.timelines) tracked.insert(t.participant_id);
    std::set<std::string> labeled;
    for (const auto& [id, records] : truth.participants) labeled.insert(id);
    if (tracked != labeled) {
        std::string only_det, only_gt;
        for (const auto& id : tracked) {
            if (!labeled.count(id)) only_det += " " + id;
        }
        for (const auto& id : labeled) {
            if (!tracked.count(id)) only_gt += " " + id;
        }
        throw InputError("participant labels differ; only in detections:" +
                         (only_det.empty() ? std::string(" (none)") : only_det) +
                         "; only in ground truth:" +
                         (only_gt.empty() ? std::string(" (none)") : only_gt));
    }

    // Detection counts over all boxes of every frame.
    const double threshold = s.real("iou_threshold", 0.0, 1.0, true);
    std::vector<std::vector<BBox>> detections(static_cast<std::size_t>(truth.frame_count));
    for (const auto& rec : session.stream.records) {
        detections[static_cast<std::size_t>(rec.frame_index)].push_back(rec.box);
    }
    eval::MatchCounts counts;
    for (int f = 0; f < truth.frame_count; ++f) {
        counts += eval::match_frame(detections[static_cast<std::size_t>(f)], truth.boxes_at(f),
                                    threshold);
    }
    const auto det_summary = eval::aggregate({{s.str("unit"), counts, std::nullopt}});

    // Presence accuracy per participant, with and without tracking.
    std::vector<eval::UnitResult> raw_units;
    std::vector<eval::UnitResult> dpt_units;
    std::ostringstream csv;
    csv << "participant,accuracy_no_dpt,accuracy_dpt\n";
    for (std::size_t i = 0; i < session.tracks.size(); ++i) {
        const auto& track = session.tracks[i];
        const auto truth_presence = truth.presence_timeline(track.participant_id);
        std::vector<bool> raw;
        for (const auto& slot : track.slots) raw.push_back(slot.has_value());
        const double raw_acc = eval::presence_accuracy(raw, truth_presence);
        const double dpt_acc =
            eval::presence_accuracy(dpt::presence_timeline(session.timelines[i]), truth_presence);
        raw_units.push_back({track.participant_id, {}, raw_acc});
        dpt_units.push_back({track.participant_id, {}, dpt_acc});
        csv << track.participant_id << ',' << std::fixed << std::setprecision(6) << raw_acc << ','
            << dpt_acc << '\n';
    }

    std::ostringstream presence;
    presence << std::left << std::setw(16) << "participant" << std::right << std::setw(12)
             << "no DPT" << std::setw(12) << "DPT" << '\n';
    auto pct = [](double v) {
        std::ostringstream p;
        p << std::fixed << std::setprecision(1) << 100.0 * v << '%';
        return p.str();
    };
    for (std::size_t i = 0; i < raw_units.size(); ++i) {
        presence << std::left << std::setw(16) << raw_units[i].unit << std::right << std::setw(12)
                 << pct(*raw_units[i].accuracy) << std::setw(12) << pct(*dpt_units[i].accuracy)
                 << '\n';
    }
    if (!raw_units.empty()) {
        const auto raw_mean = eval::aggregate(raw_units).mean_accuracy.value();
        const auto dpt_mean = eval::aggregate(dpt_units).mean_accuracy.value();
        presence << std::left << std::setw(16) << "average" << std::right << std::setw(12)
                 << pct(raw_mean) << std::setw(12) << pct(dpt_mean) << '\n';
        csv << "average," << std::fixed << std::setprecision(6) << raw_mean << ',' << dpt_mean
            << '\n';
    }

    const std::string det_table = summary_table(det_summary);
    output.write("detection_summary.txt", det_table);
    output.write("detection_summary.csv", summary_csv(det_summary));
    output.write("presence_summary.txt", presence.str());
    output.write("presence_accuracy.csv", csv.str());
    output.finish(s);

    out << "== detection (IOU >= " << s.str("iou_threshold") << ")\n"
        << det_table << "\n== presence accuracy\n"
        << presence.str();
    return kSuccess;
}

// ---------------------------------------------------------------- amfm

int cmd_amfm(const Settings& s, std::ostream& out, std::ostream& err) {
    RunOutput output(s.run_dir(), "amfm");
    const fs::path image_path = s.input("image");
    output.add_input("image", image_path);
    const Graymap gray = read_file<Graymap>(image_path, [](std::istream& in) { return read_pgm(in); });
    const LuminanceImage& image = gray.image;

    const int orientations = static_cast<int>(s.integer("orientations", 1, 64));
    const int scales = static_cast<int>(s.integer("scales", 1, 16));
    const int patch_size = static_cast<int>(s.integer("patch_size", 1, 100000));
    const int margin = static_cast<int>(s.integer("interior_margin", 0, 100000));

    amfm::GaborFilterbank bank;
    try {
        bank = amfm::build_filterbank(image.width, image.height, orientations, scales);
    } catch (const ConfigError& e) {
        throw InputError(image_path.string() + ": " + e.what());
    }
    if (bank.fidelity_warning) err << "warning: " << *bank.fidelity_warning << '\n';

    const amfm::AmFmField field = amfm::analyze(image, bank);
    const double maxval = gray.maxval;

    double mean = 0.0;
    for (const double v : image.samples) mean += v;
    mean /= static_cast<double>(image.size());

    LuminanceImage fm = amfm::fm_image(field);
    LuminanceImage recon = amfm::reconstruct(field);

    double err_sq = 0.0;
    double ref_sq = 0.0;
    for (int y = margin; y < image.height - margin; ++y) {
        for (int x = margin; x < image.width - margin; ++x) {
            const double ref = image.at(x, y) - mean;
            const double diff = recon.at(x, y) - ref;
            err_sq += diff * diff;
            ref_sq += ref * ref;
        }
    }

    auto encode_fm = [&](LuminanceImage img) {
        for (double& v : img.samples) v = (v + 1.0) / 2.0 * maxval;
        return img;
    };
    auto pgm = [&](const LuminanceImage& img) {
        std::ostringstream o;
        write_pgm(o, img, gray.maxval);
        return o.str();
    };

    LuminanceImage recon_shifted = recon;
    for (double& v : recon_shifted.samples) v += mean;
    output.write("am.pgm", pgm(amfm::am_image(field)));
    output.write("fm.pgm", pgm(encode_fm(fm)));
    output.write("recon.pgm", pgm(recon_shifted));

    std::size_t patch_count = 0;
    if (s.has("boxes")) {
        const fs::path box_path = s.input("boxes");
        output.add_input("boxes", box_path);
        const auto stream = read_file<DetectionStream>(
            box_path, [](std::istream& in) { return parse_detections(in, 0.0); });
        if (stream.frame.width != image.width || stream.frame.height != image.height) {
            throw InputError(box_path.string() + ": frame size differs from the image");
        }
        const int frame = static_cast<int>(s.integer("frame", 0, stream.frame_count - 1));
        std::vector<BBox> boxes;
        for (const auto& rec : stream.records) {
            if (rec.frame_index == frame) boxes.push_back(rec.box);
        }
        for (const auto& patch : amfm::extract_fm_patches(fm, boxes, patch_size)) {
            const std::string name = std::to_string(frame) + "_" +
                                     std::to_string(std::lround(patch.box.x)) + "_" +
                                     std::to_string(std::lround(patch.box.y)) + ".pgm";
            output.write(fs::path("patches") / name, pgm(encode_fm(patch.pixels)));
            ++patch_count;
        }
    }
    output.finish(s);

    const double rel_rms = ref_sq > 0.0 ? std::sqrt(err_sq / ref_sq) : 0.0;
    double max_am = 0.0;
    for (const double a : field.amplitude) max_am = std::max(max_am, a);
    out << "amfm: " << image.width << "x" << image.height << ", " << bank.size() << " channels, "
        << patch_count << " patch(es)\n";
    out << "recon_rel_rms=" << std::fixed << std::setprecision(6) << rel_rms << '\n';
    out << "max_amplitude=" << max_am << std::defaultfloat << '\n';
    return kSuccess;
}

// ---------------------------------------------------------------- prototypes

int cmd_prototypes(const Settings& s, std::ostream& out) {
    RunOutput output(s.run_dir(), "prototypes");
    const fs::path path = s.input("samples");
    output.add_input("samples", path);
    const auto samples = read_file<std::vector<prototypes::FeatureSample>>(
        path, [](std::istream& in) { return prototypes::parse_samples(in); });
    if (samples.empty()) throw InputError(path.string() + ": no samples");

    const int k = static_cast<int>(s.integer("k", 1, 1'000'000));
    const int stride = static_cast<int>(s.integer("stride", 1, 1'000'000));
    const auto seed = static_cast<std::uint64_t>(s.integer("seed", 0, std::numeric_limits<long long>::max()));
    const int max_iters = static_cast<int>(s.integer("max_iters", 1, 1'000'000));

    prototypes::PrototypeSet set;
    std::size_t kept = 0;
    try {
        const auto sampled = prototypes::sparse_sample(samples, stride);
        kept = sampled.size();
        const auto clusters = prototypes::kmeans_cluster(sampled, k, seed, max_iters);
        set = prototypes::select_prototypes(sampled, clusters, s.str("participant"));
    } catch (const ArgumentError& e) {
        throw InputError(path.string() + ": " + e.what());
    }

    std::ostringstream text;
    prototypes::write_prototypes(text, set);
    output.write("prototypes.txt", text.str());
    output.finish(s);
    out << "prototypes: " << samples.size() << " sample(s), " << kept << " after sampling, "
        << set.prototype_ids.size() << " prototype(s)\n";
    return kSuccess;
}

// ---------------------------------------------------------------- map

int cmd_map(const Settings& s, std::ostream& out) {
    RunOutput output(s.run_dir(), "map");
    const fs::path dir = s.has("timelines") ? fs::path(s.str("timelines")) : s.run_dir() / "timelines";
    if (!fs::is_directory(dir)) throw InputError("timeline directory not found: " + dir.string());

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no timelines in " + dir.string());

    std::vector<dpt::StateTimeline> timelines;
    for (const auto& f : files) {
        output.add_input("timeline", f);
        timelines.push_back(read_file<dpt::StateTimeline>(
            f, [](std::istream& in) { return dpt::parse_timeline(in); }));
    }

    map::MapSpec spec;
    spec.fps = s.real("fps", 0.0, 1e6, true);
    spec.cell_seconds = s.real("cell_seconds", 0.0, 1e6, true);
    spec.cell_pixel_width = static_cast<int>(s.integer("cell_width", 1, 10000));
    spec.band_height = static_cast<int>(s.integer("band_height", 1, 10000));
    if (s.has("participants")) {
        std::istringstream list(s.str("participants"));
        for (std::string id; std::getline(list, id, ',');) {
            if (!trim(id).empty()) spec.participants.push_back(trim(id));
        }
    } else {
        for (const auto& t : timelines) spec.participants.push_back(t.participant_id);
    }

    RgbImage image;
    std::string csv;
    try {
        image = map::render_map_image(timelines, spec);
        std::vector<dpt::StateTimeline> ordered;
        for (const auto& id : spec.participants) {
            ordered.push_back(*std::find_if(timelines.begin(), timelines.end(),
                                            [&](const auto& t) { return t.participant_id == id; }));
        }
        csv = map::render_timeline_csv(ordered, spec.fps, spec.cell_seconds);
    } catch (const ArgumentError& e) {
        throw InputError(e.what());
    }
    std::ostringstream ppm;
    write_ppm(ppm, image);
    output.write("participation_map.ppm", ppm.str());
    output.write("participation.csv", csv);
    output.finish(s);
    out << "map: " << spec.participants.size() << " participant(s), " << image.width << "x"
        << image.height << " pixels\n";
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Participant tracking, AM-FM features, prototypes and evaluation"};
    app.name(args.empty() ? "ptrack" : fs::path(args.front()).filename().string());
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, std::map<std::string, CLI::Option*>> flag_options;
    std::map<std::string, std::string> config_paths;
    for (const auto& cmd : kCommands) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", config_paths[cmd.name], "key = value configuration file");
        for (const auto& key : cmd.keys) {
            const auto* info = std::find_if(std::begin(kKeys), std::end(kKeys),
                                            [&](const KeyInfo& k) { return key == k.key; });
            flag_options[cmd.name][key] =
                sub->add_option("--" + dashed(key), flag_values[cmd.name][key], info->help);
        }
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsageError;
    }

    const CommandInfo* command = nullptr;
    for (const auto& cmd : kCommands) {
        if (app.got_subcommand(cmd.name)) command = &cmd;
    }

    try {
        std::map<std::string, std::string> values;
        for (const auto& k : kKeys) values[k.key] = k.default_value;
        if (!config_paths[command->name].empty()) {
            for (auto& [k, v] : read_config_file(config_paths[command->name])) values[k] = v;
        }
        if (const char* env = std::getenv(kRunDirEnv); env != nullptr && *env != '\0') {
            values["run_dir"] = env;
        }
        for (const auto& [key, opt] : flag_options[command->name]) {
            if (opt->count() > 0) values[key] = flag_values[command->name][key];
        }
        const Settings settings(values, command->keys);

        const std::string name = command->name;
        if (name == "dpt-run") return cmd_dpt_run(settings, out);
        if (name == "eval") return cmd_eval(settings, out);
        if (name == "amfm") return cmd_amfm(settings, out, err);
        if (name == "prototypes") return cmd_prototypes(settings, out);
        if (name == "map") return cmd_map(settings, out);
        throw std::logic_error("unhandled command " + name);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

}  // namespace ptrack::app
