#include "simulu/trace.hpp"

#include "simulu/alignment.hpp"
#include "simulu/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>

namespace simulu {

using nlohmann::json;

namespace {

struct FieldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const json& field(const json& obj, const char* name) {
    auto it = obj.find(name);
    if (it == obj.end()) {
        throw FieldError(std::string("missing field '") + name + "'");
    }
    return *it;
}

std::int64_t get_int(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_number_integer()) {
        throw FieldError(std::string("field '") + name + "' must be an integer");
    }
    return v.get<std::int64_t>();
}

std::size_t get_count(const json& obj, const char* name) {
    const std::int64_t v = get_int(obj, name);
    if (v < 0) {
        throw FieldError(std::string("field '") + name + "' must be non-negative");
    }
    return static_cast<std::size_t>(v);
}

double get_number(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_number()) {
        throw FieldError(std::string("field '") + name + "' must be a number");
    }
    return v.get<double>();
}

const json& get_array(const json& obj, const char* name) {
    const json& v = field(obj, name);
    if (!v.is_array()) {
        throw FieldError(std::string("field '") + name + "' must be an array");
    }
    return v;
}

json matrix_to_json(const Attention& m) {
    json values = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            values.push_back(m(r, c));
        }
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

Attention matrix_from_json(const json& obj) {
    if (!obj.is_object()) {
        throw FieldError("attention must be an object");
    }
    const auto rows = static_cast<Eigen::Index>(get_count(obj, "rows"));
    const auto cols = static_cast<Eigen::Index>(get_count(obj, "cols"));
    const json& values = get_array(obj, "values");
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) {
        throw FieldError("attention has " + std::to_string(values.size()) + " values, dims say " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    Attention m(rows, cols);
    for (Eigen::Index i = 0; i < rows * cols; ++i) {
        const json& v = values[static_cast<std::size_t>(i)];
        if (!v.is_number()) {
            throw FieldError("attention values must be numbers");
        }
        m(i / cols, i % cols) = v.get<double>();
    }
    try {
        validate_attention(m);
    } catch (const ContractViolation& e) {
        throw FieldError(e.what());
    }
    return m;
}

const char* storage_name(WaveformStorage s) {
    switch (s) {
    case WaveformStorage::Inline:
        return "inline";
    case WaveformStorage::Pcm16Sidecar:
        return "pcm16";
    case WaveformStorage::None:
        return "none";
    }
    return "none";
}

std::int16_t to_pcm16(float v) {
    const long q = std::lround(static_cast<double>(v) * 32768.0);
    return static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
}

std::vector<float> read_sidecar(const std::filesystem::path& file, std::size_t offset, std::size_t count) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw FieldError("cannot open waveform sidecar " + file.string());
    }
    in.seekg(static_cast<std::streamoff>(offset * 2));
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2)) {
            throw FieldError("waveform sidecar " + file.string() + " is truncated");
        }
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(b[0] | (b[1] << 8)));
        out[i] = static_cast<float>(v) / 32768.0f;
    }
    return out;
}

TraceHeader header_from_json(const json& j) {
    TraceHeader h;
    h.version = static_cast<int>(get_int(j, "version"));
    h.spec.sample_rate = get_int(j, "sample_rate");
    h.spec.frame_rate = get_number(j, "frame_rate");
    h.spec.unit_rate = get_number(j, "unit_rate");
    h.spec.reduction_rate = get_int(j, "reduction_rate");
    if (auto it = j.find("policy"); it != j.end()) {
        PolicyConfig p;
        p.cutoff_frames = get_int(*it, "cutoff_frames");
        p.word_history = get_int(*it, "word_history");
        p.segment_size = get_number(*it, "segment_size_s");
        h.policy = p;
    }
    if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
        for (const auto& [k, v] : it->items()) {
            h.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    return h;
}

json header_to_json(const TraceHeader& h) {
    json j{{"kind", "header"},
           {"version", h.version},
           {"sample_rate", h.spec.sample_rate},
           {"frame_rate", h.spec.frame_rate},
           {"unit_rate", h.spec.unit_rate},
           {"reduction_rate", h.spec.reduction_rate}};
    if (h.policy) {
        j["policy"] = json{{"cutoff_frames", h.policy->cutoff_frames},
                           {"word_history", h.policy->word_history},
                           {"segment_size_s", h.policy->segment_size}};
    }
    if (!h.metadata.empty()) {
        j["metadata"] = h.metadata;
    }
    return j;
}

// Per-scan context for cross-line checks.
struct ScanState {
    AdapterSpec spec;
    std::size_t chunks = 0;
    std::filesystem::path base_dir;
};

TraceEvent event_from_json(const json& j, std::size_t ordinal, ScanState& st) {
    const json& kind = field(j, "kind");
    if (!kind.is_string()) {
        throw FieldError("field 'kind' must be a string");
    }
    const std::size_t recorded = get_count(j, "ordinal");
    if (recorded != ordinal) {
        throw FieldError("ordinal " + std::to_string(recorded) + " out of sequence, expected " +
                         std::to_string(ordinal));
    }
    const std::string k = kind.get<std::string>();
    if (k == "chunk") {
        ChunkEvent e;
        e.ordinal = ordinal;
        e.samples = get_int(j, "samples");
        e.duration = get_number(j, "duration_s");
        if (e.samples < 0 || !(e.duration > 0.0) || e.samples != seconds_to_samples(e.duration, st.spec)) {
            throw FieldError("chunk sample count does not match its duration");
        }
        ++st.chunks;
        return e;
    }
    if (k == "transcribe") {
        TranscribeEvent e;
        e.ordinal = ordinal;
        e.chunk_index = get_count(j, "chunk_index");
        e.prefix_len = get_count(j, "prefix_len");
        if (e.chunk_index != st.chunks) {
            throw FieldError("chunk_index " + std::to_string(e.chunk_index) + " but " + std::to_string(st.chunks) +
                             " chunks precede this event");
        }
        for (const json& t : get_array(j, "tokens")) {
            if (!t.is_string()) {
                throw FieldError("tokens must be strings");
            }
            e.result.new_tokens.push_back(t.get<std::string>());
        }
        for (const json& f : get_array(j, "word_start")) {
            if (!f.is_boolean()) {
                throw FieldError("word_start must hold booleans");
            }
            e.result.word_start_flags.push_back(f.get<bool>());
        }
        if (e.result.word_start_flags.size() != e.result.new_tokens.size()) {
            throw FieldError("word_start length differs from token count");
        }
        e.result.speech_text_attention = matrix_from_json(field(j, "attention"));
        if (static_cast<std::size_t>(e.result.speech_text_attention.rows()) != e.result.new_tokens.size()) {
            throw FieldError("attention rows differ from token count");
        }
        return e;
    }
    if (k == "synthesize") {
        SynthesizeEvent e;
        e.ordinal = ordinal;
        e.history_offset = get_count(j, "history_offset");
        e.history_len = get_count(j, "history_len");
        for (const json& u : get_array(j, "units")) {
            if (!u.is_number_integer()) {
                throw FieldError("units must be integers");
            }
            e.output.units.push_back(u.get<std::int32_t>());
        }
        e.output.text_unit_attention = matrix_from_json(field(j, "attention"));
        const auto& att = e.output.text_unit_attention;
        if (static_cast<std::size_t>(att.rows()) != e.output.units.size() ||
            (att.rows() > 0 && static_cast<std::size_t>(att.cols()) != e.history_len)) {
            throw FieldError("attention dims differ from units x history_len");
        }
        const std::size_t expected = e.output.units.size() * static_cast<std::size_t>(st.spec.reduction_rate);
        const json& wf = field(j, "waveform");
        const json& storage = field(wf, "storage");
        if (storage == "inline") {
            e.storage = WaveformStorage::Inline;
            const json& values = get_array(wf, "values");
            if (values.size() != expected) {
                throw FieldError("inline waveform has " + std::to_string(values.size()) + " samples, expected " +
                                 std::to_string(expected));
            }
            e.output.waveform.reserve(expected);
            for (const json& v : values) {
                if (!v.is_number()) {
                    throw FieldError("waveform values must be numbers");
                }
                e.output.waveform.push_back(v.get<float>());
            }
        } else if (storage == "pcm16") {
            e.storage = WaveformStorage::Pcm16Sidecar;
            const json& file = field(wf, "file");
            if (!file.is_string()) {
                throw FieldError("waveform file must be a string");
            }
            const std::size_t count = get_count(wf, "count");
            if (count != expected) {
                throw FieldError("sidecar waveform count " + std::to_string(count) + ", expected " +
                                 std::to_string(expected));
            }
            e.output.waveform = read_sidecar(st.base_dir / file.get<std::string>(), get_count(wf, "offset"), count);
        } else if (storage == "none") {
            e.storage = WaveformStorage::None;
            e.output.waveform.assign(expected, 0.0f);
        } else {
            throw FieldError("unknown waveform storage");
        }
        return e;
    }
    throw FieldError("unknown event kind '" + k + "'");
}

} // namespace

TraceWriter::TraceWriter(const std::filesystem::path& path, const TraceHeader& header, WaveformStorage storage)
    : file_(path), out_(&file_), storage_(storage), reduction_rate_(header.spec.reduction_rate) {
    if (!file_) {
        throw std::runtime_error("cannot write trace " + path.string());
    }
    if (storage_ == WaveformStorage::Pcm16Sidecar) {
        const std::filesystem::path side = path.string() + ".pcm";
        sidecar_.open(side, std::ios::binary);
        if (!sidecar_) {
            throw std::runtime_error("cannot write waveform sidecar " + side.string());
        }
        sidecar_name_ = side.filename().string();
    }
    write_line(header_to_json(header).dump());
}

TraceWriter::TraceWriter(std::ostream& out, const TraceHeader& header, WaveformStorage storage)
    : out_(&out), storage_(storage), reduction_rate_(header.spec.reduction_rate) {
    if (storage_ == WaveformStorage::Pcm16Sidecar) {
        throw std::invalid_argument("sidecar waveform storage needs a file-backed trace");
    }
    write_line(header_to_json(header).dump());
}

void TraceWriter::write_line(const std::string& line) { *out_ << line << '\n'; }

void TraceWriter::flush() {
    out_->flush();
    if (sidecar_.is_open()) {
        sidecar_.flush();
    }
}

void TraceWriter::write_chunk(const AudioChunk& chunk) {
    write_event(ChunkEvent{0, static_cast<std::int64_t>(chunk.samples.size()), chunk.duration});
}

void TraceWriter::write_transcribe(std::size_t prefix_len, const TranscribeResult& result) {
    write_event(TranscribeEvent{0, chunks_, prefix_len, result});
}

void TraceWriter::write_synthesize(const TextHistory& history, const SynthesisOutput& output) {
    write_event(SynthesizeEvent{0, history.dropped_tokens(), history.size(), output, storage_});
}

void TraceWriter::write_event(const TraceEvent& event) {
    json j;
    if (const auto* c = std::get_if<ChunkEvent>(&event)) {
        j = json{{"kind", "chunk"}, {"ordinal", ordinal_}, {"samples", c->samples}, {"duration_s", c->duration}};
        ++chunks_;
    } else if (const auto* t = std::get_if<TranscribeEvent>(&event)) {
        j = json{{"kind", "transcribe"},
                 {"ordinal", ordinal_},
                 {"chunk_index", t->chunk_index},
                 {"prefix_len", t->prefix_len},
                 {"tokens", t->result.new_tokens},
                 {"word_start", t->result.word_start_flags},
                 {"attention", matrix_to_json(t->result.speech_text_attention)}};
    } else {
        const auto& s = std::get<SynthesizeEvent>(event);
        json wf{{"storage", storage_name(storage_)}};
        if (storage_ == WaveformStorage::Inline) {
            wf["values"] = s.output.waveform;
        } else if (storage_ == WaveformStorage::Pcm16Sidecar) {
            for (float v : s.output.waveform) {
                const auto q = static_cast<std::uint16_t>(to_pcm16(v));
                const char b[2] = {static_cast<char>(q & 0xff), static_cast<char>(q >> 8)};
                sidecar_.write(b, 2);
            }
            wf["file"] = sidecar_name_;
            wf["offset"] = sidecar_offset_;
            wf["count"] = s.output.waveform.size();
            sidecar_offset_ += s.output.waveform.size();
        }
        j = json{{"kind", "synthesize"},
                 {"ordinal", ordinal_},
                 {"history_offset", s.history_offset},
                 {"history_len", s.history_len},
                 {"units", s.output.units},
                 {"attention", matrix_to_json(s.output.text_unit_attention)},
                 {"waveform", std::move(wf)}};
    }
    ++ordinal_;
    write_line(j.dump());
}

TraceScan scan_trace(std::istream& in, const std::filesystem::path& base_dir) {
    TraceScan scan;
    ScanState st;
    st.base_dir = base_dir;
    std::string line;
    std::size_t lineno = 0;
    std::size_t next_ordinal = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            scan.findings.push_back({lineno, std::string("malformed record: ") + e.what()});
            continue;
        }
        if (!j.is_object()) {
            scan.findings.push_back({lineno, "record is not an object"});
            continue;
        }
        try {
            if (!scan.header) {
                if (field(j, "kind") != "header") {
                    throw FieldError("first record must be the header");
                }
                TraceHeader h = header_from_json(j);
                if (h.version != kTraceVersion) {
                    scan.header = h;
                    scan.findings.push_back({lineno, "unsupported trace version " + std::to_string(h.version)});
                    return scan;
                }
                try {
                    h.spec.validate();
                } catch (const ConfigError& e) {
                    throw FieldError(e.what());
                }
                st.spec = h.spec;
                scan.header = std::move(h);
                continue;
            }
            const std::size_t ordinal = next_ordinal++;
            scan.events.push_back(event_from_json(j, ordinal, st));
            scan.event_lines.push_back(lineno);
        } catch (const FieldError& e) {
            scan.findings.push_back({lineno, e.what()});
        } catch (const json::exception& e) {
            scan.findings.push_back({lineno, e.what()});
        }
    }
    if (!scan.header) {
        scan.findings.push_back({lineno == 0 ? 1 : lineno, "missing header record"});
    }
    return scan;
}

Trace read_trace(std::istream& in, const std::filesystem::path& base_dir) {
    TraceScan scan = scan_trace(in, base_dir);
    if (scan.header && scan.header->version != kTraceVersion) {
        throw TraceVersionError("trace version " + std::to_string(scan.header->version) + " is not supported (expected " +
                                std::to_string(kTraceVersion) + ")");
    }
    if (!scan.findings.empty()) {
        throw TraceParseError(scan.findings.front().line, scan.findings.front().message);
    }
    return Trace{std::move(*scan.header), std::move(scan.events)};
}

Trace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open trace " + path.string());
    }
    return read_trace(in, path.parent_path());
}

void write_trace(const std::filesystem::path& path, const Trace& trace, WaveformStorage storage) {
    TraceWriter writer(path, trace.header, storage);
    for (const TraceEvent& e : trace.events) {
        writer.write_event(e);
    }
    writer.flush();
}

TranscribeResult RecordingAdapter::transcribe(const SpeechHistory& speech, const TextHistory& prefix) {
    TranscribeResult r = inner_->transcribe(speech, prefix);
    writer_->write_transcribe(prefix.size(), r);
    return r;
}

SynthesisOutput RecordingAdapter::synthesize(const TextHistory& text) {
    SynthesisOutput out = inner_->synthesize(text);
    writer_->write_synthesize(text, out);
    return out;
}

ReplayAdapter::ReplayAdapter(Trace trace) : trace_(std::move(trace)) {
    if (trace_.header.version != kTraceVersion) {
        throw TraceVersionError("trace version " + std::to_string(trace_.header.version) + " is not supported");
    }
    trace_.header.spec.validate();
}

std::optional<AudioChunk> ReplayAdapter::next_chunk() {
    if (exhausted()) {
        return std::nullopt;
    }
    const auto* c = std::get_if<ChunkEvent>(&trace_.events[cursor_]);
    if (c == nullptr) {
        return std::nullopt;
    }
    ++cursor_;
    ++chunks_;
    samples_ += c->samples;
    AudioChunk chunk;
    chunk.samples.assign(static_cast<std::size_t>(c->samples), 0.0f);
    chunk.duration = c->duration;
    return chunk;
}

TranscribeResult ReplayAdapter::transcribe(const SpeechHistory& speech, const TextHistory& prefix) {
    if (exhausted()) {
        throw TraceDesyncError("trace exhausted, expected a transcribe event");
    }
    const auto* t = std::get_if<TranscribeEvent>(&trace_.events[cursor_]);
    if (t == nullptr) {
        throw TraceDesyncError("event " + std::to_string(cursor_) + " is not a transcribe event");
    }
    if (t->chunk_index != chunks_ || t->prefix_len != prefix.size() || speech.end_sample() != samples_) {
        throw TraceDesyncError("transcribe event " + std::to_string(cursor_) + " recorded for chunk " +
                               std::to_string(t->chunk_index) + " prefix " + std::to_string(t->prefix_len) +
                               ", replayed at chunk " + std::to_string(chunks_) + " prefix " +
                               std::to_string(prefix.size()));
    }
    ++cursor_;
    return t->result;
}

SynthesisOutput ReplayAdapter::synthesize(const TextHistory& text) {
    if (exhausted()) {
        throw TraceDesyncError("trace exhausted, expected a synthesize event");
    }
    const auto* s = std::get_if<SynthesizeEvent>(&trace_.events[cursor_]);
    if (s == nullptr) {
        throw TraceDesyncError("event " + std::to_string(cursor_) + " is not a synthesize event");
    }
    if (s->history_len != text.size()) {
        throw TraceDesyncError("synthesize event " + std::to_string(cursor_) + " recorded for " +
                               std::to_string(s->history_len) + " history tokens, replayed with " +
                               std::to_string(text.size()));
    }
    ++cursor_;
    return s->output;
}

} // namespace simulu
