#pragma once

// Line-delimited JSON traces of model calls, and the adapters that record and
// replay them. Line 1 is a header carrying the format version and the adapter
// rates; every further line is one event:
//
//   {"kind":"chunk","ordinal":0,"samples":8000,"duration_s":0.5}
//   {"kind":"transcribe","ordinal":1,"chunk_index":1,"prefix_len":0,
//    "tokens":[...],"word_start":[...],"attention":{"rows":R,"cols":C,"values":[...]}}
//   {"kind":"synthesize","ordinal":2,"history_offset":0,"history_len":N,
//    "units":[...],"attention":{...},"waveform":{"storage":"inline","values":[...]}}
//
// Waveforms may instead live in a raw little-endian 16-bit PCM sidecar
// ({"storage":"pcm16","file":"x.pcm","offset":o,"count":c}) or be omitted
// ({"storage":"none"}, replayed as silence). Matrices are row-major; doubles
// are written in shortest round-trip form.

#include "simulu/adapter.hpp"
#include "simulu/timeline.hpp"

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace simulu {

inline constexpr int kTraceVersion = 1;

enum class WaveformStorage { Inline, Pcm16Sidecar, None };

struct TraceHeader {
    int version = kTraceVersion;
    AdapterSpec spec;
    std::optional<PolicyConfig> policy;
    std::map<std::string, std::string> metadata;
};

struct ChunkEvent {
    std::size_t ordinal = 0;
    std::int64_t samples = 0;
    double duration = 0.0;
};

struct TranscribeEvent {
    std::size_t ordinal = 0;
    std::size_t chunk_index = 0; // chunks ingested when the call was made
    std::size_t prefix_len = 0;
    TranscribeResult result;
};

struct SynthesizeEvent {
    std::size_t ordinal = 0;
    std::size_t history_offset = 0; // stream-global index of the first history token
    std::size_t history_len = 0;
    SynthesisOutput output;
    WaveformStorage storage = WaveformStorage::Inline;
};

using TraceEvent = std::variant<ChunkEvent, TranscribeEvent, SynthesizeEvent>;

struct Trace {
    TraceHeader header;
    std::vector<TraceEvent> events;
};

struct TraceFinding {
    std::size_t line = 0;
    std::string message;
};

// Result of a lenient schema walk: every problem is collected with its line.
struct TraceScan {
    std::optional<TraceHeader> header;
    std::vector<TraceEvent> events;
    std::vector<std::size_t> event_lines;
    std::vector<TraceFinding> findings;
};

class TraceWriter {
public:
    // Sidecar storage puts waveforms next to `path` as "<path>.pcm".
    TraceWriter(const std::filesystem::path& path, const TraceHeader& header,
                WaveformStorage storage = WaveformStorage::Inline);
    // Stream variant; sidecar storage is not available.
    TraceWriter(std::ostream& out, const TraceHeader& header, WaveformStorage storage = WaveformStorage::Inline);

    void write_chunk(const AudioChunk& chunk);
    void write_transcribe(std::size_t prefix_len, const TranscribeResult& result);
    void write_synthesize(const TextHistory& history, const SynthesisOutput& output);
    void write_event(const TraceEvent& event);
    void flush();

    std::size_t chunks_written() const { return chunks_; }

private:
    void write_line(const std::string& line);

    std::ofstream file_;
    std::ostream* out_;
    std::ofstream sidecar_;
    std::string sidecar_name_;
    std::size_t sidecar_offset_ = 0;
    WaveformStorage storage_;
    std::int64_t reduction_rate_;
    std::size_t ordinal_ = 0;
    std::size_t chunks_ = 0;
};

// Strict readers: throw TraceParseError (with line) or TraceVersionError.
// `base_dir` resolves sidecar file names.
Trace read_trace(std::istream& in, const std::filesystem::path& base_dir = {});
Trace read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const Trace& trace,
                 WaveformStorage storage = WaveformStorage::Inline);

TraceScan scan_trace(std::istream& in, const std::filesystem::path& base_dir = {});

// Passes every call through to `inner` and records it.
class RecordingAdapter final : public ModelAdapter {
public:
    RecordingAdapter(ModelAdapter& inner, TraceWriter& writer) : inner_(&inner), writer_(&writer) {}

    AdapterSpec spec() const override { return inner_->spec(); }
    TranscribeResult transcribe(const SpeechHistory& speech, const TextHistory& prefix) override;
    SynthesisOutput synthesize(const TextHistory& text) override;

private:
    ModelAdapter* inner_;
    TraceWriter* writer_;
};

// Strict sequential replay. Each call must match the next recorded event
// (kind, chunk index, prefix length, history length) or TraceDesyncError is
// thrown. Chunks are replayed as silence of the recorded length.
class ReplayAdapter final : public ModelAdapter {
public:
    explicit ReplayAdapter(Trace trace);

    AdapterSpec spec() const override { return trace_.header.spec; }
    TranscribeResult transcribe(const SpeechHistory& speech, const TextHistory& prefix) override;
    SynthesisOutput synthesize(const TextHistory& text) override;

    // The next chunk if the cursor is on a chunk event.
    std::optional<AudioChunk> next_chunk();
    bool exhausted() const { return cursor_ >= trace_.events.size(); }
    const TraceHeader& header() const { return trace_.header; }

private:
    Trace trace_;
    std::size_t cursor_ = 0;
    std::size_t chunks_ = 0;
    std::int64_t samples_ = 0;
};

} // namespace simulu
