#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "segroute/models.hpp"

namespace segroute {

/// A model served by a child process speaking newline-delimited JSON:
///
///   -> {"op":"classify","volume":"/abs/in.svol"}     <- {"ok":true,"scores":{...}}
///   -> {"op":"segment","volume":"...","output":"..."} <- {"ok":true}
///   -> {"op":"shutdown"}                              <- {"ok":true}, then exit
///   any failure                                       <- {"ok":false,"error":"..."}
struct ExternalModelSpec {
    std::vector<std::string> command;      ///< argv; command[0] is looked up on PATH
    std::filesystem::path working_directory; ///< empty = inherit
    std::vector<ClassLabel> labels;        ///< declared labels, required for classifiers
    std::chrono::milliseconds timeout{120'000};
    std::filesystem::path scratch_directory; ///< where request volumes go; empty = system temp
};

/// Owns one child process. Calls are serialized; the process is started on
/// first use and reused until shutdown() or destruction.
class ExternalModelClient {
public:
    explicit ExternalModelClient(ExternalModelSpec spec);
    ~ExternalModelClient();
    ExternalModelClient(const ExternalModelClient&) = delete;
    ExternalModelClient& operator=(const ExternalModelClient&) = delete;

    /// Sends one request and returns the parsed response, which has ok=true.
    /// Throws SpawnError, ProtocolError, ModelReportedError or ModelTimeoutError.
    nlohmann::json call(const nlohmann::json& request);

    /// Sends {"op":"shutdown"} and reaps the child. Safe to call repeatedly.
    void shutdown();

    const ExternalModelSpec& spec() const { return spec_; }
    /// Fresh absolute path in the scratch directory.
    std::filesystem::path scratch_path(const std::string& suffix);

private:
    void start();
    void kill_child();
    void write_line(const std::string& line);
    std::string read_line();

    ExternalModelSpec spec_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::filesystem::path scratch_;
    unsigned long counter_ = 0;
};

class ExternalClassifier final : public Classifier {
public:
    explicit ExternalClassifier(std::shared_ptr<ExternalModelClient> client);
    ClassScores classify(const Volume& preprocessed, std::string_view scan_id = {}) const override;
    std::vector<ClassLabel> labels() const override { return client_->spec().labels; }

private:
    std::shared_ptr<ExternalModelClient> client_;
};

class ExternalSegmenter final : public Segmenter {
public:
    explicit ExternalSegmenter(std::shared_ptr<ExternalModelClient> client) : client_(std::move(client)) {}
    Volume segment(const Volume& windowed) const override;

private:
    std::shared_ptr<ExternalModelClient> client_;
};

} // namespace segroute
