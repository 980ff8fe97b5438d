#ifndef CGSMASK_MODELADAPTER_HPP
#define CGSMASK_MODELADAPTER_HPP

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cgsmask/core.hpp"
#include "cgsmask/metrics.hpp"

namespace cgsmask {

inline constexpr int kProtocolVersion = 1;

struct ExternalModelOptions {
  std::chrono::milliseconds handshake_timeout{10'000};
  std::chrono::milliseconds predict_timeout{30'000};
  /// When set, the task announced by the child must match.
  std::optional<TaskKind> expected_task;
};

/// Black-box model served by a child process over line-delimited JSON.
///
/// Handshake: we send {"type":"hello","version":1}; the child answers
/// {"type":"hello","version":1,"task":"regression"|"classification"}.
/// Each prediction is one {"type":"predict","d":D,"t":T,"values":[[...],...]}
/// line (one inner array per feature) answered by one
/// {"type":"prediction","values":[...]} line. One request is in flight at a
/// time; a child that dies or stalls is killed and reported as ProtocolError.
class ExternalModel final : public BlackBoxModel {
 public:
  explicit ExternalModel(std::string command, ExternalModelOptions options = {});
  ~ExternalModel() override;

  ExternalModel(const ExternalModel&) = delete;
  ExternalModel& operator=(const ExternalModel&) = delete;

  ModelOutput predict(const TimeSeries& x) const override;
  TaskKind task() const override { return task_; }

  bool alive() const;
  // also the process group id of the child and anything it spawns
  pid_t pid() const { return pid_; }
  const std::string& command() const { return command_; }

 private:
  void write_line(const std::string& line, std::chrono::steady_clock::time_point deadline) const;
  std::string read_line(std::chrono::steady_clock::time_point deadline) const;
  [[noreturn]] void fail(const std::string& what) const;
  void terminate() const;

  std::string command_;
  ExternalModelOptions options_;
  TaskKind task_ = TaskKind::Regression;
  mutable pid_t pid_ = -1;
  mutable int to_child_ = -1;
  mutable int from_child_ = -1;
  mutable std::string buffer_;
  mutable bool dead_ = false;
  mutable std::mutex mutex_;
};

std::unique_ptr<ExternalModel> spawn_external_model(const std::string& command, std::optional<TaskKind> task = {},
                                                    ExternalModelOptions options = {});

/// Several ExternalModel handles of the same command; concurrent callers each
/// borrow an idle handle.
class ExternalModelPool final : public BlackBoxModel {
 public:
  ExternalModelPool(const std::string& command, int size, ExternalModelOptions options = {});

  ModelOutput predict(const TimeSeries& x) const override;
  TaskKind task() const override { return handles_.front()->task(); }
  bool concurrent_safe() const override { return true; }
  std::size_t size() const { return handles_.size(); }

 private:
  std::vector<std::unique_ptr<ExternalModel>> handles_;
  mutable std::vector<bool> busy_;
  mutable std::mutex mutex_;
  mutable std::condition_variable idle_;
};

nlohmann::json predict_request(const TimeSeries& x);
ModelOutput parse_prediction(const std::string& line, TaskKind task);

// ---- file formats -------------------------------------------------------

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

struct SeriesFile {
  TimeSeries series;
  std::vector<std::string> labels;
};

/// CSV with header "feature,t1,...,tT" and one row per feature: label, then T values.
SeriesFile read_series_file(const std::filesystem::path& path);
SeriesFile parse_series_csv(const std::string& text);
TimeSeries read_series_csv(const std::filesystem::path& path);
std::string series_to_csv(const TimeSeries& x, const std::vector<std::string>& labels = {});
void write_series_csv(const std::filesystem::path& path, const TimeSeries& x,
                      const std::vector<std::string>& labels = {});

using AnyMask = std::variant<StripMask, DenseMask>;

/// Matrix view of either mask representation.
Matrix mask_values(const AnyMask& mask);

/// {"type":"strip"|"dense","d":D,"t":T,"strips":[{"feature","start","length"}],"dense":[[...]]}
/// with 1-based strip indices; "strips" appears only for strip masks.
nlohmann::json mask_to_json(const AnyMask& mask);
AnyMask mask_from_json(const nlohmann::json& j);
void write_mask_json(const AnyMask& mask, const std::filesystem::path& path);
AnyMask read_mask_json(const std::filesystem::path& path);

/// {"salient":[[d,t],...]} with 1-based indices.
nlohmann::json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j, Index features, Index steps);
void write_ground_truth_json(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth read_ground_truth_json(const std::filesystem::path& path, Index features, Index steps);

}  // namespace cgsmask

#endif  // CGSMASK_MODELADAPTER_HPP
