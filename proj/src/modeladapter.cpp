#include "cgsmask/modeladapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

namespace cgsmask {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1'000'000));
}

}  // namespace

ExternalModel::ExternalModel(std::string command, ExternalModelOptions options)
    : command_(std::move(command)), options_(options) {
  ignore_sigpipe();
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw ProtocolError(std::string("pipe failed: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError(std::string("pipe failed: ") + std::strerror(errno));
  }

  pid_ = ::fork();
  if (pid_ < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    // own process group so a kill reaches whatever the shell spawned
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid_, pid_);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  try {
    const auto deadline = Clock::now() + options_.handshake_timeout;
    write_line(json{{"type", "hello"}, {"version", kProtocolVersion}}.dump(), deadline);
    const std::string line = read_line(deadline);
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      fail("malformed hello reply: " + line);
    }
    if (!reply.is_object() || reply.value("type", "") != "hello") fail("expected hello reply, got: " + line);
    if (!reply.contains("version") || !reply["version"].is_number_integer()) fail("hello reply lacks a version");
    const int version = reply["version"].get<int>();
    if (version != kProtocolVersion) {
      fail("protocol version mismatch: child speaks " + std::to_string(version) + ", expected " +
           std::to_string(kProtocolVersion));
    }
    if (!reply.contains("task") || !reply["task"].is_string()) fail("hello reply lacks a task");
    const std::string task = reply["task"].get<std::string>();
    if (task == "regression") {
      task_ = TaskKind::Regression;
    } else if (task == "classification") {
      task_ = TaskKind::Classification;
    } else {
      fail("unknown task in hello reply: " + task);
    }
    if (options_.expected_task && *options_.expected_task != task_) {
      fail("child announced task " + task + ", expected " + to_string(*options_.expected_task));
    }
  } catch (...) {
    terminate();
    throw;
  }
}

ExternalModel::~ExternalModel() { terminate(); }

void ExternalModel::terminate() const {
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    // closing stdin asks the child to exit; give it a moment before killing
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }
  dead_ = true;
}

void ExternalModel::fail(const std::string& what) const {
  terminate();
  throw ProtocolError("external model '" + command_ + "': " + what);
}

bool ExternalModel::alive() const {
  std::lock_guard lock(mutex_);
  return !dead_ && pid_ > 0 && ::waitpid(pid_, nullptr, WNOHANG) == 0;
}

void ExternalModel::write_line(const std::string& line, Clock::time_point deadline) const {
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    pollfd pfd{to_child_, POLLOUT, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) fail("timed out writing request");
    if (ready < 0 || (pfd.revents & (POLLERR | POLLHUP))) fail("child closed its input");
    const ssize_t n = ::write(to_child_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(std::string("write failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalModel::read_line(Clock::time_point deadline) const {
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
    if (ready < 0 && errno == EINTR) continue;
    if (ready == 0) fail("timed out waiting for reply");
    if (ready < 0) fail(std::string("poll failed: ") + std::strerror(errno));
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(std::string("read failed: ") + std::strerror(errno));
    }
    if (n == 0) fail("child exited before replying");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

json predict_request(const TimeSeries& x) {
  json rows = json::array();
  for (Index d = 0; d < x.features(); ++d) {
    json row = json::array();
    for (Index t = 0; t < x.steps(); ++t) row.push_back(x(d, t));
    rows.push_back(std::move(row));
  }
  return json{{"type", "predict"}, {"d", x.features()}, {"t", x.steps()}, {"values", std::move(rows)}};
}

ModelOutput parse_prediction(const std::string& line, TaskKind task) {
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("malformed prediction reply: " + line);
  }
  if (!reply.is_object() || reply.value("type", "") != "prediction") {
    throw ProtocolError("expected prediction reply, got: " + line);
  }
  const auto it = reply.find("values");
  if (it == reply.end() || !it->is_array() || it->empty()) throw ProtocolError("prediction reply lacks values");
  ModelOutput y;
  y.task = task;
  y.values.resize(static_cast<Index>(it->size()));
  for (std::size_t k = 0; k < it->size(); ++k) {
    if (!(*it)[k].is_number()) throw ProtocolError("prediction value is not a number");
    y.values[static_cast<Index>(k)] = (*it)[k].get<double>();
  }
  validate_output(y);
  return y;
}

ModelOutput ExternalModel::predict(const TimeSeries& x) const {
  std::lock_guard lock(mutex_);
  if (dead_) throw ProtocolError("external model '" + command_ + "' is no longer running");
  const auto deadline = Clock::now() + options_.predict_timeout;
  write_line(predict_request(x).dump(), deadline);
  return parse_prediction(read_line(deadline), task_);
}

std::unique_ptr<ExternalModel> spawn_external_model(const std::string& command, std::optional<TaskKind> task,
                                                    ExternalModelOptions options) {
  if (task) options.expected_task = task;
  return std::make_unique<ExternalModel>(command, options);
}

ExternalModelPool::ExternalModelPool(const std::string& command, int size, ExternalModelOptions options) {
  if (size < 1) throw ConfigError("model pool size must be >= 1");
  for (int k = 0; k < size; ++k) {
    handles_.push_back(std::make_unique<ExternalModel>(command, options));
    if (handles_.back()->task() != handles_.front()->task()) {
      throw ProtocolError("external model instances announced different tasks");
    }
  }
  busy_.assign(handles_.size(), false);
}

ModelOutput ExternalModelPool::predict(const TimeSeries& x) const {
  std::size_t slot = 0;
  {
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [&] {
      for (std::size_t k = 0; k < busy_.size(); ++k) {
        if (!busy_[k]) {
          slot = k;
          return true;
        }
      }
      return false;
    });
    busy_[slot] = true;
  }
  auto release = [&] {
    {
      std::lock_guard lock(mutex_);
      busy_[slot] = false;
    }
    idle_.notify_one();
  };
  try {
    ModelOutput y = handles_[slot]->predict(x);
    release();
    return y;
  } catch (...) {
    release();
    throw;
  }
}

// ---- file formats -------------------------------------------------------

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t\r");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != last) {
    throw IoError("line " + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
  }
  if (!std::isfinite(v)) throw IoError("line " + std::to_string(line_no) + ": non-finite cell '" + cell + "'");
  return v;
}

}  // namespace

SeriesFile parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw IoError("series CSV is empty");
  if (header.front() != "feature" || header.size() < 2) {
    throw IoError("line " + std::to_string(line_no) + ": header must be 'feature,t1,...,tT'");
  }
  const std::size_t steps = header.size() - 1;

  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != steps + 1) {
      throw IoError("line " + std::to_string(line_no) + ": ragged row with " + std::to_string(cells.size() - 1) +
                    " values, expected " + std::to_string(steps));
    }
    labels.push_back(cells.front());
    std::vector<double> row;
    row.reserve(steps);
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_cell(cells[k], line_no));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("series CSV has no feature rows");

  Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(steps));
  for (std::size_t d = 0; d < rows.size(); ++d) {
    for (std::size_t t = 0; t < steps; ++t) values(static_cast<Index>(d), static_cast<Index>(t)) = rows[d][t];
  }
  return SeriesFile{TimeSeries(std::move(values)), std::move(labels)};
}

SeriesFile read_series_file(const std::filesystem::path& path) { return parse_series_csv(read_file(path)); }

TimeSeries read_series_csv(const std::filesystem::path& path) { return read_series_file(path).series; }

std::string series_to_csv(const TimeSeries& x, const std::vector<std::string>& labels) {
  if (!labels.empty() && static_cast<Index>(labels.size()) != x.features()) {
    throw DimensionError("label count does not match feature count");
  }
  std::string out = "feature";
  for (Index t = 0; t < x.steps(); ++t) out += ",t" + std::to_string(t + 1);
  out += '\n';
  for (Index d = 0; d < x.features(); ++d) {
    out += labels.empty() ? "f" + std::to_string(d + 1) : labels[static_cast<std::size_t>(d)];
    for (Index t = 0; t < x.steps(); ++t) out += "," + format_double(x(d, t));
    out += '\n';
  }
  return out;
}

void write_series_csv(const std::filesystem::path& path, const TimeSeries& x, const std::vector<std::string>& labels) {
  write_file_atomic(path, series_to_csv(x, labels));
}

Matrix mask_values(const AnyMask& mask) {
  return std::visit(
      [](const auto& m) -> Matrix {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, StripMask>) {
          return m.dense().template cast<double>();
        } else {
          return m.values();
        }
      },
      mask);
}

json mask_to_json(const AnyMask& mask) {
  json j;
  const Matrix values = mask_values(mask);
  const bool strip = std::holds_alternative<StripMask>(mask);
  j["type"] = strip ? "strip" : "dense";
  j["d"] = values.rows();
  j["t"] = values.cols();
  if (strip) {
    json strips = json::array();
    for (const auto& s : std::get<StripMask>(mask).strips()) {
      strips.push_back(json{{"feature", s.feature + 1}, {"start", s.start + 1}, {"length", s.length}});
    }
    j["strips"] = std::move(strips);
  }
  json rows = json::array();
  for (Index d = 0; d < values.rows(); ++d) {
    json row = json::array();
    for (Index t = 0; t < values.cols(); ++t) {
      if (strip) {
        row.push_back(static_cast<int>(values(d, t)));
      } else {
        row.push_back(values(d, t));
      }
    }
    rows.push_back(std::move(row));
  }
  j["dense"] = std::move(rows);
  return j;
}

AnyMask mask_from_json(const json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    const auto D = j.at("d").get<Index>();
    const auto T = j.at("t").get<Index>();
    if (type == "strip") {
      std::vector<Strip> strips;
      for (const auto& s : j.at("strips")) {
        strips.push_back(
            Strip{s.at("feature").get<Index>() - 1, s.at("start").get<Index>() - 1, s.at("length").get<Index>()});
      }
      StripMask mask(std::move(strips), D, T);
      if (j.contains("dense")) {
        const AnyMask dense_part = mask_from_json(json{{"type", "dense"}, {"d", D}, {"t", T}, {"dense", j["dense"]}});
        if (std::get<DenseMask>(dense_part).values() != mask.dense().cast<double>()) {
          throw IoError("strip mask JSON: dense matrix disagrees with strips");
        }
      }
      return mask;
    }
    if (type != "dense") throw IoError("mask JSON: unknown type '" + type + "'");
    const json& rows = j.at("dense");
    if (!rows.is_array() || static_cast<Index>(rows.size()) != D) throw IoError("mask JSON: dense has wrong row count");
    Matrix values(D, T);
    for (Index d = 0; d < D; ++d) {
      const json& row = rows[static_cast<std::size_t>(d)];
      if (!row.is_array() || static_cast<Index>(row.size()) != T) throw IoError("mask JSON: ragged dense row");
      for (Index t = 0; t < T; ++t) values(d, t) = row[static_cast<std::size_t>(t)].get<double>();
    }
    return DenseMask(std::move(values));
  } catch (const json::exception& e) {
    throw IoError(std::string("mask JSON: ") + e.what());
  }
}

void write_mask_json(const AnyMask& mask, const std::filesystem::path& path) {
  write_file_atomic(path, mask_to_json(mask).dump() + "\n");
}

AnyMask read_mask_json(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
  return mask_from_json(j);
}

json ground_truth_to_json(const GroundTruth& gt) {
  json salient = json::array();
  for (const auto& [d, t] : gt.salient()) salient.push_back(json::array({d + 1, t + 1}));
  return json{{"salient", std::move(salient)}};
}

GroundTruth ground_truth_from_json(const json& j, Index features, Index steps) {
  try {
    std::vector<std::pair<Index, Index>> salient;
    for (const auto& p : j.at("salient")) {
      if (!p.is_array() || p.size() != 2) throw IoError("ground truth JSON: entries must be [d,t] pairs");
      salient.emplace_back(p[0].get<Index>() - 1, p[1].get<Index>() - 1);
    }
    return GroundTruth(std::move(salient), features, steps);
  } catch (const json::exception& e) {
    throw IoError(std::string("ground truth JSON: ") + e.what());
  }
}

void write_ground_truth_json(const GroundTruth& gt, const std::filesystem::path& path) {
  write_file_atomic(path, ground_truth_to_json(gt).dump() + "\n");
}

GroundTruth read_ground_truth_json(const std::filesystem::path& path, Index features, Index steps) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + path.string() + ": " + e.what());
  }
  return ground_truth_from_json(j, features, steps);
}

}  // namespace cgsmask
