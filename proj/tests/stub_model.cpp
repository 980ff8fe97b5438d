// Line-JSON model used by the adapter tests. The first argument picks a behaviour.

#include <csignal>
#include <iostream>
#include <string>
#include <thread>

#include <unistd.h>

#include <json.hpp>

using nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";
  if (mode == "exit_before_hello") return 0;

  std::string line;
  if (!std::getline(std::cin, line)) return 1;
  const json hello = json::parse(line);
  if (hello.value("type", "") != "hello") return 1;

  const bool classify = mode == "classify" || mode == "bad_probability";
  json reply = {{"type", "hello"}, {"version", mode == "version2" ? 2 : 1},
                {"task", classify ? "classification" : "regression"}};
  if (mode == "silent") std::this_thread::sleep_for(std::chrono::hours(1));
  std::cout << reply.dump() << std::endl;

  long count = 0;
  while (std::getline(std::cin, line)) {
    const json req = json::parse(line);
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (mode == "die_on_predict") raise(SIGKILL);
    if (mode == "garbage") {
      std::cout << "not json" << std::endl;
      continue;
    }

    json values = json::array();
    if (mode == "echo") {
      for (const auto& row : req["values"])
        for (const auto& v : row) values.push_back(v.get<double>());
    } else if (mode == "sum") {
      double s = 0.0;
      for (const auto& row : req["values"])
        for (const auto& v : row) s += v.get<double>() * v.get<double>();
      values.push_back(s);
    } else if (mode == "constant") {
      values.push_back(0.0);
    } else if (mode == "classify") {
      values = {0.6, 0.4};
    } else if (mode == "bad_probability") {
      values = {0.6, 0.6};
    } else if (mode == "counter") {
      values.push_back(static_cast<double>(count));
    }
    ++count;
    std::cout << json{{"type", "prediction"}, {"values", values}}.dump() << std::endl;
  }
  return 0;
}
