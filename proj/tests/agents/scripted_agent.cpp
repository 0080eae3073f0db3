// Protocol v1 agent for channel tests.
//
//   scripted_agent <mode> [seed] [steps_file]
//
// modes: random, stop, invalid-json, bad-action, over-limit, wrong-version,
// silent, quit-after-hello. steps_file gets "<episode_id> <actions>" per episode.

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <thread>

using nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "random";
  std::mt19937 rng(argc > 2 ? static_cast<unsigned>(std::stoul(argv[2])) : 1u);
  std::ofstream steps_out;
  if (argc > 3) steps_out.open(argv[3]);

  auto send = [](const json& j) { std::cout << j.dump() << "\n" << std::flush; };
  auto act = [&]() -> json {
    if (mode == "stop") return {{"type", "action"}, {"discrete", "stop"}};
    if (mode == "bad-action") return {{"type", "action"}, {"discrete", "jump"}};
    if (mode == "over-limit") return {{"type", "action"}, {"continuous", {{"v", 5.0}, {"omega", 0.0}, {"duration", 1.0}}}};
    static const char* names[] = {"forward", "forward", "turn_left", "turn_right"};
    return {{"type", "action"}, {"discrete", names[rng() % 4]}};
  };

  std::string line, episode;
  std::size_t actions = 0;
  while (std::getline(std::cin, line)) {
    const json msg = json::parse(line);
    const std::string type = msg.value("type", "");
    if (type == "hello") {
      send({{"type", "hello"}, {"protocol_version", mode == "wrong-version" ? 2 : 1}});
      if (mode == "quit-after-hello") return 0;
    } else if (type == "reset") {
      episode = msg["episode_id"].get<std::string>();
      actions = 0;
      if (mode == "silent") continue;
      if (mode == "invalid-json") {
        std::cout << "{not json\n" << std::flush;
        continue;
      }
      send(act());
      ++actions;
    } else if (type == "step") {
      if (msg["done"].get<bool>()) continue;
      send(act());
      ++actions;
    } else if (type == "close") {
      if (steps_out) steps_out << episode << " " << actions << "\n" << std::flush;
    } else if (type == "bye") {
      return 0;
    }
  }
  if (mode == "silent") std::this_thread::sleep_for(std::chrono::seconds(1));
  return 0;
}
