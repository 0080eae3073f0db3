#include "gsnav/mllm.hpp"

#include "gsnav/error.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <cstdlib>
#include <map>
#include <sstream>

namespace gsnav {

using nlohmann::json;

nlohmann::json MlmRequest::to_json() const {
  return {{"text_map", text_map},
          {"starting_point", starting_point},
          {"end_point", end_point},
          {"prompt_version", prompt_version},
          {"prompt", prompt}};
}

std::string build_prompt(const std::string& text_map, const std::string& starting_point, const std::string& end_point) {
  std::ostringstream p;
  p << "You are a data annotator for indoor service robots.\n"
       "Write natural-language navigation instructions, as a person would say them to a home robot, "
       "for a trajectory between a STARTING POINT and an END POINT described in the TEXT MAP.\n\n"
       "<Input>\n"
       "1. TEXT MAP: rooms, objects with their unique IDs and attributes, and spatial relations. "
       "It is the only source of truth.\n"
       "2. STARTING POINT: an object ID.\n"
       "3. END POINT: an object ID.\n\n"
       "<Task>\n"
       "The trajectory is an optimal short path found by A*. Produce 2-4 instructions for each "
       "INSTRUCTION TYPE below.\n\n"
       "<Principles>\n"
       "1. Do not invent intermediate waypoints or turns that the map does not state.\n"
       "2. Never include object IDs like chair_5; a person without the map must understand the instruction.\n"
       "3. Only mention objects, properties and relations present in or inferable from the TEXT MAP.\n"
       "4. Use everyday language and keep every instruction between 5-20 words.\n"
       "5. Vary sentence structure and vocabulary.\n"
       "6. Within a type, instructions must differ in meaning, not only in wording.\n"
       "7. Every instruction must be executable with the map alone.\n"
       "8. Each instruction must match its assigned type.\n\n"
       "<Instruction_Types>\n"
       "1. Add_Object: add a plausible object to carry so the trip has a reason.\n"
       "2. Scenario_Driven: frame the trip in a human need or situation.\n"
       "3. Relative_Relationship: identify the target through spatial terms such as next to, opposite, "
       "in front of.\n"
       "4. Attribute-based: identify the target through perceivable attributes such as color or state.\n"
       "5. Area-based: send the robot to a functional area instead of a specific object.\n\n"
       "<Output_Format>\n"
       "A JSON array of objects with keys \"instruction_type\", \"start\", \"end\", "
       "\"generated_instruction\".\n\n"
       "TEXT MAP:\n"
    << text_map << "\n"
    << "STARTING POINT: " << json(starting_point).dump() << "\n"
    << "END POINT: " << json(end_point).dump() << "\n";
  return p.str();
}

std::vector<MlmEntry> parse_mlm_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("response is not JSON: {}", e.what()));
  }
  if (j.is_object() && j.contains("instructions")) j = j["instructions"];
  if (!j.is_array()) throw SchemaError("response must be a JSON array");
  std::vector<MlmEntry> out;
  for (const auto& e : j) {
    if (!e.is_object()) throw SchemaError("response entries must be objects");
    for (const char* key : {"instruction_type", "start", "end", "generated_instruction"})
      if (!e.contains(key) || !e[key].is_string()) throw SchemaError(fmt::format("entry missing string field '{}'", key));
    out.push_back({e["instruction_type"].get<std::string>(), e["start"].get<std::string>(),
                   e["end"].get<std::string>(), e["generated_instruction"].get<std::string>()});
  }
  return out;
}

namespace {

struct MapObject {
  std::string category;
  std::string room;
  std::string attribute;
};

// Reads "- id: category | room: r | attributes: k=v, ..." lines back out of a text map.
std::map<std::string, MapObject> parse_text_map_objects(const std::string& text_map) {
  std::map<std::string, MapObject> out;
  std::istringstream in(text_map);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("- ", 0) != 0) continue;
    const auto colon = line.find(": ");
    const auto bar = line.find(" | ");
    if (colon == std::string::npos || bar == std::string::npos || colon > bar) continue;
    MapObject obj;
    const std::string id = line.substr(2, colon - 2);
    obj.category = line.substr(colon + 2, bar - colon - 2);
    const auto room_pos = line.find("room: ");
    if (room_pos != std::string::npos) {
      const auto end = line.find(" | ", room_pos);
      obj.room = line.substr(room_pos + 6, end == std::string::npos ? std::string::npos : end - room_pos - 6);
    }
    const auto attr_pos = line.find("attributes: ");
    if (attr_pos != std::string::npos) {
      const auto eq = line.find('=', attr_pos);
      if (eq != std::string::npos) {
        const auto end = line.find_first_of(",|", eq);
        obj.attribute = line.substr(eq + 1, end == std::string::npos ? std::string::npos : end - eq - 1);
        while (!obj.attribute.empty() && obj.attribute.back() == ' ') obj.attribute.pop_back();
      }
    }
    out.emplace(id, obj);
  }
  return out;
}

std::string spaced(std::string s) {
  for (char& c : s)
    if (c == '_') c = ' ';
  return s;
}

}  // namespace

std::string StubMlmClient::complete(const MlmRequest& request) {
  std::size_t call = 0;
  {
    std::lock_guard lock(mu_);
    call = calls_++;
  }
  if (!canned_.empty()) return canned_[std::min(call, canned_.size() - 1)];

  const auto objects = parse_text_map_objects(request.text_map);
  auto lookup = [&](const std::string& id) {
    const auto it = objects.find(id);
    return it == objects.end() ? MapObject{"object", "room", ""} : it->second;
  };
  const MapObject s = lookup(request.starting_point);
  const MapObject e = lookup(request.end_point);
  const std::string sc = spaced(s.category);
  const std::string ec = spaced(e.category);
  const std::string room = e.room.empty() ? std::string("room") : spaced(e.room);
  const std::string attr = e.attribute.empty() ? std::string("nearest") : e.attribute;

  const std::vector<std::pair<std::string, std::string>> items = {
      {"Add_Object", fmt::format("Please carry the book from the {} to the {}.", sc, ec)},
      {"Add_Object", fmt::format("Take this cup from the {} over to the {}.", sc, ec)},
      {"Add_Object", fmt::format("Bring the towel by the {} and leave it at the {}.", sc, ec)},
      {"Scenario_Driven", fmt::format("I want to rest for a while, please take me to the {}.", ec)},
      {"Scenario_Driven", fmt::format("I need something from the {}, please go there now.", ec)},
      {"Scenario_Driven", fmt::format("Guests are arriving soon, so head over to the {} please.", ec)},
      {"Relative_Relationship", fmt::format("Move to the {} that is closest to the {}.", ec, sc)},
      {"Relative_Relationship", fmt::format("Starting beside the {}, go to the {} in the {}.", sc, ec, room)},
      {"Relative_Relationship", fmt::format("Walk to the {} rather than the one farther away.", ec)},
      {"Attribute-based", fmt::format("Find the {} {} and stop in front of it.", attr, ec)},
      {"Attribute-based", fmt::format("Go to the {} {} in the {}.", attr, ec, room)},
      {"Attribute-based", fmt::format("Look for the {} that is {} and walk there.", ec, attr)},
      {"Area-based", fmt::format("Walk from here to the {} area.", room)},
      {"Area-based", fmt::format("Head over to the {} and wait there.", room)},
      {"Area-based", fmt::format("Please make your way into the {} now.", room)},
  };
  json out = json::array();
  for (const auto& [type, text] : items)
    out.push_back({{"instruction_type", type},
                   {"start", request.starting_point},
                   {"end", request.end_point},
                   {"generated_instruction", text}});
  return out.dump();
}

std::size_t StubMlmClient::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::string HttpMlmClient::complete(const MlmRequest& request) {
  httplib::Client cli(config_.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (const char* token = std::getenv(config_.token_env.c_str()); token != nullptr && *token != '\0')
    headers.emplace("Authorization", fmt::format("Bearer {}", token));

  const std::string body = request.to_json().dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
    auto res = cli.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
      continue;
    }
    if (res->status != 200) throw TransportError(fmt::format("MLLM service returned HTTP {}", res->status));
    return res->body;
  }
  throw TransportError(fmt::format("MLLM service unreachable: {}", last_error));
}

}  // namespace gsnav
