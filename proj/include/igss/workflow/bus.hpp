#pragma once

#include "igss/geom/transform.hpp"
#include "igss/registration/point_registration.hpp"
#include "igss/workflow/radiation.hpp"
#include "igss/workflow/session.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace igss::workflow {

enum class Layer { Human, Hardware, Firmware, Software };

std::string_view to_string(Layer l);
Layer parse_layer(std::string_view s);

using Payload = std::variant<std::monostate, Event, AcquisitionEntry, reg::RegistrationResult,
                             geom::RigidTransform, std::string>;

struct BusMessage {
  std::string topic;
  Payload payload;
  std::uint64_t sequence = 0;
  std::string source_module;
};

using Handler = std::function<void(const BusMessage&)>;

struct ModuleHandle {
  std::size_t index = 0;
  std::string name;
};

// Publishers may call from any thread. Delivery happens in dispatch(), one
// message at a time in sequence order.
class ModuleRegistry {
 public:
  ModuleHandle register_module(std::string name, Layer layer, std::vector<std::string> topics,
                               Handler handler = {});

  // Restrict a topic to publishers from the given layers. Undeclared topics are open.
  void declare_topic(const std::string& topic, std::set<Layer> publishers);

  std::uint64_t publish(const ModuleHandle& source, std::string topic, Payload payload);
  std::uint64_t publish(std::string_view source_name, std::string topic, Payload payload);

  // Deliver everything queued so far. Returns the number of messages drained.
  std::size_t dispatch();

  std::vector<BusMessage> inbox(const ModuleHandle& module) const;
  std::size_t pending() const;
  std::size_t module_count() const;

 private:
  struct Module {
    std::string name;
    Layer layer;
    std::set<std::string> topics;
    Handler handler;
    std::vector<BusMessage> inbox;
  };

  std::uint64_t enqueue(std::size_t source, std::string topic, Payload payload);

  mutable std::mutex mu_;
  std::mutex dispatch_mu_;
  std::vector<Module> modules_;
  std::map<std::string, std::set<Layer>, std::less<>> topic_layers_;
  std::vector<BusMessage> queue_;
  std::uint64_t next_sequence_ = 1;
};

}  // namespace igss::workflow
