#include "igss/workflow/bus.hpp"

#include "igss/error.hpp"

#include <algorithm>

namespace igss::workflow {

std::string_view to_string(Layer l) {
  switch (l) {
    case Layer::Human: return "Human";
    case Layer::Hardware: return "Hardware";
    case Layer::Firmware: return "Firmware";
    case Layer::Software: return "Software";
  }
  return "?";
}

Layer parse_layer(std::string_view s) {
  for (Layer l : {Layer::Human, Layer::Hardware, Layer::Firmware, Layer::Software}) {
    if (to_string(l) == s) return l;
  }
  throw Error(ErrorCode::ParseError, "unknown layer '" + std::string(s) + "'");
}

ModuleHandle ModuleRegistry::register_module(std::string name, Layer layer, std::vector<std::string> topics,
                                             Handler handler) {
  if (name.empty()) throw Error(ErrorCode::InvalidArgument, "module name is empty");
  std::lock_guard lock(mu_);
  for (const auto& m : modules_) {
    if (m.name == name) throw Error(ErrorCode::DuplicateName, "module '" + name + "' already registered");
  }
  modules_.push_back({name, layer, {topics.begin(), topics.end()}, std::move(handler), {}});
  return {modules_.size() - 1, std::move(name)};
}

void ModuleRegistry::declare_topic(const std::string& topic, std::set<Layer> publishers) {
  std::lock_guard lock(mu_);
  topic_layers_[topic] = std::move(publishers);
}

std::uint64_t ModuleRegistry::enqueue(std::size_t source, std::string topic, Payload payload) {
  const Module& src = modules_[source];
  if (auto it = topic_layers_.find(topic); it != topic_layers_.end() && !it->second.count(src.layer)) {
    throw Error(ErrorCode::LayerViolation, std::string(to_string(src.layer)) + " module '" + src.name +
                                               "' may not publish on '" + topic + "'");
  }
  const std::uint64_t seq = next_sequence_++;
  queue_.push_back({std::move(topic), std::move(payload), seq, src.name});
  return seq;
}

std::uint64_t ModuleRegistry::publish(const ModuleHandle& source, std::string topic, Payload payload) {
  std::lock_guard lock(mu_);
  if (source.index >= modules_.size() || modules_[source.index].name != source.name) {
    throw Error(ErrorCode::UnknownModule, "unknown module '" + source.name + "'");
  }
  return enqueue(source.index, std::move(topic), std::move(payload));
}

std::uint64_t ModuleRegistry::publish(std::string_view source_name, std::string topic, Payload payload) {
  std::lock_guard lock(mu_);
  auto it = std::find_if(modules_.begin(), modules_.end(), [&](const Module& m) { return m.name == source_name; });
  if (it == modules_.end()) throw Error(ErrorCode::UnknownModule, "unknown module '" + std::string(source_name) + "'");
  return enqueue(static_cast<std::size_t>(it - modules_.begin()), std::move(topic), std::move(payload));
}

std::size_t ModuleRegistry::dispatch() {
  std::lock_guard serial(dispatch_mu_);
  std::vector<BusMessage> batch;
  {
    std::lock_guard lock(mu_);
    batch.swap(queue_);
  }
  // Sequence numbers are assigned under the lock in queue order, so the batch is already sorted.
  for (const auto& msg : batch) {
    std::vector<Handler> handlers;
    {
      std::lock_guard lock(mu_);
      for (auto& m : modules_) {
        if (!m.topics.count(msg.topic)) continue;
        m.inbox.push_back(msg);
        if (m.handler) handlers.push_back(m.handler);
      }
    }
    for (const auto& h : handlers) h(msg);
  }
  return batch.size();
}

std::vector<BusMessage> ModuleRegistry::inbox(const ModuleHandle& module) const {
  std::lock_guard lock(mu_);
  if (module.index >= modules_.size() || modules_[module.index].name != module.name) {
    throw Error(ErrorCode::UnknownModule, "unknown module '" + module.name + "'");
  }
  return modules_[module.index].inbox;
}

std::size_t ModuleRegistry::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

std::size_t ModuleRegistry::module_count() const {
  std::lock_guard lock(mu_);
  return modules_.size();
}

}  // namespace igss::workflow
