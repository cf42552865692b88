#include <string>
#include <variant>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wmeval/error.hpp"
#include "wmeval/grpo.hpp"
#include "wmeval/json_io.hpp"
#include "wmeval/parallel.hpp"
#include "wmeval/reward.hpp"

namespace py = pybind11;
using namespace wmeval;

namespace {

json to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<long long>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::dict>(obj)) {
    json j = json::object();
    for (const auto& [k, v] : obj.cast<py::dict>()) j[py::str(k).cast<std::string>()] = to_json(v);
    return j;
  }
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    json j = json::array();
    for (const auto& v : obj) j.push_back(to_json(v));
    return j;
  }
  throw py::type_error("unsupported value of type " + py::str(py::type::of(obj)).cast<std::string>());
}

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return py::int_(j.get<long long>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list l;
      for (const auto& v : j) l.append(to_py(v));
      return l;
    }
    default: {
      py::dict d;
      for (const auto& [k, v] : j.items()) d[py::str(k)] = to_py(v);
      return d;
    }
  }
}

py::dict error_record(const std::string& kind, const std::string& message) {
  py::dict d;
  d["error"] = kind;
  d["message"] = message;
  return d;
}

py::list batch_reward(const std::vector<std::string>& responses, const py::list& ground_truths,
                      const py::object& config) {
  if (responses.size() != ground_truths.size()) {
    throw py::value_error("responses and ground_truths differ in length (" + std::to_string(responses.size()) +
                          " vs " + std::to_string(ground_truths.size()) + ")");
  }
  RewardConfig cfg;
  try {
    if (!config.is_none()) cfg = reward_config_from_json(to_json(config));
    cfg.validate();
  } catch (const Error& e) {
    throw py::value_error(e.what());
  }

  using Slot = std::variant<GroundTruth, std::pair<std::string, std::string>>;
  std::vector<Slot> labels;
  labels.reserve(responses.size());
  for (const auto& g : ground_truths) {
    try {
      labels.emplace_back(ground_truth_from_json(to_json(g)));
    } catch (const Error& e) {
      labels.emplace_back(std::make_pair(std::string(to_string(e.kind())), std::string(e.what())));
    } catch (const std::exception& e) {
      labels.emplace_back(std::make_pair(std::string("format"), std::string(e.what())));
    }
  }

  std::vector<std::variant<RewardBreakdown, std::pair<std::string, std::string>>> results(responses.size());
  {
    py::gil_scoped_release release;
    parallel_for(responses.size(), [&](std::size_t i) {
      if (const auto* gt = std::get_if<GroundTruth>(&labels[i])) {
        try {
          results[i] = total_reward(responses[i], *gt, cfg);
        } catch (const std::exception& e) {
          results[i] = std::make_pair(std::string("internal"), std::string(e.what()));
        }
      } else {
        results[i] = std::get<1>(labels[i]);
      }
    });
  }

  py::list out;
  for (const auto& r : results) {
    if (const auto* b = std::get_if<RewardBreakdown>(&r)) {
      out.append(to_py(breakdown_to_json(*b)));
    } else {
      const auto& [kind, msg] = std::get<1>(r);
      out.append(error_record(kind, msg));
    }
  }
  return out;
}

std::vector<double> batch_advantages(const std::vector<double>& rewards, std::size_t group_size) {
  if (group_size < 2) throw py::value_error("group_size must be at least 2");
  if (rewards.size() % group_size != 0) {
    throw py::value_error("length " + std::to_string(rewards.size()) + " is not divisible by group_size " +
                          std::to_string(group_size));
  }
  std::vector<double> out;
  out.reserve(rewards.size());
  for (std::size_t start = 0; start < rewards.size(); start += group_size) {
    const auto adv = group_advantages(std::span(rewards).subspan(start, group_size));
    out.insert(out.end(), adv.begin(), adv.end());
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_wmeval, m) {
  m.doc() = "Batch reward scoring and group advantages for watermark-evaluation responses";
  m.def("batch_reward", &batch_reward, py::arg("responses"), py::arg("ground_truths"),
        py::arg("config") = py::none(),
        "Score raw responses against label dicts. Returns one breakdown dict per item, or an "
        "{'error', 'message'} record for an invalid label.");
  m.def("batch_advantages", &batch_advantages, py::arg("rewards"), py::arg("group_size"),
        "Group-standardized advantages for consecutive groups of group_size rewards.");
}
