#ifndef ACFLOW_CHECKPOINT_HPP
#define ACFLOW_CHECKPOINT_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "acflow/nets.hpp"
#include "acflow/trainer.hpp"

// Checkpoint format: magic "ACFLOWCK", uint32 little-endian header length,
// JSON header (arch descriptors, seed, iteration), then the three parameter
// vectors as raw 64-bit little-endian doubles (v0, g, u in order).

namespace acflow {

inline nlohmann::json arch_to_json(const NetworkArch& a) {
  nlohmann::json j;
  j["input_kind"] = a.input_kind == InputKind::kTorus ? "torus" : "euclidean";
  j["state_dim"] = a.state_dim;
  j["output_dim"] = a.output_dim;
  j["hidden_width"] = a.hidden_width;
  j["num_blocks"] = a.num_blocks;
  j["include_time"] = a.include_time;
  j["num_freq"] = a.num_freq;
  j["period"] = a.period;
  j["time_scale"] = a.time_scale;
  j["output_transform"] =
      a.output_transform == OutputTransform::kSoftplus ? "softplus" : "identity";
  return j;
}

inline NetworkArch arch_from_json(const nlohmann::json& j) {
  NetworkArch a;
  a.input_kind = j.at("input_kind").get<std::string>() == "torus"
                     ? InputKind::kTorus
                     : InputKind::kEuclidean;
  a.state_dim = j.at("state_dim").get<int>();
  a.output_dim = j.at("output_dim").get<int>();
  a.hidden_width = j.at("hidden_width").get<int>();
  a.num_blocks = j.at("num_blocks").get<int>();
  a.include_time = j.at("include_time").get<bool>();
  a.num_freq = j.at("num_freq").get<int>();
  a.period = j.at("period").get<double>();
  a.time_scale = j.at("time_scale").get<double>();
  a.output_transform = j.at("output_transform").get<std::string>() == "softplus"
                           ? OutputTransform::kSoftplus
                           : OutputTransform::kIdentity;
  return a;
}

inline void save_checkpoint(const std::string& path, const TrainerState& st,
                            std::uint64_t seed, int iteration) {
  nlohmann::json header;
  header["version"] = 1;
  header["seed"] = seed;
  header["iteration"] = iteration;
  header["v0"] = arch_to_json(st.v0.arch);
  header["g"] = arch_to_json(st.g.arch);
  header["u"] = arch_to_json(st.u.arch);
  header["counts"] = {st.v0.params.size(), st.g.params.size(),
                      st.u.params.size()};
  const std::string hdr = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write("ACFLOWCK", 8);
  const std::uint32_t len = static_cast<std::uint32_t>(hdr.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(hdr.data(), hdr.size());
  for (const Vec* p : {&st.v0.params, &st.g.params, &st.u.params})
    out.write(reinterpret_cast<const char*>(p->data()),
              static_cast<std::streamsize>(p->size() * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

struct Checkpoint {
  std::uint64_t seed = 0;
  int iteration = 0;
  Approximator v0, g, u;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != "ACFLOWCK")
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string hdr(len, '\0');
  in.read(hdr.data(), len);
  const nlohmann::json header = nlohmann::json::parse(hdr);

  Checkpoint ck;
  ck.seed = header.at("seed").get<std::uint64_t>();
  ck.iteration = header.at("iteration").get<int>();
  ck.v0.arch = arch_from_json(header.at("v0"));
  ck.g.arch = arch_from_json(header.at("g"));
  ck.u.arch = arch_from_json(header.at("u"));
  const auto counts = header.at("counts");
  Approximator* nets[3] = {&ck.v0, &ck.g, &ck.u};
  for (int i = 0; i < 3; ++i) {
    const auto count = counts.at(i).get<Eigen::Index>();
    if (count != nets[i]->arch.param_count())
      throw std::runtime_error("load_checkpoint: arch/param count mismatch");
    nets[i]->params.resize(count);
    in.read(reinterpret_cast<char*>(nets[i]->params.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return ck;
}

}  // namespace acflow

#endif  // ACFLOW_CHECKPOINT_HPP
